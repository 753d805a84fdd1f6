/** Wire types for the /v1 recommendation API. */

export type Speaker = 'seeker' | 'recommender';

export interface Turn {
  speaker: Speaker;
  text: string;
}

export interface RecommendRequest {
  session_id: string;
  turns: Turn[];
  k: number;
}

export type Provenance = 'llm_matched' | 'cf_neighbor' | 'fallback';

export interface RecommendedItem {
  item_id: string;
  title: string;
  year: number | null;
  score: number;
  provenance: Provenance;
}

export interface RecommendResponse {
  items: RecommendedItem[];
  fallback_used: boolean;
  diagnostics: {
    n_parsed: number;
    n_matched: number;
    n_ambiguous: number;
  };
}

export interface SearchItem {
  item_id: string;
  title: string;
  year: number | null;
}

export type Reaction = 'liked' | 'seen';
