/** Client-side chat session state.
 *
 * The service is stateless: the full turn list is resent on every request.
 * Reactions become synthetic seeker turns so they shape the next round
 * through the same conversational channel as typed input. A single request
 * may be in flight at a time.
 */

import type { ApiClient } from './api.js';
import type { Reaction, RecommendResponse, Turn } from './types.js';

export type TurnOrigin = 'user' | 'reaction' | 'summary';

export interface SessionTurn extends Turn {
  origin: TurnOrigin;
  itemId?: string;
  reaction?: Reaction;
}

export interface SessionExport {
  version: 1;
  session_id: string;
  k: number;
  turns: SessionTurn[];
  last_response: RecommendResponse | null;
}

export const MIN_K = 1;
export const MAX_K = 20;

export function reactionText(
  reaction: Reaction,
  title: string,
  year: number | null,
): string {
  const name = year === null ? title : `${title} (${year})`;
  return reaction === 'liked' ? `I liked ${name}.` : `I've already seen ${name}.`;
}

function summaryText(response: RecommendResponse): string {
  const top = response.items.slice(0, 3).map((item) => item.title);
  return top.length ? `You might like: ${top.join(', ')}.` : 'No recommendations found.';
}

export class ChatSession {
  sessionId: string;
  k: number;
  turns: SessionTurn[] = [];
  lastResponse: RecommendResponse | null = null;
  inFlight = false;
  error: string | null = null;

  constructor(sessionId: string, k = 10) {
    this.sessionId = sessionId;
    this.k = clampK(k);
  }

  setK(k: number): void {
    this.k = clampK(k);
  }

  /** Append the typed seeker turn and request recommendations.
   *
   * On failure the turn is rolled back (the caller restores the draft) and
   * the error is kept on the session for inline rendering.
   */
  async sendTurn(client: ApiClient, text: string): Promise<RecommendResponse> {
    if (this.inFlight) throw new Error('a request is already in flight');
    const trimmed = text.trim();
    if (!trimmed) throw new Error('cannot send an empty turn');

    const turn: SessionTurn = { speaker: 'seeker', text: trimmed, origin: 'user' };
    this.turns.push(turn);
    this.inFlight = true;
    this.error = null;
    try {
      const response = await client.recommend({
        session_id: this.sessionId,
        turns: this.turns.map(({ speaker, text: t }) => ({ speaker, text: t })),
        k: this.k,
      });
      this.lastResponse = response;
      this.turns.push({
        speaker: 'recommender',
        text: summaryText(response),
        origin: 'summary',
      });
      return response;
    } catch (err) {
      this.turns.pop(); // roll back; the draft stays editable
      this.error = err instanceof Error ? err.message : String(err);
      throw err;
    } finally {
      this.inFlight = false;
    }
  }

  /** React to a recommended item; the reaction is a synthetic seeker turn. */
  markItem(itemId: string, reaction: Reaction): SessionTurn {
    const item = this.lastResponse?.items.find((i) => i.item_id === itemId);
    if (!item) throw new Error(`item ${itemId} is not in the last response`);
    const turn: SessionTurn = {
      speaker: 'seeker',
      text: reactionText(reaction, item.title, item.year),
      origin: 'reaction',
      itemId,
      reaction,
    };
    this.turns.push(turn);
    return turn;
  }

  /** Remove a not-yet-sent reaction turn (only trailing reactions qualify). */
  undoReaction(itemId: string): boolean {
    for (let i = this.turns.length - 1; i >= 0; i--) {
      const turn = this.turns[i]!;
      if (turn.origin !== 'reaction') break; // older reactions were already sent
      if (turn.itemId === itemId) {
        this.turns.splice(i, 1);
        return true;
      }
    }
    return false;
  }

  /** Ids of items with a pending (trailing, unsent) reaction. */
  pendingReactions(): Map<string, Reaction> {
    const pending = new Map<string, Reaction>();
    for (let i = this.turns.length - 1; i >= 0; i--) {
      const turn = this.turns[i]!;
      if (turn.origin !== 'reaction') break;
      if (turn.itemId && turn.reaction) pending.set(turn.itemId, turn.reaction);
    }
    return pending;
  }

  export(): SessionExport {
    return {
      version: 1,
      session_id: this.sessionId,
      k: this.k,
      turns: structuredClone(this.turns),
      last_response: structuredClone(this.lastResponse),
    };
  }

  static import(data: SessionExport): ChatSession {
    if (data.version !== 1) throw new Error(`unsupported session version ${data.version}`);
    if (!Array.isArray(data.turns)) throw new Error('malformed session export: turns');
    const session = new ChatSession(data.session_id, data.k);
    session.turns = structuredClone(data.turns);
    session.lastResponse = structuredClone(data.last_response);
    return session;
  }
}

function clampK(k: number): number {
  if (!Number.isFinite(k)) return 10;
  return Math.min(MAX_K, Math.max(MIN_K, Math.round(k)));
}
