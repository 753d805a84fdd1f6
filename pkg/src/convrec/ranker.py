"""Embedding-based item ranking and the end-to-end recommendation pipeline.

LLM-suggested items are compared to the full candidate set by cosine
similarity; each catalog item takes its maximum similarity to any suggestion
(max pooling) and the catalog is sorted by that score. Suggested items
therefore score 1.0 and surface first, in LLM output order; the rest follow
as collaborative neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Catalog, ConversationTurn
from .embeddings.matrix import EmbeddingMatrix
from .errors import DataError
from .llm_gateway import Gateway, PromptTemplate, build_prompt, parse_recommendations
from .matcher import MatchResult, TitleIndex, match_items

LLM_MATCHED = "llm_matched"
CF_NEIGHBOR = "cf_neighbor"
FALLBACK = "fallback"


@dataclass(frozen=True)
class RankedItem:
    item_id: str
    score: float
    provenance: str


@dataclass
class ScoredRanking:
    entries: list[RankedItem]
    k: int
    fallback_used: bool = False
    diagnostics: dict = field(default_factory=dict)

    def item_ids(self) -> list[str]:
        return [e.item_id for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "fallback_used": self.fallback_used,
            "diagnostics": self.diagnostics,
            "entries": [
                {"item_id": e.item_id, "score": e.score, "provenance": e.provenance}
                for e in self.entries
            ],
        }


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(norms > 0.0, m / norms, 0.0)
    return out


def similarity_matrix(e_llm: np.ndarray, e_all: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities, shape (m, |V|); zero-norm rows score 0."""
    e_llm = np.atleast_2d(np.asarray(e_llm, dtype=np.float64))
    e_all = np.atleast_2d(np.asarray(e_all, dtype=np.float64))
    if e_llm.shape[0] < 1:
        raise DataError("similarity_matrix needs at least one suggestion embedding")
    if e_llm.shape[1] != e_all.shape[1]:
        raise DataError(
            f"dimension mismatch: suggestions d={e_llm.shape[1]}, catalog d={e_all.shape[1]}"
        )
    return _unit_rows(e_llm) @ _unit_rows(e_all).T


def max_pool_scores(s: np.ndarray) -> np.ndarray:
    """Column-wise max: each catalog item's best similarity to any suggestion."""
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0:
        raise DataError("cannot pool an empty similarity matrix")
    return s.max(axis=0)


def rank(
    scores: np.ndarray,
    item_ids: list[str],
    llm_order: list[str],
    k: int,
    provenance_default: str = CF_NEIGHBOR,
) -> ScoredRanking:
    """Sort by score descending; ties resolve to LLM output order for
    suggested items, then ascending item_id."""
    scores = np.asarray(scores, dtype=np.float64)
    if len(scores) != len(item_ids):
        raise DataError(f"{len(scores)} scores for {len(item_ids)} items")
    llm_pos = {item_id: pos for pos, item_id in enumerate(llm_order)}
    n_llm = len(llm_order)

    ids_arr = np.asarray(item_ids)
    if n_llm:
        pos_arr = np.fromiter(
            (llm_pos.get(i, n_llm) for i in item_ids), dtype=np.int64, count=len(item_ids)
        )
    else:
        pos_arr = np.zeros(len(item_ids), dtype=np.int64)
    # lexsort keys run least- to most-significant
    order = np.lexsort((ids_arr, pos_arr, -scores))
    top = order[: max(0, min(k, len(item_ids)))]
    entries = [
        RankedItem(
            str(item_ids[i]),
            float(scores[i]),
            LLM_MATCHED if item_ids[i] in llm_pos else provenance_default,
        )
        for i in top
    ]
    return ScoredRanking(entries, k)


def popularity_ranking(
    item_ids: list[str], popularity: dict[str, float] | None, k: int
) -> ScoredRanking:
    """Fallback order when no LLM suggestion lands in the candidate set."""
    counts = np.array([float((popularity or {}).get(i, 0.0)) for i in item_ids])
    ranking = rank(counts, item_ids, [], k, provenance_default=FALLBACK)
    ranking.fallback_used = True
    return ranking


class Recommender:
    """Catalog + embeddings + gateway wired into the full pipeline."""

    def __init__(
        self,
        catalog: Catalog,
        embeddings: EmbeddingMatrix,
        gateway: Gateway,
        template: PromptTemplate | None = None,
        candidate_set: set[str] | None = None,
        popularity: dict[str, float] | None = None,
    ):
        self.catalog = catalog
        self.embeddings = embeddings
        self.gateway = gateway
        self.template = template or PromptTemplate()
        self.title_index = TitleIndex(catalog)
        self.popularity = popularity
        # the candidate set is restricted to items that have embedding rows
        ids = candidate_set if candidate_set is not None else set(catalog.by_id)
        self.candidate_ids = [i for i in embeddings.item_ids if i in ids]
        if not self.candidate_ids:
            raise DataError("no catalog item has an embedding row")
        self.candidate_vectors = embeddings.rows(self.candidate_ids)
        self._candidate_pos = {i: p for p, i in enumerate(self.candidate_ids)}
        # artifacts are immutable for the process lifetime: pre-normalize once
        self._unit_candidates = _unit_rows(self.candidate_vectors)
        self._ids_arr = np.array(self.candidate_ids)

    def recommend(self, context: list[ConversationTurn], k: int) -> ScoredRanking:
        prompt = build_prompt(context, self.template)
        response = self.gateway.complete(prompt)
        parsed = parse_recommendations(response, n_max=self.template.n_candidates)
        match = match_items(
            parsed.recommendations,
            self.catalog,
            candidate_set=set(self.candidate_ids),
            index=self.title_index,
        )
        ranking = self.rank_candidates(match, k)
        ranking.diagnostics = {
            "n_parsed": len(parsed.recommendations),
            "n_unparsed_lines": parsed.n_unparsed_lines,
            **match.diagnostics(),
        }
        return ranking

    def rank_candidates(self, match: MatchResult, k: int) -> ScoredRanking:
        llm_ids = match.item_ids
        if not llm_ids:
            ranking = popularity_ranking(self.candidate_ids, self.popularity, k)
            return ranking
        llm_vectors = self.embeddings.rows(llm_ids)
        sims = _unit_rows(llm_vectors) @ self._unit_candidates.T
        scores = max_pool_scores(sims)
        # a nonzero vector's self-similarity is exactly 1; pin it so the
        # LLM-position tie-break is not defeated by float rounding
        nonzero = np.linalg.norm(llm_vectors, axis=1) > 0.0
        for item_id, has_norm in zip(llm_ids, nonzero):
            if has_norm:
                scores[self._candidate_pos[item_id]] = 1.0
        return rank(scores, self._ids_arr, llm_ids, k)


def recommend(
    context: list[ConversationTurn],
    embeddings: EmbeddingMatrix,
    gateway: Gateway,
    catalog: Catalog,
    k: int,
    template: PromptTemplate | None = None,
    candidate_set: set[str] | None = None,
    popularity: dict[str, float] | None = None,
) -> ScoredRanking:
    """One-shot pipeline run; build a Recommender for repeated calls."""
    rec = Recommender(catalog, embeddings, gateway, template, candidate_set, popularity)
    return rec.recommend(context, k)
