"""Ranking pipeline variants for offline comparison.

bridge   - full pipeline: LLM suggestions re-ranked by embedding similarity
llm-only - LLM suggestions in output order, padded by popularity
cf-only  - next-item scores from the trained backbone over context mentions
pop      - popularity alone
"""

from __future__ import annotations

import numpy as np

from .corpus import Catalog
from .embeddings.base import Model
from .errors import DataError
from .evaluator import EvalExample
from .llm_gateway import Gateway, PromptTemplate, build_prompt, parse_recommendations
from .matcher import TitleIndex, match_items
from .ranker import Recommender, ScoredRanking, popularity_ranking, rank

PIPELINES = ("bridge", "llm-only", "cf-only", "pop")


def bridge_pipeline(recommender: Recommender):
    def run(example: EvalExample, k: int) -> ScoredRanking:
        return recommender.recommend(example.context, k)

    return run


def llm_only_pipeline(
    catalog: Catalog,
    gateway: Gateway,
    candidate_ids: list[str],
    popularity: dict[str, float] | None = None,
    template: PromptTemplate | None = None,
):
    """LLM output order is the ranking; the tail is filled by popularity so
    every k is defined. Popularity is squashed under 0.5 so no padding item
    can outrank a matched suggestion."""
    template = template or PromptTemplate()
    index = TitleIndex(catalog)
    candidate_set = set(candidate_ids)
    pop = popularity or {}
    max_count = max(pop.values(), default=0.0) or 1.0

    def run(example: EvalExample, k: int) -> ScoredRanking:
        prompt = build_prompt(example.context, template)
        parsed = parse_recommendations(gateway.complete(prompt), template.n_candidates)
        match = match_items(parsed.recommendations, catalog, candidate_set, index)
        llm_ids = match.item_ids
        if not llm_ids:
            return popularity_ranking(candidate_ids, popularity, k)
        llm_set = set(llm_ids)
        scores = np.array(
            [1.0 if i in llm_set else 0.5 * pop.get(i, 0.0) / max_count for i in candidate_ids]
        )
        return rank(scores, candidate_ids, llm_ids, k)

    return run


def cf_only_pipeline(
    model: Model,
    candidate_ids: list[str],
    popularity: dict[str, float] | None = None,
):
    """Context mentions (seeker and recommender turns alike) form the
    interaction prefix; conversations without mentions fall back to
    popularity."""
    candidate_index = {i: pos for pos, i in enumerate(model.item_ids)}
    keep = [candidate_index[i] for i in candidate_ids if i in candidate_index]
    if len(keep) != len(candidate_ids):
        raise DataError("cf-only pipeline: candidate items missing from the model")

    def run(example: EvalExample, k: int) -> ScoredRanking:
        prefix: list[str] = []
        for turn in example.context:
            for item in turn.mentioned_items:
                if not prefix or prefix[-1] != item:
                    prefix.append(item)
        known = [i for i in prefix if i in candidate_index]
        if not known:
            return popularity_ranking(candidate_ids, popularity, k)
        scores = model.next_item_scores(known)[keep]
        return rank(scores, candidate_ids, [], k)

    return run


def pop_pipeline(candidate_ids: list[str], popularity: dict[str, float]):
    from .ranker import FALLBACK

    counts = np.array([popularity.get(i, 0.0) for i in candidate_ids])

    def run(example: EvalExample, k: int) -> ScoredRanking:
        # popularity is the method here, not a fallback event
        return rank(counts, candidate_ids, [], k, provenance_default=FALLBACK)

    return run


def popularity_from_sequences(sequences) -> dict[str, float]:
    counts: dict[str, float] = {}
    for seq in sequences:
        for item in seq.items:
            counts[item] = counts.get(item, 0.0) + 1.0
    return counts
