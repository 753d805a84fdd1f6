"""Offline evaluation: top-k ranking metrics over held-out conversations.

Each evaluable conversation yields one example: the final recommender turn's
resolved mentions are the ground truth and every prior turn is context.
Hit rate is any-hit; NDCG uses binary relevance with the ideal DCG truncated
at the truth-set size, so N@1 coincides with H@1 exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .corpus import Conversation, ConversationTurn
from .errors import DataError
from .ranker import ScoredRanking


@dataclass
class EvalExample:
    conversation_id: str
    context: list[ConversationTurn]
    truth: set[str]

    def __post_init__(self):
        if not self.truth:
            raise DataError(f"example {self.conversation_id}: empty ground truth")


def build_eval_examples(
    conversations: Iterable[Conversation], per_turn: bool = False
) -> tuple[list[EvalExample], int]:
    """(examples, n_skipped). Default: one example per conversation, targeting
    the final recommender turn; per_turn targets every recommender turn with
    resolved mentions."""
    examples: list[EvalExample] = []
    n_skipped = 0
    for conv in conversations:
        if per_turn:
            found = False
            for idx, turn in enumerate(conv.turns):
                if turn.speaker == "recommender" and turn.mentioned_items and idx >= 1:
                    examples.append(
                        EvalExample(
                            f"{conv.conversation_id}#t{idx}",
                            conv.turns[:idx],
                            set(turn.mentioned_items),
                        )
                    )
                    found = True
            if not found:
                n_skipped += 1
            continue
        idx = conv.final_recommender_turn_index()
        if idx is None or idx < 1 or not conv.turns[idx].mentioned_items:
            n_skipped += 1
            continue
        examples.append(
            EvalExample(conv.conversation_id, conv.turns[:idx], set(conv.turns[idx].mentioned_items))
        )
    return examples, n_skipped


def hit_at_k(ranking: list[str], truth: set[str], k: int) -> float:
    """1 if any ground-truth item appears in the top k, else 0."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    return 1.0 if any(item in truth for item in ranking[:k]) else 0.0


def ndcg_at_k(ranking: list[str], truth: set[str], k: int) -> float:
    """Binary-relevance NDCG; ideal DCG truncates at min(k, |truth|)."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    dcg = sum(
        1.0 / math.log2(r + 2) for r, item in enumerate(ranking[:k]) if item in truth
    )
    idcg = sum(1.0 / math.log2(r + 2) for r in range(min(k, len(truth))))
    return dcg / idcg


@dataclass
class MetricsReport:
    metrics: dict[str, dict]  # metric name -> {"mean": float, "se": float | None}
    n_examples: int
    fallback_rate: float
    metadata: dict = field(default_factory=dict)

    def mean(self, name: str) -> float:
        return self.metrics[name]["mean"]

    def to_dict(self) -> dict:
        return {
            "metrics": self.metrics,
            "n_examples": self.n_examples,
            "fallback_rate": self.fallback_rate,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        """Canonical serialization: replay-mode runs are byte-identical."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "MetricsReport":
        return cls(
            metrics=obj["metrics"],
            n_examples=obj["n_examples"],
            fallback_rate=obj["fallback_rate"],
            metadata=obj.get("metadata", {}),
        )


def aggregate(
    per_example: list[dict[str, float]],
    fallback_flags: list[bool] | None = None,
    metadata: dict | None = None,
) -> MetricsReport:
    """Mean and standard error of the mean per metric across examples."""
    if not per_example:
        raise DataError("cannot aggregate zero examples")
    names = sorted(per_example[0])
    n = len(per_example)
    metrics: dict[str, dict] = {}
    for name in names:
        values = [ex[name] for ex in per_example]
        mean = sum(values) / n
        if n >= 2:
            var = sum((v - mean) ** 2 for v in values) / (n - 1)
            se = math.sqrt(var) / math.sqrt(n)
        else:
            se = None
        metrics[name] = {"mean": mean, "se": se}
    fallback_rate = (
        sum(1 for f in fallback_flags if f) / n if fallback_flags is not None else 0.0
    )
    return MetricsReport(metrics, n, fallback_rate, metadata or {})


def evaluate_examples(
    examples: list[EvalExample],
    ranking_fn: Callable[[EvalExample, int], ScoredRanking],
    ks: tuple[int, ...] = (1, 5, 10),
    metadata: dict | None = None,
) -> MetricsReport:
    """Run a pipeline over examples and aggregate H@k / N@k for each k."""
    if not examples:
        raise DataError("no evaluable examples")
    k_max = max(ks)
    per_example: list[dict[str, float]] = []
    fallback_flags: list[bool] = []
    for example in examples:
        ranking = ranking_fn(example, k_max)
        ids = ranking.item_ids()
        row: dict[str, float] = {}
        for k in ks:
            row[f"hit@{k}"] = hit_at_k(ids, example.truth, k)
            row[f"ndcg@{k}"] = ndcg_at_k(ids, example.truth, k)
        per_example.append(row)
        fallback_flags.append(ranking.fallback_used)
    return aggregate(per_example, fallback_flags, metadata)


def compare_runs(report_a: MetricsReport, report_b: MetricsReport) -> dict[str, float | None]:
    """Per-metric relative improvement of b over a, in percent; None when a=0."""
    if set(report_a.metrics) != set(report_b.metrics):
        raise DataError("reports cover different metric grids")
    if report_a.n_examples != report_b.n_examples:
        raise DataError("reports cover different example sets")
    out: dict[str, float | None] = {}
    for name in sorted(report_a.metrics):
        a = report_a.mean(name)
        b = report_b.mean(name)
        out[name] = None if a == 0 else 100.0 * (b - a) / a
    return out
