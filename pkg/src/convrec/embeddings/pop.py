"""Popularity backbone: context-free interaction counts."""

from __future__ import annotations

import numpy as np

from ..corpus import InteractionSequence
from .base import Model, sequences_to_index_lists
from .config import TrainingConfig
from .matrix import EmbeddingMatrix


class PopModel(Model):
    backbone = "pop"

    def __init__(self, item_ids: list[str], config: TrainingConfig, counts: np.ndarray):
        super().__init__(item_ids, config)
        self.counts = counts.astype(np.float64)

    @property
    def popularity_scores(self) -> dict[str, int]:
        return {item_id: int(c) for item_id, c in zip(self.item_ids, self.counts)}

    def embedding_matrix(self) -> EmbeddingMatrix:
        # counts as a single-column matrix: no geometry is fabricated, and
        # scores remain derivable from the "embedding"
        return EmbeddingMatrix(self.item_ids, self.counts.reshape(-1, 1))

    def next_item_scores(self, prefix: list[str]) -> np.ndarray:
        self.resolve_prefix(prefix)  # validates, result unused: scores are context-free
        return self.counts.copy()


def train_pop(
    sequences: list[InteractionSequence], item_ids: list[str], config: TrainingConfig
) -> PopModel:
    model = PopModel(item_ids, config, np.zeros(len(item_ids)))
    for seq in sequences_to_index_lists(sequences, model.index, min_len=1):
        np.add.at(model.counts, seq, 1.0)
    model.loss_history = [0.0] * config.epochs  # nothing iterative to optimize
    return model
