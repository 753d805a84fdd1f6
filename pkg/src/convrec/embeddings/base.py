"""Shared machinery for embedding backbones."""

from __future__ import annotations

import numpy as np

from ..corpus import InteractionSequence
from ..errors import DataError
from .config import TrainingConfig
from .matrix import EmbeddingMatrix


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], dim: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(dim)
    return rng.uniform(-bound, bound, size=shape)


class Model:
    """A trained backbone: embeddings plus next-item scoring over the catalog."""

    backbone = "?"

    def __init__(self, item_ids: list[str], config: TrainingConfig):
        self.item_ids = list(item_ids)
        self.index = {item_id: i for i, item_id in enumerate(self.item_ids)}
        self.config = config
        self.loss_history: list[float] = []

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    def resolve_prefix(self, prefix: list[str]) -> list[int]:
        """Map prefix ids to row indices, skipping unknown items."""
        if not prefix:
            raise DataError("prefix must be non-empty")
        indices = [self.index[i] for i in prefix if i in self.index]
        if not indices:
            raise DataError("no prefix item is known to the model")
        return indices

    def embedding_matrix(self) -> EmbeddingMatrix:
        raise NotImplementedError

    def next_item_scores(self, prefix: list[str]) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict[str, np.ndarray]:
        """Trainable parameters, for the finite-difference gradient check."""
        return {}

    def loss_and_grads(self, batch) -> tuple[float, dict[str, np.ndarray]]:
        raise NotImplementedError(f"{self.backbone} has no differentiable loss")

    def gradcheck_batch(self, sequences: list[InteractionSequence], seed: int = 0):
        raise NotImplementedError(f"{self.backbone} has no differentiable loss")


def sequences_to_index_lists(
    sequences: list[InteractionSequence], index: dict[str, int], min_len: int
) -> list[np.ndarray]:
    if not sequences:
        raise DataError("empty training set")
    out = []
    for seq in sequences:
        unknown = [i for i in seq.items if i not in index]
        if unknown:
            raise DataError(
                f"user {seq.user_id!r}: items not in catalog: {unknown[:3]}"
            )
        if len(seq.items) < min_len:
            continue
        out.append(np.array([index[i] for i in seq.items], dtype=np.int64))
    if not out:
        raise DataError(f"no sequence has the required minimum length {min_len}")
    return out
