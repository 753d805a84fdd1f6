"""Collaborative item embeddings: training, scoring, and persistence.

Backbones: pop (popularity counts), item2vec (skip-gram negative sampling),
fism (item-item factorization), sasmini (single-block causal self-attention).
All training is deterministic for a fixed (data, config, seed).
"""

from __future__ import annotations

import numpy as np

from ..corpus import InteractionSequence
from ..errors import DataError
from .base import Model
from .config import BACKBONES, TrainingConfig
from .fism import FismModel, train_fism
from .gradcheck import gradient_check
from .item2vec import Item2VecModel, train_item2vec
from .kernels import KERNEL_BACKEND
from .matrix import EmbeddingMatrix, load_embeddings, save_embeddings
from .pop import PopModel, train_pop
from .sasmini import SasMiniModel, train_sasmini

_TRAINERS = {
    "pop": train_pop,
    "item2vec": train_item2vec,
    "fism": train_fism,
    "sasmini": train_sasmini,
}


def train(
    sequences: list[InteractionSequence],
    item_ids: list[str],
    config: TrainingConfig,
) -> Model:
    """Train the configured backbone over sequences; rows follow item_ids order."""
    if not sequences:
        raise DataError("empty training set")
    if not item_ids:
        raise DataError("empty item universe")
    return _TRAINERS[config.backbone](sequences, item_ids, config)


def next_item_scores(model: Model, prefix: list[str]) -> np.ndarray:
    """Score every catalog item as the next interaction after `prefix`."""
    return model.next_item_scores(prefix)


__all__ = [
    "BACKBONES",
    "EmbeddingMatrix",
    "FismModel",
    "Item2VecModel",
    "KERNEL_BACKEND",
    "Model",
    "PopModel",
    "SasMiniModel",
    "TrainingConfig",
    "gradient_check",
    "load_embeddings",
    "next_item_scores",
    "save_embeddings",
    "train",
]
