"""Training configuration shared by all embedding backbones."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import DataError

BACKBONES = ("pop", "item2vec", "fism", "sasmini")

# above this catalog size the cross-entropy switches to sampled negatives
FULL_SOFTMAX_MAX_ITEMS = 10_000


@dataclass
class TrainingConfig:
    backbone: str = "sasmini"
    dim: int = 64
    epochs: int = 30
    learning_rate: float = 0.05
    negatives_per_positive: int = 5
    window: int = 4  # item2vec only
    max_seq_len: int = 50  # sasmini only
    n_heads: int = 1
    n_blocks: int = 1
    seed: int = 0
    loss_mode: str | None = None  # None = auto by catalog size

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise DataError(f"unknown backbone {self.backbone!r}, expected one of {BACKBONES}")
        for name in ("dim", "epochs", "negatives_per_positive", "window", "max_seq_len"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive, got {getattr(self, name)}")
        if self.learning_rate <= 0:
            raise DataError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.n_heads != 1 or self.n_blocks != 1:
            raise DataError("sasmini supports exactly 1 head and 1 block")
        if self.loss_mode not in (None, "full_softmax", "sampled"):
            raise DataError(f"loss_mode must be full_softmax or sampled, got {self.loss_mode!r}")

    def resolve_loss_mode(self, n_items: int) -> str:
        if self.loss_mode is not None:
            return self.loss_mode
        return "full_softmax" if n_items <= FULL_SOFTMAX_MAX_ITEMS else "sampled"
