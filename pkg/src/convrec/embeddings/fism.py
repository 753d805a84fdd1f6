"""FISM-style backbone: item-item factorization, no sequence order.

An item j is scored for a user by the mean dot product between the user's
other consumed items (source table P) and j's target vector (table Q),
trained with the same cross-entropy contract as the sequential backbone:
full softmax over the catalog at desk scale, uniform sampled negatives
beyond it.
"""

from __future__ import annotations

import numpy as np

from ..corpus import InteractionSequence
from .base import Model, sequences_to_index_lists, softmax, uniform_init
from .config import TrainingConfig
from .matrix import EmbeddingMatrix


class FismModel(Model):
    backbone = "fism"

    def __init__(
        self, item_ids: list[str], config: TrainingConfig, p: np.ndarray, q: np.ndarray
    ):
        super().__init__(item_ids, config)
        self.p = p
        self.q = q

    def embedding_matrix(self) -> EmbeddingMatrix:
        return EmbeddingMatrix(self.item_ids, self.p.copy())

    def next_item_scores(self, prefix: list[str]) -> np.ndarray:
        indices = self.resolve_prefix(prefix)
        user_vec = self.p[indices].mean(axis=0)
        return self.q @ user_vec

    def params(self) -> dict[str, np.ndarray]:
        return {"p": self.p, "q": self.q}

    def loss_and_grads(self, batch) -> tuple[float, dict[str, np.ndarray]]:
        """Mean full-softmax cross-entropy over (context_indices, target) pairs."""
        grad_p = np.zeros_like(self.p)
        grad_q = np.zeros_like(self.q)
        total = 0.0
        for context, target in batch:
            user_vec = self.p[context].mean(axis=0)
            logits = self.q @ user_vec
            probs = softmax(logits)
            total += -np.log(probs[target] + 1e-300)
            dlogits = probs.copy()
            dlogits[target] -= 1.0
            grad_q += np.outer(dlogits, user_vec)
            duser = dlogits @ self.q
            # context may repeat an item; fancy-index += would drop repeats
            np.add.at(grad_p, context, duser / len(context))
        scale = 1.0 / len(batch)
        return total * scale, {"p": grad_p * scale, "q": grad_q * scale}

    def gradcheck_batch(self, sequences: list[InteractionSequence], seed: int = 0):
        index_lists = sequences_to_index_lists(sequences, self.index, min_len=2)
        batch = []
        for seq in index_lists:
            for pos in range(len(seq)):
                context = np.delete(seq, pos)
                batch.append((context, int(seq[pos])))
        return batch[:16]


def train_fism(
    sequences: list[InteractionSequence], item_ids: list[str], config: TrainingConfig
) -> FismModel:
    rng = np.random.default_rng(config.seed)
    n = len(item_ids)
    model = FismModel(
        item_ids,
        config,
        p=uniform_init(rng, (n, config.dim), config.dim),
        q=uniform_init(rng, (n, config.dim), config.dim),
    )
    index_lists = sequences_to_index_lists(sequences, model.index, min_len=2)
    loss_mode = config.resolve_loss_mode(n)
    lr = config.learning_rate

    for _ in range(config.epochs):
        epoch_loss = 0.0
        n_steps = 0
        for seq in index_lists:
            for pos in range(len(seq)):
                target = seq[pos]
                context = np.delete(seq, pos)
                user_vec = model.p[context].mean(axis=0)
                if loss_mode == "full_softmax":
                    logits = model.q @ user_vec
                    probs = softmax(logits)
                    epoch_loss += float(-np.log(probs[target] + 1e-300))
                    dlogits = probs
                    dlogits[target] -= 1.0
                    duser = dlogits @ model.q
                    model.q -= lr * np.outer(dlogits, user_vec)
                else:
                    negatives = rng.integers(0, n, size=config.negatives_per_positive)
                    cand = np.concatenate(([target], negatives))
                    logits = model.q[cand] @ user_vec
                    probs = softmax(logits)
                    epoch_loss += float(-np.log(probs[0] + 1e-300))
                    dlogits = probs
                    dlogits[0] -= 1.0
                    duser = dlogits @ model.q[cand]
                    np.subtract.at(model.q, cand, lr * np.outer(dlogits, user_vec))
                np.subtract.at(model.p, context, lr * duser / len(context))
                n_steps += 1
        model.loss_history.append(epoch_loss / max(n_steps, 1))
    return model
