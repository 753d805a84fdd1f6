"""item2vec backbone: skip-gram with negative sampling, sequences as sentences.

The SGD inner loop runs on the compiled kernel when available (see
kernels.py). Negatives are uniform over the catalog; input and context
tables are both uniform-initialized from the seeded generator. The item
representation exposed for ranking is the input table.
"""

from __future__ import annotations

import numpy as np

from ..corpus import InteractionSequence
from ..errors import DataError
from .base import Model, sequences_to_index_lists, uniform_init
from .config import TrainingConfig
from .kernels import sgns_epoch
from .matrix import EmbeddingMatrix


class Item2VecModel(Model):
    backbone = "item2vec"

    def __init__(
        self,
        item_ids: list[str],
        config: TrainingConfig,
        w_in: np.ndarray,
        w_ctx: np.ndarray,
    ):
        super().__init__(item_ids, config)
        self.w_in = w_in
        self.w_ctx = w_ctx

    def embedding_matrix(self) -> EmbeddingMatrix:
        return EmbeddingMatrix(self.item_ids, self.w_in.copy())

    def next_item_scores(self, prefix: list[str]) -> np.ndarray:
        indices = self.resolve_prefix(prefix)
        center = self.w_in[indices].mean(axis=0)
        return self.w_ctx @ center

    def params(self) -> dict[str, np.ndarray]:
        return {"w_in": self.w_in, "w_ctx": self.w_ctx}

    def loss_and_grads(self, batch) -> tuple[float, dict[str, np.ndarray]]:
        """Mean SGNS loss over (center, context, negatives) triples.

        The negatives are frozen inside the batch so the loss is a
        deterministic function of the parameters.
        """
        grad_in = np.zeros_like(self.w_in)
        grad_ctx = np.zeros_like(self.w_ctx)
        total = 0.0
        n_terms = 0
        for center, context, negatives in batch:
            targets = np.concatenate(([context], negatives))
            labels = np.zeros(len(targets))
            labels[0] = 1.0
            logits = self.w_ctx[targets] @ self.w_in[center]
            preds = 1.0 / (1.0 + np.exp(-logits))
            total += float(
                np.sum(np.logaddexp(0.0, -logits) * labels)
                + np.sum(np.logaddexp(0.0, logits) * (1.0 - labels))
            )
            n_terms += len(targets)
            coeff = preds - labels
            grad_in[center] += coeff @ self.w_ctx[targets]
            np.add.at(grad_ctx, targets, np.outer(coeff, self.w_in[center]))
        scale = 1.0 / max(n_terms, 1)
        return total * scale, {"w_in": grad_in * scale, "w_ctx": grad_ctx * scale}

    def gradcheck_batch(self, sequences: list[InteractionSequence], seed: int = 0):
        rng = np.random.default_rng(seed)
        pairs = _skipgram_pairs(
            sequences_to_index_lists(sequences, self.index, min_len=2), self.config.window
        )
        batch = []
        for center, context in zip(*pairs):
            negatives = rng.integers(0, self.n_items, size=self.config.negatives_per_positive)
            negatives = negatives[negatives != context]
            batch.append((int(center), int(context), negatives))
        return batch[:32]


def _skipgram_pairs(
    index_lists: list[np.ndarray], window: int
) -> tuple[np.ndarray, np.ndarray]:
    centers: list[int] = []
    contexts: list[int] = []
    for seq in index_lists:
        n = len(seq)
        for i in range(n):
            lo, hi = max(0, i - window), min(n, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                centers.append(seq[i])
                contexts.append(seq[j])
    return np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64)


def train_item2vec(
    sequences: list[InteractionSequence], item_ids: list[str], config: TrainingConfig
) -> Item2VecModel:
    rng = np.random.default_rng(config.seed)
    n = len(item_ids)
    model = Item2VecModel(
        item_ids,
        config,
        w_in=uniform_init(rng, (n, config.dim), config.dim),
        w_ctx=uniform_init(rng, (n, config.dim), config.dim),
    )
    centers, contexts = _skipgram_pairs(
        sequences_to_index_lists(sequences, model.index, min_len=2), config.window
    )
    if len(centers) == 0:
        raise DataError("no skip-gram pairs: all sequences shorter than 2 items")

    # negative-sampling stream is independent of numpy's generator; nonzero seed
    rng_state = np.array([config.seed or 0x9E3779B97F4A7C15], dtype=np.uint64)
    n_terms_per_pair = 1 + config.negatives_per_positive
    for _ in range(config.epochs):
        loss = sgns_epoch(
            model.w_in,
            model.w_ctx,
            centers,
            contexts,
            rng_state,
            config.negatives_per_positive,
            config.learning_rate,
        )
        model.loss_history.append(loss / (len(centers) * n_terms_per_pair))
    return model
