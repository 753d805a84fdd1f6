"""Minimal self-attention backbone for next-item prediction.

One causal single-head attention block with residuals, learned positional
embeddings, a pointwise feed-forward layer, and next-item logits tied to
the item embedding table. Trained sequence-by-sequence with plain SGD on
the next-item cross-entropy; forward and backward are hand-written numpy
(validated by the finite-difference gradient check).
"""

from __future__ import annotations

import numpy as np

from ..corpus import InteractionSequence
from .base import Model, sequences_to_index_lists, softmax, uniform_init
from .config import TrainingConfig
from .matrix import EmbeddingMatrix

_NEG_INF = -1e30


class SasMiniModel(Model):
    backbone = "sasmini"

    def __init__(self, item_ids: list[str], config: TrainingConfig, rng: np.random.Generator):
        super().__init__(item_ids, config)
        n, d, L = len(item_ids), config.dim, config.max_seq_len
        self.e = uniform_init(rng, (n, d), d)
        self.pos = uniform_init(rng, (L, d), d)
        self.wq = uniform_init(rng, (d, d), d)
        self.wk = uniform_init(rng, (d, d), d)
        self.wv = uniform_init(rng, (d, d), d)
        self.w1 = uniform_init(rng, (d, d), d)
        self.b1 = np.zeros(d)
        self.w2 = uniform_init(rng, (d, d), d)
        self.b2 = np.zeros(d)

    def params(self) -> dict[str, np.ndarray]:
        return {
            "e": self.e,
            "pos": self.pos,
            "wq": self.wq,
            "wk": self.wk,
            "wv": self.wv,
            "w1": self.w1,
            "b1": self.b1,
            "w2": self.w2,
            "b2": self.b2,
        }

    def embedding_matrix(self) -> EmbeddingMatrix:
        # ranking consumes the input item table, not contextual states
        return EmbeddingMatrix(self.item_ids, self.e.copy())

    def _forward(self, inputs: np.ndarray) -> dict:
        """Hidden states for a 1-d array of item indices; caches for backward."""
        t = len(inputs)
        d = self.config.dim
        x = self.e[inputs] + self.pos[:t]
        q, k, v = x @ self.wq, x @ self.wk, x @ self.wv
        att = (q @ k.T) / np.sqrt(d)
        att = np.where(np.tril(np.ones((t, t), dtype=bool)), att, _NEG_INF)
        a = softmax(att)
        h1 = x + a @ v
        g = h1 @ self.w1 + self.b1
        r = np.maximum(g, 0.0)
        f = r @ self.w2 + self.b2
        h2 = h1 + f
        return {"inputs": inputs, "x": x, "q": q, "k": k, "v": v, "a": a,
                "h1": h1, "g": g, "r": r, "h2": h2}

    def _backward(self, cache: dict, dh2: np.ndarray, grads: dict[str, np.ndarray]) -> None:
        d = self.config.dim
        inputs, x = cache["inputs"], cache["x"]
        q, k, v, a = cache["q"], cache["k"], cache["v"], cache["a"]
        h1, g, r = cache["h1"], cache["g"], cache["r"]
        t = len(inputs)

        df = dh2
        dh1 = dh2.copy()
        grads["w2"] += r.T @ df
        grads["b2"] += df.sum(axis=0)
        dr = df @ self.w2.T
        dg = dr * (g > 0.0)
        grads["w1"] += h1.T @ dg
        grads["b1"] += dg.sum(axis=0)
        dh1 += dg @ self.w1.T

        dx = dh1.copy()
        da = dh1 @ v.T
        dv = a.T @ dh1
        ds = a * (da - (da * a).sum(axis=1, keepdims=True))
        dq = (ds @ k) / np.sqrt(d)
        dk = (ds.T @ q) / np.sqrt(d)
        grads["wq"] += x.T @ dq
        grads["wk"] += x.T @ dk
        grads["wv"] += x.T @ dv
        dx += dq @ self.wq.T + dk @ self.wk.T + dv @ self.wv.T

        np.add.at(grads["e"], inputs, dx)
        grads["pos"][:t] += dx

    def loss_and_grads(self, batch) -> tuple[float, dict[str, np.ndarray]]:
        """Mean full-softmax next-item cross-entropy over a list of sequences."""
        grads = {name: np.zeros_like(p) for name, p in self.params().items()}
        total = 0.0
        n_positions = sum(len(seq) - 1 for seq in batch)
        for seq in batch:
            inputs, targets = seq[:-1], seq[1:]
            cache = self._forward(inputs)
            z = cache["h2"] @ self.e.T
            probs = softmax(z)
            total += float(-np.log(probs[np.arange(len(targets)), targets] + 1e-300).sum())
            dz = probs
            dz[np.arange(len(targets)), targets] -= 1.0
            dz /= n_positions
            dh2 = dz @ self.e
            grads["e"] += dz.T @ cache["h2"]
            self._backward(cache, dh2, grads)
        return total / n_positions, grads

    def gradcheck_batch(self, sequences: list[InteractionSequence], seed: int = 0):
        index_lists = sequences_to_index_lists(sequences, self.index, min_len=2)
        limit = self.config.max_seq_len + 1
        return [seq[-limit:] for seq in index_lists[:4]]

    def next_item_scores(self, prefix: list[str]) -> np.ndarray:
        indices = self.resolve_prefix(prefix)[-self.config.max_seq_len :]
        cache = self._forward(np.array(indices, dtype=np.int64))
        return self.e @ cache["h2"][-1]


def train_sasmini(
    sequences: list[InteractionSequence], item_ids: list[str], config: TrainingConfig
) -> SasMiniModel:
    rng = np.random.default_rng(config.seed)
    model = SasMiniModel(item_ids, config, rng)
    index_lists = sequences_to_index_lists(sequences, model.index, min_len=2)
    limit = config.max_seq_len + 1
    index_lists = [seq[-limit:] for seq in index_lists]
    loss_mode = config.resolve_loss_mode(len(item_ids))
    lr = config.learning_rate
    params = model.params()

    for _ in range(config.epochs):
        epoch_loss = 0.0
        n_positions = 0
        for seq in index_lists:
            inputs, targets = seq[:-1], seq[1:]
            t = len(inputs)
            grads = {name: np.zeros_like(p) for name, p in params.items()}
            cache = model._forward(inputs)
            h2 = cache["h2"]
            if loss_mode == "full_softmax":
                z = h2 @ model.e.T
                probs = softmax(z)
                epoch_loss += float(-np.log(probs[np.arange(t), targets] + 1e-300).sum())
                dz = probs
                dz[np.arange(t), targets] -= 1.0
                dz /= t
                dh2 = dz @ model.e
                grads["e"] += dz.T @ h2
            else:
                dh2 = np.zeros_like(h2)
                for i in range(t):
                    negatives = rng.integers(0, model.n_items, size=config.negatives_per_positive)
                    cand = np.concatenate(([targets[i]], negatives))
                    logits = model.e[cand] @ h2[i]
                    probs = softmax(logits)
                    epoch_loss += float(-np.log(probs[0] + 1e-300))
                    dlogits = probs
                    dlogits[0] -= 1.0
                    dlogits /= t
                    dh2[i] = dlogits @ model.e[cand]
                    np.add.at(grads["e"], cand, np.outer(dlogits, h2[i]))
            model._backward(cache, dh2, grads)
            for name, p in params.items():
                p -= lr * grads[name]
            n_positions += t
        model.loss_history.append(epoch_loss / max(n_positions, 1))
    return model
