"""Pure-Python fallback for the skip-gram negative-sampling inner loop.

Semantically identical to the compiled _sgns kernel: same update order,
same xorshift64* negative-sampling stream, same clamped-logit sigmoid.
Per-path results are deterministic; across paths they agree to float
rounding (summation order inside the dot products differs).
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_MULT = 2685821657736338717


def _softplus(x: float) -> float:
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _next(state: int) -> tuple[int, int]:
    x = state
    x ^= x >> 12
    x ^= (x << 25) & _MASK64
    x ^= x >> 27
    return x, (x * _MULT) & _MASK64


def sgns_epoch(
    w: np.ndarray,
    c: np.ndarray,
    centers: np.ndarray,
    contexts: np.ndarray,
    rng_state: np.ndarray,
    n_negatives: int,
    lr: float,
) -> float:
    """One SGD pass over (center, context) pairs; returns summed pair loss."""
    n_items = w.shape[0]
    state = int(rng_state[0])
    total_loss = 0.0

    for ci, oi in zip(centers, contexts):
        w_ci = w[ci]
        neu1e = np.zeros_like(w_ci)
        for k in range(n_negatives + 1):
            if k == 0:
                target = oi
                label = 1.0
            else:
                state, draw = _next(state)
                target = draw % n_items
                if target == oi:
                    continue
                label = 0.0
            c_t = c[target]
            f = float(w_ci @ c_t)
            f = min(50.0, max(-50.0, f))
            pred = 1.0 / (1.0 + math.exp(-f))
            total_loss += _softplus(-f) if label == 1.0 else _softplus(f)
            g = (label - pred) * lr
            neu1e += g * c_t
            c_t += g * w_ci
        w_ci += neu1e

    rng_state[0] = state
    return total_loss
