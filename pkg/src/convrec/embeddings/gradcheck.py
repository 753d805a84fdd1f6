"""Central finite-difference validation of backbone gradients.

Intended for tiny models (d <= 8, |V| <= 30) with full-softmax losses: every
parameter element is perturbed individually, so cost grows with parameter
count times batch cost.
"""

from __future__ import annotations

from .base import Model


def gradient_check(model: Model, batch, epsilon: float = 1e-4) -> float:
    """Max relative error between analytic and finite-difference gradients."""
    _, grads = model.loss_and_grads(batch)
    params = model.params()
    max_rel = 0.0
    for name, p in params.items():
        flat = p.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + epsilon
            loss_plus, _ = model.loss_and_grads(batch)
            flat[i] = original - epsilon
            loss_minus, _ = model.loss_and_grads(batch)
            flat[i] = original
            fd = (loss_plus - loss_minus) / (2.0 * epsilon)
            denom = max(abs(gflat[i]) + abs(fd), 1e-8)
            rel = abs(gflat[i] - fd) / denom
            if rel > max_rel:
                max_rel = rel
    return max_rel
