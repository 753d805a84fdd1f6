# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled skip-gram negative-sampling inner loop.

Mirrors _sgns_py.sgns_epoch exactly: same update order, same xorshift64*
negative-sampling stream, same clamped-logit sigmoid. Keep the two in sync.
"""

from libc.math cimport exp, log1p

import numpy as np


cdef inline double _softplus(double x) nogil:
    if x > 0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline unsigned long long _next(unsigned long long *state) nogil:
    cdef unsigned long long x = state[0]
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    state[0] = x
    return x * 2685821657736338717ULL


def sgns_epoch(
    double[:, ::1] w,
    double[:, ::1] c,
    long long[::1] centers,
    long long[::1] contexts,
    unsigned long long[::1] rng_state,
    int n_negatives,
    double lr,
):
    """One SGD pass over (center, context) pairs; returns summed pair loss."""
    cdef Py_ssize_t n_pairs = centers.shape[0]
    cdef Py_ssize_t n_items = w.shape[0]
    cdef Py_ssize_t d = w.shape[1]
    cdef unsigned long long state = rng_state[0]
    cdef double total_loss = 0.0
    cdef double[::1] neu1e = np.zeros(d, dtype=np.float64)

    cdef Py_ssize_t p, j, target
    cdef int k
    cdef long long ci, oi
    cdef double f, pred, g, label

    for p in range(n_pairs):
        ci = centers[p]
        oi = contexts[p]
        for j in range(d):
            neu1e[j] = 0.0
        for k in range(n_negatives + 1):
            if k == 0:
                target = oi
                label = 1.0
            else:
                target = <Py_ssize_t>(_next(&state) % <unsigned long long>n_items)
                if target == oi:
                    continue
                label = 0.0
            f = 0.0
            for j in range(d):
                f += w[ci, j] * c[target, j]
            if f > 50.0:
                f = 50.0
            elif f < -50.0:
                f = -50.0
            pred = 1.0 / (1.0 + exp(-f))
            if label == 1.0:
                total_loss += _softplus(-f)
            else:
                total_loss += _softplus(f)
            g = (label - pred) * lr
            for j in range(d):
                neu1e[j] += g * c[target, j]
                c[target, j] += g * w[ci, j]
        for j in range(d):
            w[ci, j] += neu1e[j]

    rng_state[0] = state
    return total_loss
