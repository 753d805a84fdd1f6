#!/usr/bin/env python3
"""Benchmark the skip-gram training kernel: compiled extension vs fallback.

Also times the serving-path ranking (cosine + max-pool + argsort) at desk
scale. Run: python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from convrec.embeddings.item2vec import _skipgram_pairs
from convrec.embeddings.kernels import available_backends
from convrec.ranker import rank, similarity_matrix, max_pool_scores
from convrec.synthetic import make_corpus


def bench_sgns(epochs: int = 3) -> None:
    corpus = make_corpus(
        n_clusters=8, items_per_cluster=16, n_users=800, n_conversations=1,
        seq_len_range=(20, 40), seed=5,
    )
    index = {i: p for p, i in enumerate(corpus.catalog.item_ids())}
    seqs = [np.array([index[i] for i in s.items], dtype=np.int64) for s in corpus.sequences]
    centers, contexts = _skipgram_pairs(seqs, window=4)
    n_items, d, k_neg = len(index), 64, 5
    print(f"SGNS kernel: {len(centers):,} pairs/epoch, |V|={n_items}, d={d}, "
          f"{k_neg} negatives, {epochs} epochs")

    results = {}
    for name, kernel in available_backends().items():
        rng = np.random.default_rng(11)
        w = rng.uniform(-1 / np.sqrt(d), 1 / np.sqrt(d), size=(n_items, d))
        c = rng.uniform(-1 / np.sqrt(d), 1 / np.sqrt(d), size=(n_items, d))
        state = np.array([11], dtype=np.uint64)
        start = time.perf_counter()
        loss = 0.0
        for _ in range(epochs):
            loss = kernel(w, c, centers, contexts, state, k_neg, 0.025)
        elapsed = time.perf_counter() - start
        pairs_per_sec = epochs * len(centers) / elapsed
        results[name] = (elapsed, w, c, loss)
        print(f"  {name:>8}: {elapsed:7.2f}s  ({pairs_per_sec:>12,.0f} pairs/s)  "
              f"final epoch loss {loss / len(centers):.4f}")

    if len(results) == 2:
        py, comp = results["python"], results["compiled"]
        drift = max(np.abs(py[1] - comp[1]).max(), np.abs(py[2] - comp[2]).max())
        print(f"  speedup: {py[0] / comp[0]:.1f}x   max |param drift| across paths: {drift:.2e}")


def bench_ranking(n_items: int = 25_000, d: int = 64, m: int = 20) -> None:
    from convrec.ranker import _unit_rows

    rng = np.random.default_rng(0)
    e_all = rng.normal(size=(n_items, d))
    e_llm = e_all[rng.choice(n_items, size=m, replace=False)]
    ids = [f"i{j:05d}" for j in range(n_items)]
    llm_ids = ids[:m]
    n_rounds = 20

    start = time.perf_counter()
    for _ in range(n_rounds):
        scores = max_pool_scores(similarity_matrix(e_llm, e_all))
        rank(scores, ids, llm_ids, 10)
    cold = (time.perf_counter() - start) / n_rounds

    # served path: catalog side pre-normalized once, ids pre-materialized
    unit_all = _unit_rows(e_all)
    ids_arr = np.array(ids)
    start = time.perf_counter()
    for _ in range(n_rounds):
        scores = max_pool_scores(_unit_rows(e_llm) @ unit_all.T)
        rank(scores, ids_arr, llm_ids, 10)
    warm = (time.perf_counter() - start) / n_rounds
    print(f"ranking path: |V|={n_items:,}, d={d}, m={m}: "
          f"{cold * 1000:.1f} ms cold, {warm * 1000:.1f} ms served (pre-normalized)")


if __name__ == "__main__":
    bench_sgns()
    bench_ranking()
