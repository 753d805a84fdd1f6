import math

import numpy as np
import pytest

from convrec.corpus import Catalog, ItemRecord
from convrec.embeddings import EmbeddingMatrix
from convrec.errors import DataError
from convrec.llm_gateway import Cassette, Gateway, PromptTemplate, ProviderConfig, prompt_hash, build_prompt
from convrec.matcher import MatchResult
from convrec.ranker import (
    Recommender,
    max_pool_scores,
    popularity_ranking,
    rank,
    recommend,
    similarity_matrix,
)


def brute_force_order(vectors: dict[str, np.ndarray], llm_order: list[str], k: int):
    """Independent oracle: per-pair cosine, max over suggestions, documented
    tie rules. Self-similarity of a nonzero vector is 1 by definition."""

    def cos(u, v):
        nu, nv = math.sqrt(float(u @ u)), math.sqrt(float(v @ v))
        if nu == 0.0 or nv == 0.0:
            return 0.0
        return float(u @ v) / (nu * nv)

    scores = {}
    for j, vj in vectors.items():
        best = -math.inf
        for i in llm_order:
            if i == j:
                s = 1.0 if float(vectors[i] @ vectors[i]) > 0.0 else 0.0
            else:
                s = cos(vectors[i], vj)
            best = max(best, s)
        scores[j] = best
    pos = {i: p for p, i in enumerate(llm_order)}
    ordered = sorted(
        vectors, key=lambda j: (-scores[j], pos.get(j, len(llm_order)), j)
    )
    return ordered[:k], scores


def pipeline_order(vectors: dict[str, np.ndarray], llm_order: list[str], k: int):
    ids = list(vectors)
    matrix = EmbeddingMatrix(ids, np.array([vectors[i] for i in ids]))
    catalog = Catalog([ItemRecord(i, f"Title {i}") for i in ids])
    gateway = Gateway(ProviderConfig(mode="replay", cassette_path="/dev/null"))
    rec = Recommender(catalog, matrix, gateway)
    match = MatchResult(matched=[(i, p + 1) for p, i in enumerate(llm_order)])
    return rec.rank_candidates(match, k)


class TestSimilarity:
    def test_self_similarity(self):
        v = np.array([[1.0, 2.0, 3.0]])
        assert similarity_matrix(v, v)[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        a = np.array([[1.0, 0.0]])
        b = np.array([[0.0, 1.0]])
        assert similarity_matrix(a, b)[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed(self):
        a = np.array([[1.0, 0.0]])
        b = np.array([[1.0, 1.0]])
        assert similarity_matrix(a, b)[0, 0] == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_zero_norm_scores_zero(self):
        a = np.array([[0.0, 0.0]])
        b = np.array([[1.0, 1.0]])
        assert similarity_matrix(a, b)[0, 0] == 0.0
        assert similarity_matrix(b, a)[0, 0] == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            similarity_matrix(np.ones((1, 3)), np.ones((2, 4)))

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        m = rng.normal(size=(6, 4))
        s = similarity_matrix(m, m)
        assert np.allclose(s, s.T, atol=1e-12)

    def test_range(self):
        rng = np.random.default_rng(6)
        s = similarity_matrix(rng.normal(size=(10, 8)), rng.normal(size=(50, 8)))
        assert s.min() >= -1.0 - 1e-9
        assert s.max() <= 1.0 + 1e-9


class TestMaxPool:
    def test_column_max_by_hand(self):
        s = np.array([[0.2, 0.9], [0.5, 0.1]])
        assert np.array_equal(max_pool_scores(s), np.array([0.5, 0.9]))

    def test_single_row(self):
        s = np.array([[0.3, -0.2, 0.8]])
        assert np.array_equal(max_pool_scores(s), s[0])

    def test_empty(self):
        with pytest.raises(DataError):
            max_pool_scores(np.empty((0, 0)))


class TestRank:
    def test_llm_position_tiebreak(self):
        scores = np.array([1.0, 1.0, 0.5])
        ranking = rank(scores, ["a", "b", "c"], llm_order=["b", "a"], k=3)
        assert ranking.item_ids() == ["b", "a", "c"]
        assert [e.provenance for e in ranking.entries] == [
            "llm_matched", "llm_matched", "cf_neighbor",
        ]

    def test_equal_scores_ascending_id(self):
        scores = np.array([0.5, 0.5, 0.5])
        ranking = rank(scores, ["c", "a", "b"], llm_order=[], k=3)
        assert ranking.item_ids() == ["a", "b", "c"]

    def test_k_clamp(self):
        scores = np.array([0.1, 0.2])
        ranking = rank(scores, ["a", "b"], [], k=10)
        assert ranking.item_ids() == ["b", "a"]

    def test_scale_invariance(self):
        rng = np.random.default_rng(8)
        vectors = {f"i{j}": rng.normal(size=4) for j in range(20)}
        llm = ["i3", "i7"]
        before = pipeline_order(vectors, llm, 20).item_ids()
        vectors["i5"] = vectors["i5"] * 17.0  # positive scaling of one row
        after = pipeline_order(vectors, llm, 20).item_ids()
        assert before == after


class TestOracleEquivalence:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(123)
        for trial in range(40):
            n = int(rng.integers(2, 51))
            d = int(rng.integers(1, 9))
            m = int(rng.integers(1, min(6, n + 1)))
            ids = [f"i{j:03d}" for j in range(n)]
            vectors = {i: rng.normal(size=d) for i in ids}
            # sprinkle zero vectors to exercise the zero-norm rule
            for i in ids:
                if rng.random() < 0.05:
                    vectors[i] = np.zeros(d)
            llm = list(rng.choice(ids, size=m, replace=False))
            expected, _ = brute_force_order(vectors, llm, n)
            actual = pipeline_order(vectors, llm, n).item_ids()
            assert actual == expected, f"trial {trial} diverged"

    def test_top_dominance(self):
        rng = np.random.default_rng(321)
        for _ in range(60):
            n = int(rng.integers(3, 40))
            d = int(rng.integers(2, 8))
            ids = [f"i{j:03d}" for j in range(n)]
            vectors = {i: rng.normal(size=d) for i in ids}
            m = int(rng.integers(1, min(5, n)))
            llm = list(rng.choice(ids, size=m, replace=False))
            ranking = pipeline_order(vectors, llm, n)
            positions = {e.item_id: pos for pos, e in enumerate(ranking.entries)}
            scores = {e.item_id: e.score for e in ranking.entries}
            for i in llm:
                assert scores[i] == 1.0
                for j in ids:
                    if j not in llm and scores[j] < 1.0:
                        assert positions[i] < positions[j]


class TestRecommendPipeline:
    def build(self, planted, item2vec_model, planted_files, popularity=None):
        gateway = Gateway(ProviderConfig(mode="replay", cassette_path=planted_files["cassette"]))
        return Recommender(
            planted.catalog, item2vec_model.embedding_matrix(), gateway,
            popularity=popularity,
        )

    def test_top_entries_are_cassette_titles(self, planted, item2vec_model, planted_files):
        rec = self.build(planted, item2vec_model, planted_files)
        conv = planted.conversations[0]
        ranking = rec.recommend(conv.turns[:3], k=10)
        # cassette plants 4 in-catalog suggestions; they occupy the top in LLM order
        top4 = ranking.item_ids()[:4]
        assert all(
            e.provenance == "llm_matched" and e.score == 1.0
            for e in ranking.entries[:4]
        )
        assert ranking.diagnostics["n_matched"] == 4
        # remainder are collaborative neighbors
        assert all(e.provenance == "cf_neighbor" for e in ranking.entries[4:])
        assert len(set(top4)) == 4

    def test_deterministic(self, planted, item2vec_model, planted_files):
        rec = self.build(planted, item2vec_model, planted_files)
        conv = planted.conversations[1]
        r1 = rec.recommend(conv.turns[:3], k=10)
        r2 = rec.recommend(conv.turns[:3], k=10)
        assert r1.to_dict() == r2.to_dict()

    def test_fallback_on_unmatched_titles(self, planted, item2vec_model, tmp_path):
        cassette_path = tmp_path / "c.jsonl"
        cassette = Cassette(cassette_path)
        template = PromptTemplate()
        turns = planted.conversations[0].turns[:3]
        prompt = build_prompt(turns, template)
        cassette.record(prompt_hash(prompt), "1. Totally Unknown Film (1901)", "m")
        gateway = Gateway(ProviderConfig(mode="replay", cassette_path=cassette_path))
        pop = {planted.catalog.items[5].item_id: 10.0}
        rec = Recommender(
            planted.catalog, item2vec_model.embedding_matrix(), gateway,
            template, popularity=pop,
        )
        ranking = rec.recommend(turns, k=5)
        assert ranking.fallback_used
        assert ranking.entries[0].item_id == planted.catalog.items[5].item_id
        assert all(e.provenance == "fallback" for e in ranking.entries)

    def test_popularity_ranking_order(self):
        ranking = popularity_ranking(["a", "b", "c"], {"b": 5.0, "c": 2.0}, k=3)
        assert ranking.item_ids() == ["b", "c", "a"]
        assert ranking.fallback_used

    def test_recommend_function(self, planted, item2vec_model, planted_files):
        gateway = Gateway(ProviderConfig(mode="replay", cassette_path=planted_files["cassette"]))
        conv = planted.conversations[2]
        ranking = recommend(
            conv.turns[:3], item2vec_model.embedding_matrix(), gateway,
            planted.catalog, k=7,
        )
        assert len(ranking.entries) == 7
