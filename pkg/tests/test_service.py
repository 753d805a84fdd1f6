import json
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from convrec.corpus import Catalog, ItemRecord, load_catalog
from convrec.embeddings import EmbeddingMatrix, load_embeddings
from convrec.llm_gateway import Cassette, Gateway, ProviderConfig, PromptTemplate, build_prompt, prompt_hash
from convrec.corpus import ConversationTurn
from convrec.ranker import Recommender
from convrec.service import AppConfig, create_app

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def fixture_client():
    catalog = load_catalog(DATA / "pipeline" / "catalog.csv")
    embeddings = load_embeddings(DATA / "pipeline" / "emb.txt")
    gateway = Gateway(ProviderConfig(mode="replay", cassette_path=DATA / "pipeline" / "cassette.jsonl"))
    recommender = Recommender(catalog, embeddings, gateway)
    app = create_app(recommender, {"fixture": "pipeline-v1"})
    return TestClient(app)


class TestHealth:
    def test_health_reports_hashes(self, fixture_client):
        resp = fixture_client.get("/v1/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["artifacts"] == {"fixture": "pipeline-v1"}


class TestSearch:
    def test_prefix_search(self, fixture_client):
        resp = fixture_client.get("/v1/items/search", params={"q": "galaxy", "limit": 3})
        assert resp.status_code == 200
        items = resp.json()["items"]
        assert 1 <= len(items) <= 3
        assert all(item["title"].startswith("Galaxy") for item in items)

    def test_normalized_query(self, fixture_client):
        resp = fixture_client.get("/v1/items/search", params={"q": "GALAXY  rising"})
        titles = [i["title"] for i in resp.json()["items"]]
        assert "Galaxy Rising" in titles

    def test_empty_query(self, fixture_client):
        assert fixture_client.get("/v1/items/search").json()["items"] == []


class TestRecommendEndpoint:
    def request_body(self):
        return json.loads((DATA / "service" / "request.json").read_text())

    def test_golden_response_byte_exact(self, fixture_client):
        golden = (DATA / "service" / "golden_response.json").read_bytes()
        resp = fixture_client.post("/v1/recommend", json=self.request_body())
        assert resp.status_code == 200
        assert resp.content == golden

    def test_replay_deterministic(self, fixture_client):
        body = self.request_body()
        r1 = fixture_client.post("/v1/recommend", json=body)
        r2 = fixture_client.post("/v1/recommend", json=body)
        assert r1.content == r2.content

    def test_k_zero_rejected(self, fixture_client):
        body = self.request_body() | {"k": 0}
        resp = fixture_client.post("/v1/recommend", json=body)
        assert resp.status_code == 400
        assert "k out of range" in resp.text

    def test_k_too_large_rejected(self, fixture_client):
        body = self.request_body() | {"k": 101}
        assert fixture_client.post("/v1/recommend", json=body).status_code == 400

    def test_malformed_json(self, fixture_client):
        resp = fixture_client.post(
            "/v1/recommend", content=b"{oops", headers={"content-type": "application/json"}
        )
        assert resp.status_code == 400

    def test_missing_field_named(self, fixture_client):
        resp = fixture_client.post("/v1/recommend", json={"k": 5})
        assert resp.status_code == 400
        assert "turns" in resp.text

    def test_bad_speaker(self, fixture_client):
        resp = fixture_client.post(
            "/v1/recommend",
            json={"turns": [{"speaker": "narrator", "text": "hi"}], "k": 5},
        )
        assert resp.status_code == 400
        assert "speaker" in resp.text

    def test_cassette_miss_is_502(self, fixture_client):
        resp = fixture_client.post(
            "/v1/recommend",
            json={"turns": [{"speaker": "seeker", "text": "never recorded"}], "k": 5},
        )
        assert resp.status_code == 502
        assert resp.json()["fallback_used"] is False

    def test_scores_descending_and_k_items(self, fixture_client):
        resp = fixture_client.post("/v1/recommend", json=self.request_body())
        items = resp.json()["items"]
        assert len(items) == self.request_body()["k"]
        scores = [i["score"] for i in items]
        assert scores == sorted(scores, reverse=True)


class TestOverload:
    def test_request_cap_429(self):
        catalog = load_catalog(DATA / "pipeline" / "catalog.csv")
        embeddings = load_embeddings(DATA / "pipeline" / "emb.txt")
        gateway = Gateway(
            ProviderConfig(mode="replay", cassette_path=DATA / "pipeline" / "cassette.jsonl")
        )
        app = create_app(Recommender(catalog, embeddings, gateway), request_cap=0)
        client = TestClient(app)
        body = json.loads((DATA / "service" / "request.json").read_text())
        assert client.post("/v1/recommend", json=body).status_code == 429


class TestAuthToken:
    def test_bearer_token_enforced(self, monkeypatch, tmp_path):
        monkeypatch.setenv("CONVREC_API_TOKEN", "sekrit")
        catalog = load_catalog(DATA / "pipeline" / "catalog.csv")
        embeddings = load_embeddings(DATA / "pipeline" / "emb.txt")
        gateway = Gateway(
            ProviderConfig(mode="replay", cassette_path=DATA / "pipeline" / "cassette.jsonl")
        )
        app = create_app(Recommender(catalog, embeddings, gateway))
        client = TestClient(app)
        body = json.loads((DATA / "service" / "request.json").read_text())
        assert client.post("/v1/recommend", json=body).status_code == 401
        ok = client.post(
            "/v1/recommend", json=body, headers={"Authorization": "Bearer sekrit"}
        )
        assert ok.status_code == 200


class TestAppConfig:
    def test_load_committed_config(self):
        config = AppConfig.load(DATA / "service" / "config.json")
        assert config.provider_mode == "replay"
        assert config.request_cap == 8

    def test_unknown_fields_rejected(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"catalog_path": "x", "embeddings_path": "y", "bogus": 1}))
        from convrec.errors import DataError

        with pytest.raises(DataError):
            AppConfig.load(p)


class TestLatency:
    def test_desk_scale_under_50ms(self, tmp_path):
        """|V| = 25,000, d = 64: the rank path (excluding provider time) must
        stay within the latency budget."""
        rng = np.random.default_rng(0)
        n, d = 25_000, 64
        ids = [f"i{j:05d}" for j in range(n)]
        catalog = Catalog([ItemRecord(i, f"Film Number {i}", year=2000) for i in ids])
        embeddings = EmbeddingMatrix(ids, rng.normal(size=(n, d)))

        cassette_path = tmp_path / "c.jsonl"
        cassette = Cassette(cassette_path)
        template = PromptTemplate()
        turns = [ConversationTurn("seeker", "u", "something fun")]
        response = "\n".join(
            f"{p}. Film Number {ids[j]} (2000)" for p, j in enumerate([3, 99, 500, 7000, 24000], 1)
        )
        cassette.record(prompt_hash(build_prompt(turns, template)), response, "m")
        gateway = Gateway(ProviderConfig(mode="replay", cassette_path=cassette_path))
        recommender = Recommender(catalog, embeddings, gateway, template)

        recommender.recommend(turns, 10)  # warm up
        start = time.perf_counter()
        ranking = recommender.recommend(turns, 10)
        elapsed = time.perf_counter() - start
        assert ranking.diagnostics["n_matched"] == 5
        assert elapsed < 0.050, f"rank path took {elapsed * 1000:.1f} ms"
