#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/data/.

Everything here is seeded, so reruns are byte-identical. Run from the repo
root after changing the synthetic generator, the embedding trainer, or any
serialization format, then commit the diff deliberately.
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "tests" / "data"

sys.path.insert(0, str(ROOT / "src"))

from convrec.corpus import load_catalog  # noqa: E402
from convrec.embeddings import load_embeddings  # noqa: E402
from convrec.llm_gateway import Gateway, ProviderConfig  # noqa: E402
from convrec.ranker import Recommender  # noqa: E402
from convrec.service import create_app  # noqa: E402
from convrec.synthetic import make_corpus, write_corpus  # noqa: E402

TRAIN_ARGS = [
    "--backbone", "item2vec", "--dim", "16", "--epochs", "8",
    "--lr", "0.05", "--seed", "11",
]
EVAL_ARGS = ["--split", "test", "--pipeline", "bridge", "--k", "1,5,10", "--seed", "13"]


def main() -> None:
    pipeline = DATA / "pipeline"
    service = DATA / "service"
    pipeline.mkdir(parents=True, exist_ok=True)
    service.mkdir(parents=True, exist_ok=True)

    corpus = make_corpus(seed=7)
    paths = write_corpus(corpus, pipeline)
    emb_path = pipeline / "emb.txt"

    run = [sys.executable, "-m", "convrec.cli"]
    subprocess.run(
        run + ["train", "--catalog", str(paths["catalog"]),
               "--interactions", str(paths["interactions"]),
               "--out", str(emb_path), *TRAIN_ARGS],
        check=True, capture_output=True,
    )
    result = subprocess.run(
        run + ["eval", "--conversations", str(paths["conversations"]),
               "--catalog", str(paths["catalog"]),
               "--embeddings", str(emb_path),
               "--interactions", str(paths["interactions"]),
               "--provider", "replay", "--cassette", str(paths["cassette"]),
               *EVAL_ARGS],
        check=True, capture_output=True,
    )
    (pipeline / "golden_report.json").write_bytes(result.stdout)

    # service golden: request/response pair over the committed artifacts
    catalog = load_catalog(paths["catalog"])
    gateway = Gateway(ProviderConfig(mode="replay", cassette_path=paths["cassette"]))
    recommender = Recommender(catalog, load_embeddings(emb_path), gateway)
    app = create_app(recommender, {"fixture": "pipeline-v1"})

    from fastapi.testclient import TestClient

    conv = corpus.conversations[0]
    request_body = {
        "session_id": "golden",
        "turns": [{"speaker": t.speaker, "text": t.text} for t in conv.turns[:3]],
        "k": 10,
    }
    (service / "request.json").write_text(json.dumps(request_body, indent=2) + "\n")
    client = TestClient(app)
    response = client.post("/v1/recommend", json=request_body)
    response.raise_for_status()
    (service / "golden_response.json").write_bytes(response.content)

    config = {
        "catalog_path": "tests/data/pipeline/catalog.csv",
        "embeddings_path": "tests/data/pipeline/emb.txt",
        "cassette_path": "tests/data/pipeline/cassette.jsonl",
        "provider_mode": "replay",
        "request_cap": 8,
    }
    (service / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"fixtures written under {DATA}")


if __name__ == "__main__":
    main()
