"""Stateless recommendation service over immutable artifacts.

Clients resend the full turn list on every request, so the service holds no
session state and scales horizontally. Responses are serialized canonically
(sorted keys, fixed separators) to keep replay-mode runs byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .corpus import RECOMMENDER, SEEKER, ConversationTurn, load_catalog
from .embeddings.matrix import load_embeddings
from .errors import CassetteMissError, DataError, ProviderError
from .llm_gateway import Gateway, PromptTemplate, ProviderConfig
from .matcher import normalize_title
from .ranker import Recommender

MAX_K = 100


@dataclass
class AppConfig:
    catalog_path: str
    embeddings_path: str
    cassette_path: str | None = None
    popularity_path: str | None = None
    provider_mode: str = "replay"
    provider_endpoint: str | None = None
    provider_model: str = "gpt-3.5-turbo"
    template: dict = field(default_factory=dict)
    request_cap: int = 8
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080
    cors_origins: list[str] = field(default_factory=lambda: ["*"])

    @classmethod
    def load(cls, path: str | Path) -> "AppConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)


class TurnIn(BaseModel):
    speaker: str
    text: str


class RecommendIn(BaseModel):
    session_id: str = ""
    turns: list[TurnIn] = Field(min_length=1)
    k: int = 10


def _canonical(payload: dict, status_code: int = 200) -> Response:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
    return Response(content=body, status_code=status_code, media_type="application/json")


def _file_hash(path: str | Path | None) -> str | None:
    if path is None or not Path(path).exists():
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_recommender(config: AppConfig) -> tuple[Recommender, dict]:
    catalog = load_catalog(config.catalog_path)
    embeddings = load_embeddings(config.embeddings_path)
    provider = ProviderConfig(
        mode=config.provider_mode,
        endpoint=config.provider_endpoint,
        model=config.provider_model,
        cassette_path=config.cassette_path,
    )
    template = PromptTemplate(**config.template) if config.template else PromptTemplate()
    popularity = None
    if config.popularity_path:
        with open(config.popularity_path, encoding="utf-8") as fh:
            popularity = {k: float(v) for k, v in json.load(fh).items()}
    recommender = Recommender(
        catalog, embeddings, Gateway(provider), template, popularity=popularity
    )
    hashes = {
        "catalog": _file_hash(config.catalog_path),
        "embeddings": _file_hash(config.embeddings_path),
        "cassette": _file_hash(config.cassette_path),
    }
    return recommender, hashes


def create_app(
    recommender: Recommender,
    artifact_hashes: dict | None = None,
    request_cap: int = 8,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    app = FastAPI(title="convrec", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    gate = threading.BoundedSemaphore(request_cap)
    catalog = recommender.catalog
    hashes = artifact_hashes or {}
    api_token = os.environ.get("CONVREC_API_TOKEN")

    # normalized titles, sorted for prefix search
    search_rows = sorted(
        (normalize_title(item.title), item.item_id) for item in catalog.items
    )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        details = [
            {"field": ".".join(str(p) for p in err.get("loc", [])), "message": err.get("msg", "")}
            for err in exc.errors()
        ]
        return _canonical({"error": "invalid request", "details": details}, status_code=400)

    def _auth_failure(request: Request) -> Response | None:
        if api_token is None:
            return None
        header = request.headers.get("authorization", "")
        if header == f"Bearer {api_token}":
            return None
        return _canonical({"error": "unauthorized"}, status_code=401)

    @app.get("/v1/health")
    def health():
        return _canonical({"status": "ok", "artifacts": hashes})

    @app.get("/v1/items/search")
    def search(q: str = "", limit: int = 10):
        limit = max(1, min(limit, 100))
        prefix = normalize_title(q)
        items = []
        if prefix:
            for norm, item_id in search_rows:
                if norm.startswith(prefix):
                    item = catalog.by_id[item_id]
                    items.append({"item_id": item.item_id, "title": item.title, "year": item.year})
                    if len(items) >= limit:
                        break
        return _canonical({"items": items})

    @app.post("/v1/recommend")
    def recommend(body: RecommendIn, request: Request):
        denied = _auth_failure(request)
        if denied is not None:
            return denied
        if not (1 <= body.k <= MAX_K):
            return _canonical({"error": "k out of range", "details": [
                {"field": "k", "message": f"k must be in [1, {MAX_K}]"}
            ]}, status_code=400)
        turns = []
        for i, t in enumerate(body.turns):
            if t.speaker not in (SEEKER, RECOMMENDER):
                return _canonical({"error": "invalid request", "details": [
                    {"field": f"turns.{i}.speaker", "message": "must be seeker or recommender"}
                ]}, status_code=400)
            turns.append(ConversationTurn(t.speaker, body.session_id, t.text))

        if not gate.acquire(blocking=False):
            return _canonical({"error": "too many in-flight requests"}, status_code=429)
        try:
            ranking = recommender.recommend(turns, body.k)
        except (ProviderError, CassetteMissError) as exc:
            return _canonical(
                {"error": str(exc), "fallback_used": False}, status_code=502
            )
        finally:
            gate.release()

        items = []
        for entry in ranking.entries:
            item = catalog.by_id[entry.item_id]
            items.append(
                {
                    "item_id": entry.item_id,
                    "title": item.title,
                    "year": item.year,
                    "score": entry.score,
                    "provenance": entry.provenance,
                }
            )
        diag = ranking.diagnostics
        return _canonical(
            {
                "items": items,
                "fallback_used": ranking.fallback_used,
                "diagnostics": {
                    "n_parsed": diag.get("n_parsed", 0),
                    "n_matched": diag.get("n_matched", 0),
                    "n_ambiguous": diag.get("n_ambiguous", 0),
                },
            }
        )

    return app


def app_from_config(config: AppConfig) -> FastAPI:
    recommender, hashes = build_recommender(config)
    return create_app(
        recommender,
        hashes,
        request_cap=config.request_cap,
        cors_origins=config.cors_origins,
    )
