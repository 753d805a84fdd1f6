"""LLM gateway: prompt construction, zero-shot completion, response parsing.

Completions are requested at temperature 0 (greedy decoding). Because even
greedy provider output can drift over time, offline runs use a cassette: a
JSONL store of prompt-hash -> response that makes the whole pipeline
replayable byte-for-byte. Live mode is for data collection only.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .corpus import SEEKER, ConversationTurn
from .errors import CassetteMissError, DataError, ProviderError

DEFAULT_TASK = (
    "Pretend you are a movie recommender system. Based on the conversation, "
    "recommend movies the seeker will like."
)
DEFAULT_FORMAT = (
    "Reply with a numbered list of {n_candidates} movie titles, each as: "
    "<index>. <Title> (<Year>). No other text."
)


def prompt_hash(prompt: str) -> str:
    """Canonical SHA-256 hex of the UTF-8 prompt bytes (exact-match replay key)."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PromptTemplate:
    task_text: str = DEFAULT_TASK
    format_text: str = DEFAULT_FORMAT
    n_candidates: int = 20

    def __post_init__(self):
        if not self.task_text or not self.format_text:
            raise DataError("template task/format texts must be non-empty")
        if self.n_candidates < 1:
            raise DataError("n_candidates must be >= 1")

    def template_hash(self) -> str:
        blob = json.dumps(
            {"task": self.task_text, "format": self.format_text, "n": self.n_candidates},
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def build_prompt(context: list[ConversationTurn], template: PromptTemplate) -> str:
    """Deterministic prompt from the turns before the target reply.

    The caller passes only turns t < k; the target recommender turn must not
    be included. Utterances pass through verbatim.
    """
    if not context:
        raise DataError("cannot build a prompt from an empty context")
    lines = [template.task_text, template.format_text.format(n_candidates=template.n_candidates)]
    lines.append("Conversation:")
    for turn in context:
        role = "Seeker" if turn.speaker == SEEKER else "Recommender"
        lines.append(f"{role}: {turn.text}")
    return "\n".join(lines)


@dataclass
class ProviderConfig:
    mode: str = "replay"  # live | record | replay
    endpoint: str | None = None
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    timeout: float = 30.0
    cassette_path: str | Path | None = None
    max_retries: int = 3
    backoff: float = 0.5
    max_in_flight: int = 4

    def __post_init__(self):
        if self.mode not in ("live", "record", "replay"):
            raise DataError(f"unknown provider mode {self.mode!r}")
        if self.temperature != 0.0:
            raise DataError("temperature is fixed at 0.0 for deterministic decoding")
        if self.mode in ("replay", "record") and self.cassette_path is None:
            raise DataError(f"{self.mode} mode requires cassette_path")

    def resolve_endpoint(self) -> str:
        if self.endpoint:
            return self.endpoint
        base = os.environ.get("LLM_API_BASE")
        if not base:
            raise ProviderError("no endpoint configured and LLM_API_BASE is unset")
        return base.rstrip("/") + "/chat/completions"


class Cassette:
    """JSONL store of recorded completions, keyed by canonical prompt hash."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        obj = json.loads(line)
                        self.entries[obj["hash"]] = obj["response"]
                    except (json.JSONDecodeError, KeyError) as exc:
                        raise DataError(f"{self.path}:{lineno}: bad cassette entry ({exc})") from None

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, key: str) -> str | None:
        return self.entries.get(key)

    def record(self, key: str, response: str, model: str) -> None:
        """Append one entry; no-op if the hash is already stored."""
        with self._lock:
            if key in self.entries:
                return
            self.entries[key] = response
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"hash": key, "model": model, "response": response}) + "\n")

    def file_hash(self) -> str | None:
        if not self.path.exists():
            return None
        return hashlib.sha256(self.path.read_bytes()).hexdigest()


class Gateway:
    """One provider configuration plus (when applicable) its cassette."""

    def __init__(self, config: ProviderConfig):
        self.config = config
        self.cassette = Cassette(config.cassette_path) if config.cassette_path else None
        self._gate = threading.Semaphore(config.max_in_flight)

    def complete(self, prompt: str) -> str:
        key = prompt_hash(prompt)
        mode = self.config.mode
        if mode == "replay":
            response = self.cassette.lookup(key)
            if response is None:
                raise CassetteMissError(key)
            return response
        if mode == "record":
            cached = self.cassette.lookup(key)
            if cached is not None:
                return cached
            response = self._call_live(prompt)
            self.cassette.record(key, response, self.config.model)
            return response
        return self._call_live(prompt)

    def _call_live(self, prompt: str) -> str:
        url = self.config.resolve_endpoint()
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get("LLM_API_KEY")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error: Exception | None = None
        with self._gate:
            for attempt in range(self.config.max_retries + 1):
                if attempt:
                    time.sleep(self.config.backoff * (2 ** (attempt - 1)))
                try:
                    resp = requests.post(
                        url, json=payload, headers=headers, timeout=self.config.timeout
                    )
                except requests.RequestException as exc:
                    last_error = exc
                    continue
                if resp.status_code in (429,) or resp.status_code >= 500:
                    last_error = ProviderError(f"provider status {resp.status_code}")
                    continue
                if resp.status_code != 200:
                    raise ProviderError(
                        f"provider status {resp.status_code}: {resp.text[:200]}"
                    )
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError) as exc:
                    raise ProviderError(f"malformed provider response: {exc}") from None
        raise ProviderError(f"provider unreachable after retries: {last_error}")


def complete(prompt: str, provider: ProviderConfig | Gateway) -> str:
    """One-shot completion; construct a Gateway for repeated calls."""
    gateway = provider if isinstance(provider, Gateway) else Gateway(provider)
    return gateway.complete(prompt)


@dataclass(frozen=True)
class ParsedRecommendation:
    raw_line: str
    title: str
    year: int | None
    position: int


@dataclass
class ParseResult:
    recommendations: list[ParsedRecommendation] = field(default_factory=list)
    n_unparsed_lines: int = 0

    def __iter__(self):
        return iter(self.recommendations)

    def __len__(self) -> int:
        return len(self.recommendations)


_NUMBERED_RE = re.compile(r"^\s*\d+\s*[.):]\s+(.+)$")
_BULLET_RE = re.compile(r"(?:^|:)\s*[-*•]\s+(.+)$")
_EMPHASIS_RE = re.compile(r"(\*\*|\*|__|_|`)")
_YEAR_RE = re.compile(r"\((\d{4})\)")


def _clean_title(text: str) -> tuple[str, int | None]:
    year = None
    match = _YEAR_RE.search(text)
    if match and text[: match.start()].strip():
        year = int(match.group(1))
        text = text[: match.start()]
    text = _EMPHASIS_RE.sub("", text)
    text = text.strip().strip("\"'").strip()
    return text.rstrip(" .,;:-").strip(), year


def parse_recommendations(response: str, n_max: int = 100) -> ParseResult:
    """Lenient extraction of `<index>. <Title> (<Year>)` / `- <Title>` lines.

    Never raises; non-matching non-empty lines are only counted. Order is
    preserved and output truncates at n_max.
    """
    result = ParseResult()
    for line in response.splitlines():
        if not line.strip():
            continue
        match = _NUMBERED_RE.match(line) or _BULLET_RE.search(line)
        if not match:
            result.n_unparsed_lines += 1
            continue
        title, year = _clean_title(match.group(1))
        if not title:
            result.n_unparsed_lines += 1
            continue
        if len(result.recommendations) < n_max:
            result.recommendations.append(
                ParsedRecommendation(line, title, year, len(result.recommendations) + 1)
            )
    return result
