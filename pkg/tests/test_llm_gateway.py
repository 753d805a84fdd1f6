import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convrec.corpus import ConversationTurn
from convrec.errors import CassetteMissError, DataError, ProviderError
from convrec.llm_gateway import (
    Cassette,
    Gateway,
    PromptTemplate,
    ProviderConfig,
    build_prompt,
    complete,
    parse_recommendations,
    prompt_hash,
)


def turns(*texts):
    speakers = ["seeker", "recommender"]
    return [
        ConversationTurn(speakers[i % 2], f"u{i}", text) for i, text in enumerate(texts)
    ]


class TestBuildPrompt:
    def test_contains_all_parts(self):
        template = PromptTemplate(n_candidates=5)
        prompt = build_prompt(turns("something like Inception"), template)
        assert template.task_text in prompt
        assert "numbered list of 5 movie titles" in prompt
        assert "Seeker: something like Inception" in prompt

    def test_order_preserved_and_no_target(self):
        prompt = build_prompt(turns("first", "second", "third"), PromptTemplate())
        i1 = prompt.index("Seeker: first")
        i2 = prompt.index("Recommender: second")
        i3 = prompt.index("Seeker: third")
        assert i1 < i2 < i3

    def test_deterministic(self):
        context = turns("a", "b", "c")
        template = PromptTemplate()
        assert build_prompt(context, template) == build_prompt(context, template)

    def test_empty_context(self):
        with pytest.raises(DataError):
            build_prompt([], PromptTemplate())


class TestParse:
    def test_canonical_numbered_list(self):
        result = parse_recommendations("1. Heat (1995)\n2. Collateral (2004)")
        recs = result.recommendations
        assert [(r.title, r.year, r.position) for r in recs] == [
            ("Heat", 1995, 1),
            ("Collateral", 2004, 2),
        ]
        assert result.n_unparsed_lines == 0

    def test_inline_bullet(self):
        result = parse_recommendations("I'd suggest: - Memento")
        assert [(r.title, r.year, r.position) for r in result.recommendations] == [
            ("Memento", None, 1)
        ]

    def test_refusal(self):
        result = parse_recommendations("I cannot recommend movies.")
        assert result.recommendations == []
        assert result.n_unparsed_lines == 1

    def test_markdown_stripped(self):
        result = parse_recommendations("1. **Heat** (1995)")
        assert result.recommendations[0].title == "Heat"

    def test_truncates_at_n_max(self):
        text = "\n".join(f"{i}. Movie {i} (200{i % 10})" for i in range(1, 31))
        result = parse_recommendations(text, n_max=20)
        assert len(result.recommendations) == 20

    def test_positions_strictly_increasing(self):
        text = "preamble\n1. A (2000)\nnoise line\n2. B (2001)\n- C"
        result = parse_recommendations(text)
        positions = [r.position for r in result.recommendations]
        assert positions == sorted(set(positions))

    @given(st.text(max_size=400))
    @settings(max_examples=300, deadline=None)
    def test_total_and_never_empty_titles(self, text):
        result = parse_recommendations(text)
        for rec in result.recommendations:
            assert rec.title
        assert result.n_unparsed_lines >= 0


class TestCassette:
    def test_record_then_replay(self, tmp_path):
        path = tmp_path / "c.jsonl"
        cassette = Cassette(path)
        key = prompt_hash("hello")
        cassette.record(key, "world", "test-model")

        reloaded = Cassette(path)
        assert reloaded.lookup(key) == "world"
        assert len(reloaded) == 1

    def test_record_is_append_only_and_dedup(self, tmp_path):
        path = tmp_path / "c.jsonl"
        cassette = Cassette(path)
        key = prompt_hash("hello")
        cassette.record(key, "world", "m")
        cassette.record(key, "world2", "m")  # same hash: no second entry
        assert len(path.read_text().strip().splitlines()) == 1

    def test_bad_entry(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("{not json}\n")
        with pytest.raises(DataError):
            Cassette(path)


class TestReplayMode:
    def test_replay_returns_stored(self, tmp_path):
        path = tmp_path / "c.jsonl"
        Cassette(path).record(prompt_hash("p1"), "stored response", "m")
        config = ProviderConfig(mode="replay", cassette_path=path)
        assert complete("p1", config) == "stored response"

    def test_replay_miss_names_hash(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.touch()
        config = ProviderConfig(mode="replay", cassette_path=path)
        with pytest.raises(CassetteMissError) as err:
            complete("unseen prompt", config)
        assert prompt_hash("unseen prompt") in str(err.value)

    def test_replay_requires_cassette(self):
        with pytest.raises(DataError):
            ProviderConfig(mode="replay")

    def test_temperature_pinned(self):
        with pytest.raises(DataError):
            ProviderConfig(mode="live", temperature=0.7)


class _StubHandler(BaseHTTPRequestHandler):
    behaviors: list = []  # each entry: status or "ok"
    calls: list = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        type(self).calls.append(body)
        behavior = type(self).behaviors.pop(0) if type(self).behaviors else "ok"
        if behavior == "ok":
            payload = {
                "choices": [
                    {"message": {"content": f"1. Echo {body['messages'][0]['content'][:10]} (2000)"}}
                ]
            }
            data = json.dumps(payload).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(data)
        else:
            self.send_response(behavior)
            self.end_headers()
            self.wfile.write(b"{}")

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    _StubHandler.behaviors = []
    _StubHandler.calls = []
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/chat/completions"
    server.shutdown()


class TestLiveAndRecord:
    def test_live_roundtrip(self, stub_server):
        config = ProviderConfig(mode="live", endpoint=stub_server)
        response = complete("what to watch", config)
        assert response.startswith("1. Echo")
        assert _StubHandler.calls[0]["temperature"] == 0
        assert _StubHandler.calls[0]["messages"] == [
            {"role": "user", "content": "what to watch"}
        ]

    def test_retry_then_success(self, stub_server):
        _StubHandler.behaviors = [500, 503]
        config = ProviderConfig(mode="live", endpoint=stub_server, backoff=0.01)
        assert complete("p", config).startswith("1. Echo")
        assert len(_StubHandler.calls) == 3

    def test_retries_exhausted(self, stub_server):
        _StubHandler.behaviors = [500, 500, 500, 500]
        config = ProviderConfig(mode="live", endpoint=stub_server, max_retries=2, backoff=0.01)
        with pytest.raises(ProviderError):
            complete("p", config)

    def test_client_error_no_retry(self, stub_server):
        _StubHandler.behaviors = [403]
        config = ProviderConfig(mode="live", endpoint=stub_server, backoff=0.01)
        with pytest.raises(ProviderError):
            complete("p", config)
        assert len(_StubHandler.calls) == 1

    def test_record_one_entry_per_distinct_prompt(self, stub_server, tmp_path):
        path = tmp_path / "c.jsonl"
        config = ProviderConfig(mode="record", endpoint=stub_server, cassette_path=path)
        gateway = Gateway(config)
        gateway.complete("prompt one")
        gateway.complete("prompt one")  # cache hit: no second call, no new entry
        gateway.complete("prompt two")
        assert len(path.read_text().strip().splitlines()) == 2
        assert len(_StubHandler.calls) == 2

    def test_recorded_cassette_replays_identically(self, stub_server, tmp_path):
        path = tmp_path / "c.jsonl"
        record = Gateway(ProviderConfig(mode="record", endpoint=stub_server, cassette_path=path))
        live_response = record.complete("some prompt")
        replay = Gateway(ProviderConfig(mode="replay", cassette_path=path))
        assert replay.complete("some prompt") == live_response
