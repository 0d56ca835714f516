import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from ragforge.errors import FixtureMissError, TransportError
from ragforge.llm_client import (
    BoundedProvider,
    CompletionRequest,
    CompletionResult,
    HttpProvider,
    ScriptedProvider,
    prompt_hash,
)


class StubHandler(BaseHTTPRequestHandler):
    fail_times = 0
    calls = 0

    def do_POST(self):
        cls = type(self)
        cls.calls += 1
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        if cls.calls <= cls.fail_times:
            self.send_response(503)
            self.end_headers()
            return
        # Echo the prompt length back so tests can assert on it.
        payload = json.dumps({"samples": [f"len={len(body['prompt'])}"] * body["n"]})
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload.encode())

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    StubHandler.fail_times = 0
    StubHandler.calls = 0
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/complete"
    server.shutdown()


class TestCompletionRequest:
    def test_defaults(self):
        req = CompletionRequest(prompt="hi")
        assert (req.temperature, req.top_p, req.n) == (0.0, 1.0, 1)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"prompt": ""},
            {"prompt": "x", "n": 0},
            {"prompt": "x", "temperature": -0.5},
            {"prompt": "x", "top_p": 0.0},
            {"prompt": "x", "top_p": 1.5},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            CompletionRequest(**kwargs)


class TestScriptedProvider:
    def test_single_canned_answer(self):
        provider = ScriptedProvider(script=["the canned answer"])
        result = provider.complete(CompletionRequest(prompt="anything"))
        assert result.samples == ("the canned answer",)
        assert result.provider == "scripted"

    def test_three_samples_in_script_order(self):
        provider = ScriptedProvider(script=["one", "two", "three"])
        result = provider.complete(CompletionRequest(prompt="x", n=3))
        assert result.samples == ("one", "two", "three")

    def test_fixture_dir_keyed_by_prompt_hash(self, tmp_path):
        prompt = "what is the crop tool"
        key = prompt_hash(prompt)
        (tmp_path / f"{key}.json").write_text(json.dumps(["use the crop tool"]))
        provider = ScriptedProvider(fixture_dir=tmp_path)
        first = provider.complete(CompletionRequest(prompt=prompt))
        second = provider.complete(CompletionRequest(prompt=prompt))
        assert first == second == CompletionResult(
            samples=("use the crop tool",), provider="scripted", latency_ms=0
        )

    def test_fixture_miss_names_hash(self, tmp_path):
        provider = ScriptedProvider(fixture_dir=tmp_path)
        prompt = "unseen prompt"
        with pytest.raises(FixtureMissError) as exc:
            provider.complete(CompletionRequest(prompt=prompt))
        assert exc.value.prompt_hash == prompt_hash(prompt)
        # Non-transient: exactly one attempt was recorded, no retries.
        assert len(provider.requests) == 1

    def test_fixture_cycles_for_large_n(self, tmp_path):
        prompt = "p"
        (tmp_path / f"{prompt_hash(prompt)}.json").write_text(json.dumps(["a", "b"]))
        provider = ScriptedProvider(fixture_dir=tmp_path)
        result = provider.complete(CompletionRequest(prompt=prompt, n=5))
        assert result.samples == ("a", "b", "a", "b", "a")

    def test_requires_exactly_one_mode(self, tmp_path):
        with pytest.raises(ValueError):
            ScriptedProvider()
        with pytest.raises(ValueError):
            ScriptedProvider(script=["x"], fixture_dir=tmp_path)

    def test_records_requests(self):
        provider = ScriptedProvider(script=["y"])
        provider.complete(CompletionRequest(prompt="q1"))
        provider.complete(CompletionRequest(prompt="q2", n=1))
        assert [r.prompt for r in provider.requests] == ["q1", "q2"]
        assert provider.last_request.prompt == "q2"


class TestHttpProvider:
    def test_stub_echo(self, stub_server):
        provider = HttpProvider(endpoint=stub_server, backoff_base=0.01)
        prompt = "how long am i"
        result = provider.complete(CompletionRequest(prompt=prompt))
        assert result.samples == (f"len={len(prompt)}",)
        assert result.provider == "http"
        assert result.latency_ms >= 0

    def test_retries_then_succeeds(self, stub_server):
        StubHandler.fail_times = 2
        provider = HttpProvider(endpoint=stub_server, backoff_base=0.01, max_attempts=3)
        result = provider.complete(CompletionRequest(prompt="abc"))
        assert result.samples == ("len=3",)
        assert StubHandler.calls == 3

    def test_unreachable_raises_transport_error(self):
        provider = HttpProvider(
            endpoint="http://127.0.0.1:9/nope", backoff_base=0.01, max_attempts=3
        )
        with pytest.raises(TransportError, match="3 attempts"):
            provider.complete(CompletionRequest(prompt="x"))

    def test_api_key_never_logged(self, stub_server, caplog, monkeypatch):
        monkeypatch.setenv("RAGFORGE_LLM_API_KEY", "sk-SECRET-VALUE")
        StubHandler.fail_times = 1
        provider = HttpProvider(endpoint=stub_server, backoff_base=0.01)
        with caplog.at_level(logging.DEBUG):
            provider.complete(CompletionRequest(prompt="quiet"))
        assert "sk-SECRET-VALUE" not in caplog.text

    def test_forwards_sampling_parameters(self, stub_server):
        provider = HttpProvider(endpoint=stub_server, backoff_base=0.01)
        result = provider.complete(
            CompletionRequest(prompt="zz", temperature=1.0, top_p=1.0, n=4)
        )
        assert len(result.samples) == 4


class TestBoundedProvider:
    def test_caps_in_flight_calls(self):
        active = []
        peak = []
        lock = threading.Lock()

        class Slow:
            name = "slow"

            def complete(self, request):
                with lock:
                    active.append(1)
                    peak.append(len(active))
                threading.Event().wait(0.01)
                with lock:
                    active.pop()
                return CompletionResult(samples=("ok",), provider="slow")

        bounded = BoundedProvider(Slow(), max_in_flight=2)
        threads = [
            threading.Thread(
                target=lambda: bounded.complete(CompletionRequest(prompt="p"))
            )
            for _ in range(8)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert max(peak) <= 2
