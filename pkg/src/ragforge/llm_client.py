"""Uniform completion interface over pluggable LLM backends.

Two providers ship: a deterministic scripted provider for tests and
pipelines (fixture files keyed by prompt hash, or an in-memory round-robin
script) and an HTTP provider that forwards requests verbatim with retries.
Requests are logged by prompt hash only; API keys never reach a log line.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import httpx

from .errors import FixtureMissError, TransportError

log = logging.getLogger(__name__)

API_KEY_ENV = "RAGFORGE_LLM_API_KEY"


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.0
    top_p: float = 1.0
    n: int = 1
    max_tokens: int = 512

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")


@dataclass(frozen=True)
class CompletionResult:
    samples: tuple[str, ...]
    provider: str
    latency_ms: int = 0


class LlmProvider(Protocol):
    name: str

    def complete(self, request: CompletionRequest) -> CompletionResult: ...


class ScriptedProvider:
    """Deterministic provider: fixture files keyed by prompt hash, or a
    round-robin script consumed in order.  Thread-safe."""

    def __init__(
        self,
        script: Optional[Sequence[str]] = None,
        fixture_dir: Optional[str] = None,
    ):
        if (script is None) == (fixture_dir is None):
            raise ValueError("provide exactly one of script or fixture_dir")
        self.name = "scripted"
        self._script = list(script) if script is not None else None
        self._fixture_dir = Path(fixture_dir) if fixture_dir is not None else None
        self._cursor = 0
        self._lock = threading.Lock()
        self.requests: list[CompletionRequest] = []

    @property
    def last_request(self) -> Optional[CompletionRequest]:
        return self.requests[-1] if self.requests else None

    def _fixture_samples(self, request: CompletionRequest) -> list[str]:
        key = prompt_hash(request.prompt)
        path = self._fixture_dir / f"{key}.json"
        if not path.exists():
            raise FixtureMissError(key)
        fixture = json.loads(path.read_text(encoding="utf-8"))
        samples = fixture if isinstance(fixture, list) else fixture["samples"]
        if not samples:
            raise FixtureMissError(key)
        return [str(samples[i % len(samples)]) for i in range(request.n)]

    def _script_samples(self, request: CompletionRequest) -> list[str]:
        if not self._script:
            raise FixtureMissError(prompt_hash(request.prompt))
        out = []
        for _ in range(request.n):
            out.append(self._script[self._cursor % len(self._script)])
            self._cursor += 1
        return out

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            self.requests.append(request)
            log.debug("scripted completion prompt_hash=%s n=%d", prompt_hash(request.prompt), request.n)
            if self._fixture_dir is not None:
                samples = self._fixture_samples(request)
            else:
                samples = self._script_samples(request)
        return CompletionResult(samples=tuple(samples), provider=self.name, latency_ms=0)


class HttpProvider:
    """POSTs the request as JSON and expects {"samples": [...]} back.

    Transient transport failures are retried with exponential backoff
    (max_attempts total, backoff_base * 2^attempt seconds).  Fixture-style
    semantic errors are never retried because the HTTP provider has none.
    """

    def __init__(
        self,
        endpoint: str,
        model: str = "",
        api_key: Optional[str] = None,
        timeout: float = 30.0,
        max_attempts: int = 3,
        backoff_base: float = 1.0,
    ):
        self.name = "http"
        self.endpoint = endpoint
        self.model = model
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base

    def complete(self, request: CompletionRequest) -> CompletionResult:
        body = {
            "model": self.model,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "top_p": request.top_p,
            "n": request.n,
            "max_tokens": request.max_tokens,
        }
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        started = time.monotonic()
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff_base * 2 ** (attempt - 1))
            try:
                resp = httpx.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout
                )
                resp.raise_for_status()
                samples = [str(s) for s in resp.json()["samples"]]
                latency = int((time.monotonic() - started) * 1000)
                log.debug(
                    "llm call ok prompt_hash=%s n=%d latency_ms=%d",
                    prompt_hash(request.prompt),
                    request.n,
                    latency,
                )
                return CompletionResult(
                    samples=tuple(samples), provider=self.name, latency_ms=latency
                )
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_error = exc
                log.warning(
                    "llm call failed (attempt %d/%d) prompt_hash=%s: %s",
                    attempt + 1,
                    self.max_attempts,
                    prompt_hash(request.prompt),
                    exc,
                )
        raise TransportError(
            f"backend unreachable after {self.max_attempts} attempts: {last_error}"
        )


class BoundedProvider:
    """Caps concurrent in-flight calls on a wrapped provider."""

    def __init__(self, inner: LlmProvider, max_in_flight: int = 4):
        self.name = inner.name
        self._inner = inner
        self._gate = threading.Semaphore(max_in_flight)

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._gate:
            return self._inner.complete(request)
