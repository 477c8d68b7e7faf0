"""Provider-agnostic chat-completion access.

Two backends: ``http`` speaks an OpenAI-style chat-completions wire format
with transport-level retry, ``scripted`` replays ordered fixtures so the
entire pipeline runs deterministically offline.  Credentials are referenced
by environment-variable name only and never stored or logged.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import requests


class GatewayError(Exception):
    """Base class for completion failures."""


class CredentialError(GatewayError):
    """Credential environment variable missing or empty."""


class TransportError(GatewayError):
    """HTTP transport failed after exhausting retries."""


class NoFixtureError(GatewayError):
    """Scripted backend had no fixture matching the last user message."""


class SamplingError(GatewayError):
    """One or more self-consistency samples failed (all-or-nothing)."""

    def __init__(self, failures: list[tuple[int, Exception]]):
        self.failures = failures
        detail = "; ".join(f"sample {i}: {exc}" for i, exc in failures)
        super().__init__(f"self-consistency sampling failed: {detail}")


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    messages: tuple[tuple[str, str], ...]  # (role, text), roles user/assistant
    temperature: float = 0.0
    max_tokens: int = 2048
    sample_tag: str = ""

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        for role, _ in self.messages:
            if role not in ("user", "assistant"):
                raise ValueError(f"unknown role {role!r}")

    @property
    def last_user_message(self) -> str:
        for role, text in reversed(self.messages):
            if role == "user":
                return text
        raise ValueError("no user message in request")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    latency_s: float
    backend_id: str
    token_usage: dict[str, int] | None = None

    def __post_init__(self) -> None:
        if self.latency_s < 0:
            raise ValueError("latency must be non-negative")


@dataclass(frozen=True)
class Fixture:
    """One scripted reply: substring or regex matcher over the last user
    message, plus either a response or an error to simulate."""

    match: str
    response: str = ""
    regex: bool = False
    error: str | None = None  # "timeout" | "transport" to simulate a failure

    def matches(self, message: str) -> bool:
        if self.regex:
            return re.search(self.match, message) is not None
        return self.match in message


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # "http" | "scripted"
    endpoint: str = ""
    credential_env: str = ""
    model: str = ""
    timeout_s: float = 60.0
    max_retries_transport: int = 2
    fixtures_path: str = ""
    fixtures: tuple[Fixture, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("http", "scripted"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "http" and (not self.endpoint or not self.credential_env):
            raise ValueError("http backend requires endpoint and credential_env")


def load_fixtures(path: str | Path) -> tuple[Fixture, ...]:
    """Fixture file: JSON list of {match, response, regex?, error?} records."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError("fixture file must hold a JSON list")
    out = []
    for i, rec in enumerate(data):
        if not isinstance(rec, dict) or "match" not in rec:
            raise ValueError(f"fixture {i}: needs a 'match' key")
        out.append(Fixture(
            match=rec["match"],
            response=rec.get("response", ""),
            regex=bool(rec.get("regex", False)),
            error=rec.get("error"),
        ))
    return tuple(out)


class ScriptedBackend:
    """Replays fixtures: the first remaining fixture whose matcher hits the
    last user message is consumed and returned.  Fully deterministic, so
    ``complete_n`` serializes access to it."""

    deterministic = True

    def __init__(self, fixtures: tuple[Fixture, ...]):
        self._remaining = list(fixtures)
        self._lock = threading.Lock()
        self.backend_id = "scripted"

    @property
    def remaining(self) -> int:
        with self._lock:
            return len(self._remaining)

    def complete(self, request: ChatRequest) -> ChatResponse:
        message = request.last_user_message
        with self._lock:
            for i, fixture in enumerate(self._remaining):
                if fixture.matches(message):
                    del self._remaining[i]
                    if fixture.error == "timeout":
                        raise TransportError(
                            f"scripted timeout for sample {request.sample_tag!r}"
                        )
                    if fixture.error:
                        raise TransportError(f"scripted failure: {fixture.error}")
                    return ChatResponse(
                        text=fixture.response, latency_s=0.0,
                        backend_id=self.backend_id,
                    )
        raise NoFixtureError(
            f"no fixture matches message: {message[:200]!r}"
        )


class HttpBackend:
    """OpenAI-style chat completions over HTTP with bounded retry."""

    deterministic = False

    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()
        self.backend_id = f"http:{config.model}"

    def complete(self, request: ChatRequest) -> ChatResponse:
        credential = os.environ.get(self.config.credential_env, "")
        if not credential:
            raise CredentialError(
                f"credential environment variable {self.config.credential_env!r} "
                "is not set"
            )
        payload = {
            "model": self.config.model,
            "messages": [{"role": "system", "content": request.system_prompt}]
            + [{"role": r, "content": t} for r, t in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Authorization": f"Bearer {credential}"}
        last_error: Exception | None = None
        start = time.perf_counter()
        for attempt in range(self.config.max_retries_transport + 1):
            if attempt:
                time.sleep(min(2 ** (attempt - 1) * 0.5, 8.0))
            try:
                resp = self.session.post(
                    self.config.endpoint, json=payload, headers=headers,
                    timeout=self.config.timeout_s,
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code >= 500:
                last_error = TransportError(f"server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise TransportError(
                    f"chat completion failed: {resp.status_code} {resp.text[:200]}"
                )
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
            usage = body.get("usage")
            return ChatResponse(
                text=text,
                latency_s=time.perf_counter() - start,
                backend_id=self.backend_id,
                token_usage=dict(usage) if isinstance(usage, dict) else None,
            )
        raise TransportError(
            f"transport exhausted after {self.config.max_retries_transport + 1} "
            f"attempts: {last_error}"
        )


Backend = ScriptedBackend | HttpBackend


def backend_from_config(config: BackendConfig) -> Backend:
    if config.kind == "scripted":
        fixtures = config.fixtures
        if config.fixtures_path:
            fixtures = load_fixtures(config.fixtures_path)
        return ScriptedBackend(fixtures)
    return HttpBackend(config)


def complete(request: ChatRequest, backend: Backend) -> ChatResponse:
    return backend.complete(request)


def complete_n(
    request: ChatRequest, n: int, parallelism: int, backend: Backend
) -> list[ChatResponse]:
    """n independent completions, results in sample-index order.

    Fails all-or-nothing: a partial sample set would silently weaken the
    majority vote downstream.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    requests_ = [
        replace(request, sample_tag=f"{request.sample_tag}#{i}") for i in range(n)
    ]
    results: list[ChatResponse | None] = [None] * n
    failures: list[tuple[int, Exception]] = []

    if backend.deterministic or parallelism == 1 or n == 1:
        for i, req in enumerate(requests_):
            try:
                results[i] = backend.complete(req)
            except GatewayError as exc:
                failures.append((i, exc))
    else:
        with ThreadPoolExecutor(max_workers=min(parallelism, n)) as pool:
            futures = [pool.submit(backend.complete, req) for req in requests_]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except GatewayError as exc:
                    failures.append((i, exc))

    if failures:
        raise SamplingError(failures)
    return [r for r in results if r is not None]
