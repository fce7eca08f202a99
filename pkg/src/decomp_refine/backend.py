"""Chat-completion backends for the generator and refiner roles.

Two implementations share one ``complete()`` interface: ``HttpBackend`` talks
to any chat-completions style endpoint, ``FixtureBackend`` replays responses
stored on disk keyed by the SHA-256 of the user text. ``RecordingBackend``
wraps a live backend and writes such fixtures.
"""

from __future__ import annotations

import hashlib
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from . import clex
from .errors import BackendUnavailable, FixtureDirMissing, ResponseTruncated

log = logging.getLogger(__name__)


@dataclass
class BackendConfig:
    endpoint_url: str = ""
    model_name: str = ""
    api_key_env_var: str = ""
    temperature: float = 0.0
    max_new_tokens: int = 2048
    request_timeout: float = 120.0
    max_retries: int = 3
    retry_backoff: float = 1.0
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.max_new_tokens <= 0:
            raise ValueError("max_new_tokens must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class CompletionRequest:
    system_text: str
    user_text: str

    @property
    def key(self) -> str:
        return request_hash(self.user_text)


@dataclass
class CompletionResponse:
    text: str
    token_count_estimate: int
    latency: float
    attempt_count: int
    failed: bool = False


def request_hash(user_text: str) -> str:
    return hashlib.sha256(user_text.encode("utf-8")).hexdigest()


class Backend:
    name = "backend"

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        raise NotImplementedError


class HttpBackend(Backend):
    """OpenAI-compatible ``/chat/completions`` client with retry and throttling."""

    name = "http"
    _TRANSIENT = {408, 409, 425, 429, 500, 502, 503, 504}

    def __init__(self, cfg: BackendConfig, client: httpx.Client | None = None):
        if not cfg.endpoint_url:
            raise ValueError("endpoint_url is required for the HTTP backend")
        self.cfg = cfg
        self._client = client or httpx.Client(timeout=cfg.request_timeout)
        self._gate = threading.BoundedSemaphore(cfg.max_in_flight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.cfg.api_key_env_var:
            key = os.environ.get(self.cfg.api_key_env_var)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    def payload(self, req: CompletionRequest) -> dict:
        messages = []
        if req.system_text:
            messages.append({"role": "system", "content": req.system_text})
        messages.append({"role": "user", "content": req.user_text})
        return {
            "model": self.cfg.model_name,
            "messages": messages,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_new_tokens,
        }

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        body = self.payload(req)
        start = time.monotonic()
        last_error = "no attempt made"
        for attempt in range(1, self.cfg.max_retries + 2):
            if attempt > 1:
                time.sleep(self.cfg.retry_backoff * 2 ** (attempt - 2))
            try:
                with self._gate:
                    resp = self._client.post(self.cfg.endpoint_url, json=body, headers=self._headers())
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                log.warning("attempt %d to %s failed: %s", attempt, self.cfg.endpoint_url, last_error)
                continue
            if resp.status_code in self._TRANSIENT:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise BackendUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                choice = resp.json()["choices"][0]
                text = choice["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendUnavailable(f"malformed response: {exc}") from exc
            out = CompletionResponse(
                text=text,
                token_count_estimate=clex.count_tokens(text),
                latency=time.monotonic() - start,
                attempt_count=attempt,
                failed=not text,
            )
            if choice.get("finish_reason") == "length":
                raise ResponseTruncated("response hit max_new_tokens", out)
            return out
        raise BackendUnavailable(
            f"{self.cfg.endpoint_url} unavailable after {self.cfg.max_retries + 1} attempts ({last_error})"
        )


class FixtureBackend(Backend):
    """Pure lookup of ``<sha256(user_text)>.txt`` files in a directory."""

    name = "fixture"

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise FixtureDirMissing(f"fixture directory {self.directory} does not exist")

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        path = self.directory / f"{req.key}.txt"
        if not path.exists():
            raise BackendUnavailable(f"no fixture for request {req.key[:12]}")
        text = path.read_text(encoding="utf-8")
        return CompletionResponse(text, clex.count_tokens(text), 0.0, 1)


def mock_from_fixtures(path: str | Path) -> FixtureBackend:
    return FixtureBackend(path)


def write_fixture(directory: str | Path, user_text: str, response_text: str) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{request_hash(user_text)}.txt"
    path.write_text(response_text, encoding="utf-8")
    return path


class RecordingBackend(Backend):
    """Forward to *inner* and store each response as a replayable fixture."""

    name = "recording"

    def __init__(self, inner: Backend, directory: str | Path):
        self.inner = inner
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        resp = self.inner.complete(req)
        write_fixture(self.directory, req.user_text, resp.text)
        return resp


def fixture_digest(directory: str | Path) -> str:
    h = hashlib.sha256()
    for p in sorted(Path(directory).glob("*.txt")):
        h.update(p.name.encode())
        h.update(hashlib.sha256(p.read_bytes()).digest())
    return h.hexdigest()
