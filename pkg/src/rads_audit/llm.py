"""Pluggable LLM transports.

Tests and offline runs use the replay transport exclusively; the HTTP
transport speaks a chat-completions style API and reads its key from the
environment so credentials never land in config files.
"""
from __future__ import annotations

import json
import logging
import os
import threading
import time
from pathlib import Path

import requests

from .errors import DataError, TransportError

logger = logging.getLogger(__name__)

API_KEY_ENV = "RADS_AUDIT_LLM_API_KEY"
API_URL_ENV = "RADS_AUDIT_LLM_URL"
DEFAULT_MODEL = "gpt-4"


class ReplayTransport:
    """Deterministic transport replaying canned responses keyed by app id.

    The replay file is a JSON object mapping app ids to raw reply text;
    the key ``"*"`` supplies a fallback for unlisted apps.
    """

    def __init__(self, responses: dict[str, str]):
        self.responses = dict(responses)

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayTransport":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load replay file {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise DataError(f"replay file {path} must hold an object of app_id -> reply")
        return cls({str(k): str(v) for k, v in data.items()})

    def complete(self, system_text: str, user_text: str, app_id: str = "") -> str:
        if app_id in self.responses:
            return self.responses[app_id]
        if "*" in self.responses:
            return self.responses["*"]
        raise TransportError(f"no canned response for app {app_id!r}")


class HttpTransport:
    """Minimal chat-completions client; API key comes from the environment."""

    def __init__(self, url: str | None = None, model: str = DEFAULT_MODEL, timeout: float = 60.0):
        self.url = url or os.environ.get(API_URL_ENV, "")
        if not self.url:
            raise DataError(f"no LLM endpoint configured; set {API_URL_ENV} or pass a URL")
        self.model = model
        self.timeout = timeout
        self._session = requests.Session()

    def complete(self, system_text: str, user_text: str, app_id: str = "") -> str:
        headers = {}
        key = os.environ.get(API_KEY_ENV)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": user_text},
            ],
        }
        try:
            resp = self._session.post(self.url, json=body, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"LLM endpoint unreachable: {exc}") from exc
        if resp.status_code >= 500:
            raise TransportError(f"LLM endpoint returned {resp.status_code}")
        if resp.status_code >= 400:
            # Client errors are not retryable; surface them as data problems.
            raise DataError(f"LLM endpoint rejected request: {resp.status_code} {resp.text[:200]}")
        try:
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected LLM endpoint payload: {exc}") from exc


class LlmHandle:
    """Transport wrapper adding retries, a request-rate cap, and an in-flight cap.

    Retries apply to TransportError only; malformed-but-delivered replies
    are never retried. Backoff doubles per attempt starting at
    ``backoff_base`` seconds.
    """

    def __init__(self, transport, max_attempts: int = 3, backoff_base: float = 1.0,
                 min_interval: float = 0.0, max_in_flight: int = 8, sleep=time.sleep):
        self.transport = transport
        self.max_attempts = max(1, max_attempts)
        self.backoff_base = backoff_base
        self.min_interval = min_interval
        self._sleep = sleep
        self._in_flight = threading.BoundedSemaphore(max(1, max_in_flight))
        self._rate_lock = threading.Lock()
        self._last_start = 0.0

    def _throttle(self):
        if self.min_interval <= 0:
            return
        with self._rate_lock:
            now = time.monotonic()
            wait = self._last_start + self.min_interval - now
            if wait > 0:
                self._sleep(wait)
            self._last_start = max(now, self._last_start + self.min_interval)

    def complete(self, system_text: str, user_text: str, app_id: str = "") -> str:
        last_error: TransportError | None = None
        with self._in_flight:
            for attempt in range(self.max_attempts):
                self._throttle()
                try:
                    return self.transport.complete(system_text, user_text, app_id=app_id)
                except TransportError as exc:
                    last_error = exc
                    if attempt + 1 < self.max_attempts:
                        delay = self.backoff_base * (2 ** attempt)
                        logger.warning("transport failed (%s); retrying in %.1fs", exc, delay)
                        self._sleep(delay)
        raise TransportError(
            f"transport failed after {self.max_attempts} attempts: {last_error}"
        ) from last_error


def make_llm(spec: str, **handle_kwargs) -> LlmHandle:
    """Build an LLM handle from a CLI-style spec: ``mock:<replay-file>`` or ``http[:<url>]``."""
    if spec.startswith("mock:"):
        return LlmHandle(ReplayTransport.from_file(spec[len("mock:"):]), **handle_kwargs)
    if spec == "http":
        return LlmHandle(HttpTransport(), **handle_kwargs)
    if spec.startswith("http:"):
        url = spec[len("http:"):]
        if not url.startswith(("http://", "https://")):
            url = "http:" + url
        return LlmHandle(HttpTransport(url), **handle_kwargs)
    raise DataError(f"unknown llm spec {spec!r}")
