"""Language-model backends and structured-output extraction.

A backend is anything with ``complete(request) -> BackendResponse``. Two are
provided: ``HttpBackend`` for chat-completion style APIs and
``ScriptedBackend``, which replays canned responses keyed by (role, round)
so pipeline runs are reproducible offline.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

import httpx

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "SCHEMAGEN_API_KEY"


class BackendError(RuntimeError):
    """Transport failure that survived the retry budget."""


class ConfigError(ValueError):
    """Bad or incomplete backend configuration."""


class StructuredOutputError(ValueError):
    """Model output could not be turned into the expected document."""

    def __init__(self, message: str, attempts: int = 0, last_body: str = "") -> None:
        super().__init__(message)
        self.attempts = attempts
        self.last_body = last_body


@dataclass(frozen=True)
class BackendRequest:
    role: str
    round: int
    prompt: str
    system: str = ""
    temperature: float = 1.0
    top_p: float = 1.0
    attempt: int = 1


@dataclass(frozen=True)
class BackendResponse:
    text: str


class Backend(Protocol):
    def complete(self, request: BackendRequest) -> BackendResponse: ...


# -- scripted -----------------------------------------------------------------


@dataclass
class ScriptEntry:
    role: str
    body: str
    round: int | None = None


class ScriptedBackend:
    """Replays responses from a script.

    Entries carrying a ``round`` answer only that (role, round) pair and are
    consumed in order, the last one repeating. Entries without a round form a
    per-role queue used when no round-specific entry exists; the last one
    repeats as well. A role with nothing scripted raises ``BackendError``.
    """

    def __init__(self, entries: list[ScriptEntry]) -> None:
        self._keyed: dict[tuple[str, int], list[str]] = {}
        self._queued: dict[str, list[str]] = {}
        for e in entries:
            if e.round is None:
                self._queued.setdefault(e.role, []).append(e.body)
            else:
                self._keyed.setdefault((e.role, e.round), []).append(e.body)
        self._pos: dict[Any, int] = {}
        self._lock = threading.Lock()
        self.requests: list[BackendRequest] = []

    @classmethod
    def from_doc(cls, doc: Any) -> ScriptedBackend:
        """Build from ``{"responses": [{"role", "body", "round"?}, ...]}`` or the bare list."""
        items = doc.get("responses") if isinstance(doc, dict) else doc
        if not isinstance(items, list):
            raise ConfigError("script must be a list of responses or {'responses': [...]}")
        entries = []
        for i, item in enumerate(items):
            if not isinstance(item, dict) or "role" not in item or "body" not in item:
                raise ConfigError(f"script entry {i} needs 'role' and 'body'")
            body = item["body"]
            if not isinstance(body, str):
                body = json.dumps(body, ensure_ascii=False)
            entries.append(ScriptEntry(str(item["role"]), body, item.get("round")))
        return cls(entries)

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedBackend:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read script {path}: {exc}") from exc
        return cls.from_doc(doc)

    def _take(self, key: Any, bodies: list[str]) -> str:
        i = self._pos.get(key, 0)
        self._pos[key] = i + 1
        return bodies[min(i, len(bodies) - 1)]

    def complete(self, request: BackendRequest) -> BackendResponse:
        with self._lock:
            self.requests.append(request)
            key = (request.role, request.round)
            if key in self._keyed:
                return BackendResponse(self._take(key, self._keyed[key]))
            if request.role in self._queued:
                return BackendResponse(self._take(request.role, self._queued[request.role]))
        raise BackendError(f"script has no response for {request.role} at round {request.round}")


# -- http ---------------------------------------------------------------------


@dataclass(frozen=True)
class HttpSettings:
    url: str
    model: str
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout: float = 60.0
    max_retries: int = 3
    backoff: float = 1.0


class HttpBackend:
    """Client for an OpenAI-compatible ``/chat/completions`` endpoint.

    The API key is read from the environment variable named in the settings;
    it is never accepted directly. One ``httpx.Client`` is shared, which is
    safe across threads.
    """

    RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}

    def __init__(self, settings: HttpSettings, client: httpx.Client | None = None) -> None:
        if not settings.url or not settings.model:
            raise ConfigError("http backend needs both 'url' and 'model'")
        key = os.environ.get(settings.api_key_env, "")
        if not key:
            raise ConfigError(f"environment variable {settings.api_key_env} is not set")
        self.settings = settings
        self._client = client or httpx.Client(timeout=settings.timeout)
        self._headers = {"Authorization": f"Bearer {key}"}

    def complete(self, request: BackendRequest) -> BackendResponse:
        messages = []
        if request.system:
            messages.append({"role": "system", "content": request.system})
        messages.append({"role": "user", "content": request.prompt})
        payload = {
            "model": self.settings.model,
            "messages": messages,
            "temperature": request.temperature,
            "top_p": request.top_p,
        }
        last: Exception | None = None
        for attempt in range(1, self.settings.max_retries + 1):
            try:
                resp = self._client.post(self.settings.url, json=payload, headers=self._headers)
                if resp.status_code in self.RETRY_STATUS:
                    raise httpx.HTTPStatusError(
                        f"retryable status {resp.status_code}", request=resp.request, response=resp
                    )
                resp.raise_for_status()
                return BackendResponse(resp.json()["choices"][0]["message"]["content"] or "")
            except httpx.HTTPStatusError as exc:
                if exc.response.status_code not in self.RETRY_STATUS:
                    raise BackendError(f"backend returned HTTP {exc.response.status_code}") from exc
                last = exc
            except httpx.TransportError as exc:
                last = exc
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise BackendError(f"unexpected response shape: {exc}") from exc
            log.warning("backend attempt %d/%d failed: %s", attempt, self.settings.max_retries, last)
            if attempt < self.settings.max_retries:
                time.sleep(self.settings.backoff * 2 ** (attempt - 1))
        raise BackendError(f"backend unreachable after {self.settings.max_retries} attempts: {last}")


# -- structured output --------------------------------------------------------

_FENCE = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\n(.*?)```", re.DOTALL)


def _balanced_block(text: str) -> str | None:
    """First ``{...}`` or ``[...]`` span whose brackets balance, skipping string literals.

    If the text ends while brackets are still open, the missing closers are
    appended (a common truncation in model output).
    """
    start = next((i for i, c in enumerate(text) if c in "{["), None)
    if start is None:
        return None
    stack: list[str] = []
    in_str = esc = False
    for i in range(start, len(text)):
        c = text[i]
        if in_str:
            if esc:
                esc = False
            elif c == "\\":
                esc = True
            elif c == '"':
                in_str = False
            continue
        if c == '"':
            in_str = True
        elif c in "{[":
            stack.append("}" if c == "{" else "]")
        elif c in "}]":
            if not stack or stack.pop() != c:
                return None
            if not stack:
                return text[start : i + 1]
    if in_str:
        return None
    return text[start:] + "".join(reversed(stack))


def parse_structured(body: str) -> Any:
    """Parse a JSON document out of model output.

    Tries the whole body, then each fenced code block, then the first
    bracket-balanced span (closing unterminated brackets).
    """
    candidates = [body.strip()]
    candidates.extend(m.group(1).strip() for m in _FENCE.finditer(body))
    block = _balanced_block(body)
    if block is not None:
        candidates.append(block)
    for text in candidates:
        if not text:
            continue
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            continue
    raise StructuredOutputError("no parsable structured document in output", last_body=body)


def request_structured(
    backend: Backend,
    request: BackendRequest,
    validate: Callable[[Any], Any] = lambda doc: doc,
    attempts: int = 3,
    on_attempt: Callable[[BackendRequest, str], None] | None = None,
) -> tuple[Any, str]:
    """Query until the output parses and ``validate`` accepts it.

    ``validate`` may transform the document and signals rejection by raising
    ``ValueError``. Returns (validated document, raw body). After ``attempts``
    failures raises ``StructuredOutputError``.
    """
    reason = ""
    body = ""
    req = request
    for n in range(1, attempts + 1):
        if n > 1:
            req = BackendRequest(
                role=request.role,
                round=request.round,
                prompt=request.prompt
                + f"\n\nYour previous reply could not be used ({reason}). "
                "Reply again with a single JSON object only.",
                system=request.system,
                temperature=request.temperature,
                top_p=request.top_p,
                attempt=n,
            )
        body = backend.complete(req).text
        if on_attempt is not None:
            on_attempt(req, body)
        try:
            return validate(parse_structured(body)), body
        except ValueError as exc:
            reason = str(exc)
            log.info("%s round %d attempt %d rejected: %s", request.role, request.round, n, reason)
    raise StructuredOutputError(
        f"{request.role}: unusable output after {attempts} attempts ({reason})", attempts, body
    )


# -- configuration ------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Knobs shared by a pipeline run; loaded from a JSON file."""

    backend: str = "scripted"
    url: str = ""
    model: str = ""
    api_key_env: str = DEFAULT_API_KEY_ENV
    temperature: float = 1.0
    top_p: float = 1.0
    round_cap: int = 15
    retry_cap: int = 3
    nested_cap: int = 5
    timeout: float = 60.0
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.backend not in ("scripted", "http"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        for name in ("round_cap", "retry_cap", "nested_cap"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.nested_cap > self.round_cap:
            raise ConfigError("nested_cap cannot exceed round_cap")

    def http_settings(self) -> HttpSettings:
        return HttpSettings(self.url, self.model, self.api_key_env, self.timeout)


def load_config(path: str | Path | None, **overrides: Any) -> RunConfig:
    doc: dict[str, Any] = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    known = set(RunConfig.__dataclass_fields__) - {"extra"}
    extra = {k: v for k, v in doc.items() if k not in known}
    if extra:
        log.warning("ignoring unknown config keys: %s", ", ".join(sorted(extra)))
    try:
        return RunConfig(**{k: v for k, v in doc.items() if k in known}, extra=extra)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
