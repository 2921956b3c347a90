"""Uniform access to language-model backends.

Two backends ship: a remote HTTP chat-completions client and a
deterministic scripted playback backend for offline runs and tests.
Every completion is cached content-addressed (digest of the
canonicalized request), so an identical request never reaches a backend
twice, within a process or across runs sharing a cache directory.

Constrained generation is enforced at the text level: validate each
output line against the section pattern, regenerate with a corrective
message on violation, and drop offending lines on the final attempt.
Remote chat endpoints expose no logits, so a token-mask hook is left to
local backends; the observable contract is the same either way.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .errors import BackendUnavailable, ConstraintUnsatisfiable, PlaybackMiss

log = logging.getLogger(__name__)

DEFAULT_REGENERATION_BUDGET = 3
DEFAULT_MAX_CONCURRENT = 4
CACHE_DIR_ENV = "SCENFORGE_CACHE_DIR"
API_KEY_ENV = "SCENFORGE_API_KEY"

CONFORMED = "verbatim"
FILTERED = "filtered"


@dataclass(frozen=True)
class Message:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class PromptRequest:
    model_id: str
    system: str = ""
    messages: tuple = ()
    temperature: float = 0.0
    max_tokens: int = 1024
    stop: tuple = ()
    stage_tag: str = "default"

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a request needs at least one message")
        if not self.stage_tag:
            raise ValueError("stage_tag must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    @classmethod
    def single(cls, model_id: str, system: str, user_text: str, stage_tag: str, **kw):
        return cls(
            model_id=model_id,
            system=system,
            messages=(Message("user", user_text),),
            stage_tag=stage_tag,
            **kw,
        )

    def followup(self, assistant_text: str, user_text: str) -> "PromptRequest":
        """Extend the conversation with the last reply and a new ask."""
        extended = self.messages + (
            Message("assistant", assistant_text),
            Message("user", user_text),
        )
        return replace(self, messages=extended)


@dataclass(frozen=True)
class Completion:
    text: str
    token_count: int
    latency_seconds: float
    from_cache: bool


@dataclass(frozen=True)
class ConstraintSpec:
    section_kind: str
    line_pattern: str
    allowed_lead_tokens: frozenset = frozenset()
    max_lines: int = 64


@dataclass(frozen=True)
class CacheEntry:
    key: str
    text: str
    token_count: int
    created_at: str


@dataclass
class GatewayEvent:
    """One backend or cache interaction, in order of occurrence."""

    stage_tag: str
    digest: str
    text: str
    latency_seconds: float
    from_cache: bool
    constrained: bool = False
    conformance: str | None = None


def cache_key(request: PromptRequest, constraint: ConstraintSpec | None = None) -> str:
    """Content digest of a request. stage_tag is excluded so identical
    prompts issued from different stages share one cache entry; system
    text and any constraint are included because they change the output.
    """
    payload = {
        "model_id": request.model_id,
        "system": request.system,
        "messages": [[m.role, m.content] for m in request.messages],
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
        "stop": list(request.stop),
        "constraint": (
            {
                "section_kind": constraint.section_kind,
                "line_pattern": constraint.line_pattern,
                "allowed_lead_tokens": sorted(constraint.allowed_lead_tokens),
                "max_lines": constraint.max_lines,
            }
            if constraint
            else None
        ),
    }
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- caches -----------------------------------------------------------------


class MemoryCache:
    def __init__(self):
        self._entries: dict[str, CacheEntry] = {}

    def get(self, key: str) -> CacheEntry | None:
        return self._entries.get(key)

    def put(self, key: str, text: str, token_count: int) -> None:
        self._entries.setdefault(
            key,
            CacheEntry(key, text, token_count, datetime.now(timezone.utc).isoformat()),
        )


class FileCache:
    """One file per entry, named by digest. Writes go through a temp
    file and an atomic rename, so concurrent writers are idempotent."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> CacheEntry | None:
        path = self._path(key)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        return CacheEntry(key, data["text"], data["token_count"], data["created_at"])

    def put(self, key: str, text: str, token_count: int) -> None:
        path = self._path(key)
        if path.exists():
            return
        payload = {
            "key": key,
            "text": text,
            "token_count": token_count,
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        tmp = path.with_suffix(f".tmp.{os.getpid()}.{threading.get_ident()}")
        tmp.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)


# --- backends ----------------------------------------------------------------


class RemoteBackend:
    """HTTP chat-completions client with retry and exponential backoff."""

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        retries: int = 3,
        backoff_seconds: float = 0.5,
        session=None,
    ):
        import requests

        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout = timeout
        self.retries = retries
        self.backoff_seconds = backoff_seconds
        self.session = session or requests.Session()
        self.call_count = 0

    def invoke(self, request: PromptRequest) -> tuple[str, int]:
        import requests

        self.call_count += 1
        messages = []
        if request.system:
            messages.append({"role": "system", "content": request.system})
        messages.extend({"role": m.role, "content": m.content} for m in request.messages)
        payload = {
            "model": request.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.stop:
            payload["stop"] = list(request.stop)
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last_error: Exception | None = None
        for attempt in range(self.retries):
            if attempt:
                time.sleep(self.backoff_seconds * (2 ** (attempt - 1)))
            try:
                response = self.session.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                log.warning("backend request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if response.status_code >= 500:
                last_error = BackendUnavailable(
                    f"server error {response.status_code} from {self.endpoint}"
                )
                continue
            if response.status_code >= 400:
                raise BackendUnavailable(
                    f"request rejected with status {response.status_code}: "
                    f"{response.text[:200]}"
                )
            data = response.json()
            text = data["choices"][0]["message"]["content"]
            tokens = data.get("usage", {}).get("completion_tokens", len(text.split()))
            return text, int(tokens)
        raise BackendUnavailable(
            f"backend unreachable after {self.retries} attempts: {last_error}"
        )


class PlaybackBackend:
    """Deterministic scripted backend.

    Responses are looked up by exact request digest first, then by
    stage_tag in scripted order. With a fixed transcript the whole
    gateway is a pure function.
    """

    def __init__(self, by_stage: dict | None = None, by_digest: dict | None = None):
        self.by_stage = {k: list(v) for k, v in (by_stage or {}).items()}
        self.by_digest = dict(by_digest or {})
        self.call_count = 0
        self._cursors: dict[str, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path) -> "PlaybackBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data.get("by_stage"), data.get("by_digest"))

    def invoke(self, request: PromptRequest) -> tuple[str, int]:
        with self._lock:
            self.call_count += 1
            digest = cache_key(request)
            if digest in self.by_digest:
                text = self.by_digest[digest]
                return text, len(text.split())
            queue = self.by_stage.get(request.stage_tag)
            cursor = self._cursors.get(request.stage_tag, 0)
            if queue is None or cursor >= len(queue):
                raise PlaybackMiss(
                    f"no scripted response for stage '{request.stage_tag}' "
                    f"(request {digest[:12]}, ordinal {cursor})"
                )
            self._cursors[request.stage_tag] = cursor + 1
            text = queue[cursor]
            return text, len(text.split())


# --- the gateway ---------------------------------------------------------------


_FENCE = re.compile(r"^\s*```")


def _clean_lines(text: str) -> list[str]:
    lines = [line.rstrip() for line in text.splitlines() if not _FENCE.match(line)]
    while lines and not lines[0]:
        lines.pop(0)
    while lines and not lines[-1]:
        lines.pop()
    return lines


def _line_conforms(line: str, constraint: ConstraintSpec, pattern: re.Pattern) -> bool:
    if not line.strip():
        return True
    if constraint.allowed_lead_tokens:
        lead = line.strip().split()[0]
        lead = re.split(r"[^\w]", lead, maxsplit=1)[0] or lead
        if lead not in constraint.allowed_lead_tokens and not line.startswith(" "):
            return False
    return pattern.fullmatch(line) is not None


class Gateway:
    """Backend access with content-addressed caching and an event log.

    Events record every cache/backend interaction in order; pipeline
    stages drain them into their traces.
    """

    def __init__(
        self,
        backend,
        cache=None,
        cache_dir=None,
        max_concurrent: int = DEFAULT_MAX_CONCURRENT,
        regeneration_budget: int = DEFAULT_REGENERATION_BUDGET,
    ):
        self.backend = backend
        if cache is not None:
            self.cache = cache
        else:
            directory = cache_dir or os.environ.get(CACHE_DIR_ENV)
            self.cache = FileCache(directory) if directory else MemoryCache()
        self.regeneration_budget = max(1, regeneration_budget)
        self._semaphore = threading.BoundedSemaphore(max_concurrent)
        self._events_lock = threading.Lock()
        self.events: list[GatewayEvent] = []

    # -- plumbing ------------------------------------------------------

    def _record(self, event: GatewayEvent) -> None:
        with self._events_lock:
            self.events.append(event)

    def drain_events(self) -> list[GatewayEvent]:
        with self._events_lock:
            events, self.events = self.events, []
            return events

    def _execute(self, request: PromptRequest, key: str, constrained: bool) -> Completion:
        start = time.perf_counter()
        entry = self.cache.get(key)
        if entry is not None:
            latency = time.perf_counter() - start
            completion = Completion(entry.text, entry.token_count, latency, True)
        else:
            with self._semaphore:
                text, tokens = self.backend.invoke(request)
            latency = time.perf_counter() - start
            self.cache.put(key, text, tokens)
            completion = Completion(text, tokens, latency, False)
        self._record(
            GatewayEvent(
                stage_tag=request.stage_tag,
                digest=cache_key(request),
                text=completion.text,
                latency_seconds=completion.latency_seconds,
                from_cache=completion.from_cache,
                constrained=constrained,
            )
        )
        return completion

    # -- public operations ------------------------------------------------

    def complete(self, request: PromptRequest) -> Completion:
        """Cache-first completion; one backend call per novel request."""
        return self._execute(request, cache_key(request), constrained=False)

    def complete_constrained(
        self, request: PromptRequest, constraint: ConstraintSpec
    ) -> Completion:
        """Completion whose every line matches the section pattern.

        Up to the regeneration budget attempts; the final attempt drops
        nonconforming lines instead of failing, and the conformance
        outcome lands on the event record.
        """
        pattern = re.compile(constraint.line_pattern)
        budget = self.regeneration_budget
        current = request
        for attempt in range(1, budget + 1):
            completion = self._execute(
                current, cache_key(current, constraint), constrained=True
            )
            lines = _clean_lines(completion.text)
            bad = [
                line for line in lines if not _line_conforms(line, constraint, pattern)
            ]
            nonempty = [line for line in lines if line.strip()]
            if not bad and len(nonempty) <= constraint.max_lines:
                self._set_conformance(CONFORMED)
                return Completion(
                    "\n".join(lines),
                    completion.token_count,
                    completion.latency_seconds,
                    completion.from_cache,
                )
            if attempt < budget:
                current = current.followup(
                    completion.text,
                    self._corrective_text(constraint, bad, attempt),
                )
                continue
            kept = [
                line for line in lines if line.strip() and line not in bad
            ][: constraint.max_lines]
            if kept:
                self._set_conformance(FILTERED)
                return Completion(
                    "\n".join(kept),
                    completion.token_count,
                    completion.latency_seconds,
                    completion.from_cache,
                )
        raise ConstraintUnsatisfiable(
            f"no line conformed to the {constraint.section_kind} pattern "
            f"after {budget} attempt(s)"
        )

    def _set_conformance(self, outcome: str) -> None:
        with self._events_lock:
            if self.events:
                self.events[-1].conformance = outcome

    @staticmethod
    def _corrective_text(constraint: ConstraintSpec, bad: list[str], attempt: int) -> str:
        offending = "\n".join(bad[:5])
        return (
            f"Attempt {attempt} contained lines that do not fit the "
            f"{constraint.section_kind} section format. Respond again with at "
            f"most {constraint.max_lines} lines, each matching the pattern "
            f"{constraint.line_pattern!r}, and nothing else.\n"
            f"Offending lines were:\n{offending}"
        )
