"""Uniform access to chat-completion models.

Two transports share one interface: a remote HTTP provider (with retries,
rate limiting and env-overridable credentials) and a deterministic scripted
mock for offline tests. Every exchange is appended to a transcript; with the
mock, transcripts are byte-identical across replays because the timestamp
comes from a logical clock instead of wall time.
"""
from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

import httpx

from .errors import BudgetExceeded, MockMiss, ProviderUnavailable
from .textproc import estimate_tokens


@dataclass(frozen=True)
class TokenCounts:
    input: int
    output: int

    @property
    def total(self) -> int:
        return self.input + self.output


@dataclass(frozen=True)
class CompletionRequest:
    """One chat-completion call: a system text, a user text and decode knobs."""

    system_text: str
    user_text: str
    max_output_tokens: int = 1024
    temperature: float = 0.0
    model_id: str = "default"
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")

    @property
    def prompt_text(self) -> str:
        return self.system_text + "\n" + self.user_text if self.system_text else self.user_text


@dataclass(frozen=True)
class CompletionResult:
    text: str
    token_counts: TokenCounts
    latency_ms: int
    attempt: int


Matcher = Union[int, str]


@dataclass(frozen=True)
class MockEntry:
    matcher: Matcher  # int = 1-based request ordinal, str = prompt substring
    response: str

    def matches(self, prompt: str, ordinal: int) -> bool:
        if isinstance(self.matcher, int):
            return self.matcher == ordinal
        return self.matcher in prompt


@dataclass
class MockScript:
    """Ordered response script for offline runs.

    In strict mode every request must match exactly one entry; otherwise the
    first matching entry wins and ``default`` (when set) answers unmatched
    requests.
    """

    entries: list[MockEntry] = field(default_factory=list)
    strict: bool = False
    default: Optional[str] = None

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Matcher, str]], *, strict: bool = False,
                   default: Optional[str] = None) -> "MockScript":
        return cls([MockEntry(m, r) for m, r in pairs], strict=strict, default=default)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "MockScript":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = [MockEntry(e.get("ordinal", e.get("match")), e["response"]) for e in raw["entries"]]
        return cls(entries, strict=raw.get("strict", False), default=raw.get("default"))

    def lookup(self, prompt: str, ordinal: int) -> str:
        hits = [e for e in self.entries if e.matches(prompt, ordinal)]
        if self.strict:
            if len(hits) != 1:
                raise MockMiss(
                    f"strict mock: request #{ordinal} matched {len(hits)} entries"
                )
            return hits[0].response
        if hits:
            return hits[0].response
        if self.default is not None:
            return self.default
        raise MockMiss(f"mock: request #{ordinal} matched no entry and no default is set")


@dataclass(frozen=True)
class ProviderConfig:
    """Remote chat-completion endpoint. Credential is read from an env var."""

    endpoint: str
    model_id: str = "default"
    credential_env: str = "LITREVIEW_API_KEY"
    timeout_s: float = 60.0

    @classmethod
    def from_dict(cls, raw: dict) -> "ProviderConfig":
        cfg = cls(
            endpoint=raw["endpoint"],
            model_id=raw.get("model_id", "default"),
            credential_env=raw.get("credential_env", "LITREVIEW_API_KEY"),
            timeout_s=raw.get("timeout_s", 60.0),
        )
        return cfg.with_env_overrides()

    def with_env_overrides(self) -> "ProviderConfig":
        endpoint = os.environ.get("LITREVIEW_PROVIDER_URL", self.endpoint)
        model_id = os.environ.get("LITREVIEW_MODEL", self.model_id)
        if endpoint == self.endpoint and model_id == self.model_id:
            return self
        return ProviderConfig(endpoint, model_id, self.credential_env, self.timeout_s)


_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


def _parse_provider_payload(payload: dict) -> tuple[str, Optional[int], Optional[int]]:
    """Accept the native {text, input_tokens, output_tokens} shape or an
    OpenAI-style chat completion payload."""
    if "text" in payload:
        return payload["text"], payload.get("input_tokens"), payload.get("output_tokens")
    choices = payload.get("choices")
    if choices:
        text = choices[0].get("message", {}).get("content", "")
        usage = payload.get("usage", {})
        return text, usage.get("prompt_tokens"), usage.get("completion_tokens")
    raise ProviderUnavailable(f"unrecognized provider payload keys: {sorted(payload)}")


class LlmGateway:
    """Shared handle for completion calls with transcript, budget and retries.

    Thread-safe: dispatch and transcript appends are serialized, which also
    makes mock ordinal matching well-defined under concurrency.
    """

    def __init__(
        self,
        *,
        provider: Optional[ProviderConfig] = None,
        script: Optional[MockScript] = None,
        transcript_path: Optional[Union[str, Path]] = None,
        max_retries: int = 4,
        requests_per_second: Optional[float] = None,
        backoff_base_s: float = 1.0,
        transport: Optional[httpx.BaseTransport] = None,
        sleeper: Callable[[float], None] = time.sleep,
        clock: Optional[Callable[[], float]] = None,
    ) -> None:
        if (provider is None) == (script is None):
            raise ValueError("configure exactly one of provider or script")
        self._provider = provider
        self._script = script
        self._transcript_path = Path(transcript_path) if transcript_path else None
        self._max_retries = max_retries
        self._min_interval = 1.0 / requests_per_second if requests_per_second else 0.0
        self._backoff_base = backoff_base_s
        self._sleeper = sleeper
        # Mock runs default to a logical clock so replayed transcripts are
        # byte-identical; HTTP runs default to wall time.
        self._clock = clock if clock is not None else (self._logical_clock() if script else time.time)
        self._lock = threading.Lock()
        self._client = httpx.Client(transport=transport, timeout=provider.timeout_s) if provider else None
        self._transcript: list[dict] = []
        self._request_count = 0
        self._tokens_used = 0
        self._budget: Optional[int] = None
        self._last_dispatch = 0.0

    @staticmethod
    def _logical_clock() -> Callable[[], float]:
        counter = iter(range(10**12))
        return lambda: float(next(counter))

    @property
    def default_model(self) -> str:
        return self._provider.model_id if self._provider else "mock"

    @property
    def max_retries(self) -> int:
        return self._max_retries

    @property
    def transcript(self) -> list[dict]:
        return list(self._transcript)

    @property
    def total_tokens(self) -> int:
        return self._tokens_used

    @property
    def request_count(self) -> int:
        return self._request_count

    def with_budget(self, limit_tokens: int) -> "LlmGateway":
        if limit_tokens <= 0:
            raise ValueError("limit_tokens must be positive")
        self._budget = limit_tokens
        return self

    def transcript_bytes(self) -> bytes:
        lines = [json.dumps(entry, sort_keys=True, ensure_ascii=False) for entry in self._transcript]
        return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")

    def complete(self, req: CompletionRequest) -> CompletionResult:
        with self._lock:
            self._throttle()
            self._request_count += 1
            ordinal = self._request_count
        started = time.monotonic()
        if self._script is not None:
            text, usage, attempt = self._script.lookup(req.prompt_text, ordinal), None, 1
            latency_ms = 0
        else:
            text, usage, attempt = self._complete_http(req)
            latency_ms = int((time.monotonic() - started) * 1000)
        tokens = self._count_tokens(req, text, usage)
        result = CompletionResult(text=text, token_counts=tokens, latency_ms=latency_ms, attempt=attempt)
        with self._lock:
            self._record(req, result)
            self._tokens_used += tokens.total
            if self._budget is not None and self._tokens_used > self._budget:
                raise BudgetExceeded(self._tokens_used, self._budget)
        return result

    def _throttle(self) -> None:
        if not self._min_interval:
            return
        now = time.monotonic()
        wait = self._last_dispatch + self._min_interval - now
        if wait > 0:
            self._sleeper(wait)
        self._last_dispatch = max(now, self._last_dispatch + self._min_interval)

    def _complete_http(self, req: CompletionRequest) -> tuple[str, Optional[tuple[int, int]], int]:
        assert self._provider is not None and self._client is not None
        headers = {}
        credential = os.environ.get(self._provider.credential_env)
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        body = {
            "model": req.model_id if req.model_id != "default" else self._provider.model_id,
            "system": req.system_text,
            "user": req.user_text,
            "max_tokens": req.max_output_tokens,
            "temperature": req.temperature,
        }
        if req.seed is not None:
            body["seed"] = req.seed
        last_error: Optional[str] = None
        for attempt in range(1, self._max_retries + 2):
            if attempt > 1:
                self._sleeper(self._backoff_base * 2 ** (attempt - 2))
            try:
                response = self._client.post(self._provider.endpoint, json=body, headers=headers)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                continue
            if response.status_code in _RETRYABLE_STATUS:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code != 200:
                raise ProviderUnavailable(f"HTTP {response.status_code}: {response.text[:200]}")
            text, tok_in, tok_out = _parse_provider_payload(response.json())
            usage = (tok_in, tok_out) if tok_in is not None and tok_out is not None else None
            return text, usage, attempt
        raise ProviderUnavailable(f"retries exhausted after {self._max_retries + 1} attempts ({last_error})")

    def _count_tokens(self, req: CompletionRequest, text: str,
                      usage: Optional[tuple[int, int]]) -> TokenCounts:
        if usage is not None:
            return TokenCounts(input=usage[0], output=usage[1])
        return TokenCounts(input=estimate_tokens(req.prompt_text), output=estimate_tokens(text))

    def _record(self, req: CompletionRequest, result: CompletionResult) -> None:
        entry = {
            "request": {
                "system": req.system_text,
                "user": req.user_text,
                "max_output_tokens": req.max_output_tokens,
                "temperature": req.temperature,
                "model": req.model_id,
                "seed": req.seed,
            },
            "response": {"text": result.text, "attempt": result.attempt, "latency_ms": result.latency_ms},
            "tokens": {"input": result.token_counts.input, "output": result.token_counts.output},
            "timestamp": self._clock(),
        }
        self._transcript.append(entry)
        if self._transcript_path:
            with self._transcript_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
