"""Provider-agnostic chat-completion and embedding gateway.

Every pipeline stage calls the model through this module, which enforces the
context-window precondition, retries transient failures, and appends one
UsageRecord per call to a shared ledger. The ledger feeds the cost report.
"""

from __future__ import annotations

import logging
import math
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .errors import (
    AuthMissingError,
    BackendUnavailableError,
    BudgetExceededError,
    TransientBackendError,
)

log = logging.getLogger(__name__)

# Pipeline stages, in the order they occur per query.
STAGES = ("summarize", "retrieve", "synthesize", "align", "judge", "embed", "dataset_gen")


def estimate_tokens(text: str) -> int:
    """Cheap token estimate: ceil(chars / 4). Monotone in length; 0 for ""."""
    return math.ceil(len(text) / 4)


@dataclass
class GenerationParams:
    model_id: str = "mock"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    context_window_tokens: int = 16000

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.context_window_tokens <= 0:
            raise ValueError("context_window_tokens must be positive")


@dataclass
class UsageRecord:
    stage: str
    input_tokens: int
    output_tokens: int
    call_index: int
    timestamp: float


@dataclass
class UsageLedger:
    records: list[UsageRecord] = field(default_factory=list)

    def stage_count(self, stage: str) -> int:
        return sum(1 for r in self.records if r.stage == stage)

    def stage_tokens(self, stage: str) -> tuple[int, int]:
        ins = sum(r.input_tokens for r in self.records if r.stage == stage)
        outs = sum(r.output_tokens for r in self.records if r.stage == stage)
        return ins, outs

    @property
    def summarize_calls(self) -> int:
        return self.stage_count("summarize")

    @property
    def retrieval_calls(self) -> int:
        return self.stage_count("retrieve")

    @property
    def synthesis_calls(self) -> int:
        return self.stage_count("synthesize")

    @property
    def alignment_calls(self) -> int:
        return self.stage_count("align")

    def totals(self) -> tuple[int, int]:
        return (
            sum(r.input_tokens for r in self.records),
            sum(r.output_tokens for r in self.records),
        )

    def to_jsonl(self) -> str:
        import json

        return "\n".join(
            json.dumps(
                {
                    "stage": r.stage,
                    "input_tokens": r.input_tokens,
                    "output_tokens": r.output_tokens,
                    "call_index": r.call_index,
                    "timestamp": r.timestamp,
                },
                sort_keys=True,
            )
            for r in self.records
        )

    @classmethod
    def from_jsonl(cls, text: str) -> "UsageLedger":
        import json

        ledger = cls()
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            ledger.records.append(
                UsageRecord(
                    stage=d["stage"],
                    input_tokens=int(d["input_tokens"]),
                    output_tokens=int(d["output_tokens"]),
                    call_index=int(d["call_index"]),
                    timestamp=float(d["timestamp"]),
                )
            )
        return ledger


@dataclass
class PriceSheet:
    input_price_per_1m: float
    output_price_per_1m: float

    def __post_init__(self) -> None:
        if self.input_price_per_1m < 0 or self.output_price_per_1m < 0:
            raise ValueError("prices must be non-negative")


@dataclass
class CostReport:
    total_input_tokens: int
    total_output_tokens: int
    cost: float


def cost_report(ledger: UsageLedger, prices: PriceSheet) -> CostReport:
    total_in, total_out = ledger.totals()
    cost = (
        prices.input_price_per_1m * total_in / 1_000_000
        + prices.output_price_per_1m * total_out / 1_000_000
    )
    return CostReport(total_in, total_out, cost)


class Backend(Protocol):
    def complete_text(self, prompt: str, params: GenerationParams) -> str: ...

    def embed_text(self, text: str) -> list[float]: ...


class Gateway:
    """Shared entry point for all model calls.

    Thread-safe: ledger appends and call indices are lock-protected, so
    stages may fan out concurrently up to the configured parallelism.
    """

    def __init__(
        self,
        backend: Backend,
        token_estimator: Callable[[str], int] = estimate_tokens,
        max_retries: int = 2,
        backoff_seconds: float = 0.5,
    ):
        self.backend = backend
        self.estimate_tokens = token_estimator
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self.ledger = UsageLedger()
        self.deviant_verdicts: list[str] = []
        self._lock = threading.Lock()

    def complete(self, prompt: str, params: GenerationParams, stage: str) -> tuple[str, UsageRecord]:
        input_tokens = self.estimate_tokens(prompt)
        if input_tokens > params.context_window_tokens - params.max_output_tokens:
            raise BudgetExceededError(
                f"prompt of ~{input_tokens} tokens + {params.max_output_tokens} output "
                f"exceeds window of {params.context_window_tokens}"
            )
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                reply = self.backend.complete_text(prompt, params)
                break
            except TransientBackendError as exc:
                last_error = exc
                if attempt < self.max_retries:
                    time.sleep(self.backoff_seconds * (2**attempt))
        else:
            raise BackendUnavailableError(f"backend failed after retries: {last_error}")
        with self._lock:
            record = UsageRecord(
                stage=stage,
                input_tokens=input_tokens,
                output_tokens=self.estimate_tokens(reply),
                call_index=len(self.ledger.records),
                timestamp=time.time(),
            )
            self.ledger.records.append(record)
        return reply, record

    def judge_boolean(self, prompt: str, params: GenerationParams, stage: str) -> bool:
        """Boolean verdict from the model.

        The first alphabetic token of the reply decides, case-insensitively.
        Anything else earns one retry; a persistent deviant reply degrades to
        False and is logged, never raised.
        """
        for attempt in range(2):
            reply, _ = self.complete(prompt, params, stage)
            verdict = _parse_boolean(reply)
            if verdict is not None:
                return verdict
        with self._lock:
            self.deviant_verdicts.append(reply)
        log.warning("deviant judge verdict treated as False: %.80r", reply)
        return False

    def embed(self, text: str) -> list[float]:
        if not text:
            raise ValueError("cannot embed empty text")
        vector = self.backend.embed_text(text)
        with self._lock:
            record = UsageRecord(
                stage="embed",
                input_tokens=self.estimate_tokens(text),
                output_tokens=0,
                call_index=len(self.ledger.records),
                timestamp=time.time(),
            )
            self.ledger.records.append(record)
        return vector


def _parse_boolean(reply: str) -> bool | None:
    for token in reply.replace("'", " ").replace('"', " ").split():
        word = token.strip(".,:;!()[]*").lower()
        if not word or not word[0].isalpha():
            continue
        if word == "true":
            return True
        if word == "false":
            return False
        return None
    return None


def cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


class OpenAICompatBackend:
    """Chat-completions backend for any OpenAI-compatible HTTP endpoint.

    Credentials come from the environment; the variable name is configurable.
    Network failures surface as TransientBackendError so the gateway's retry
    policy applies.
    """

    def __init__(
        self,
        api_base: str = "https://api.openai.com/v1",
        api_key_env: str = "OPENAI_API_KEY",
        embedding_model: str = "text-embedding-3-small",
        timeout: float = 60.0,
    ):
        self.api_base = api_base.rstrip("/")
        self.api_key_env = api_key_env
        self.embedding_model = embedding_model
        self.timeout = timeout

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise AuthMissingError(f"environment variable {self.api_key_env} is not set")
        return {"Authorization": f"Bearer {key}"}

    def complete_text(self, prompt: str, params: GenerationParams) -> str:
        import httpx

        payload = {
            "model": params.model_id,
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            response = httpx.post(
                f"{self.api_base}/chat/completions",
                json=payload,
                headers=self._headers(),
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise TransientBackendError(str(exc)) from exc
        if response.status_code in (429, 500, 502, 503, 504):
            raise TransientBackendError(f"HTTP {response.status_code}")
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]

    def embed_text(self, text: str) -> list[float]:
        import httpx

        try:
            response = httpx.post(
                f"{self.api_base}/embeddings",
                json={"model": self.embedding_model, "input": text},
                headers=self._headers(),
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise TransientBackendError(str(exc)) from exc
        if response.status_code in (429, 500, 502, 503, 504):
            raise TransientBackendError(f"HTTP {response.status_code}")
        response.raise_for_status()
        return response.json()["data"][0]["embedding"]
