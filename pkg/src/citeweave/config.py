"""Runtime configuration.

One flat dataclass loaded from a JSON file. Every tunable the pipeline uses
lives here so that CLI, service, and tests share a single source of defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class ExtractionThresholds:
    # Paragraph break when the baseline gap exceeds this multiple of the
    # median line gap.
    gap_break_factor: float = 1.6
    # First-line indent counts as a paragraph start at this fraction of the
    # median indent.
    indent_break_factor: float = 0.8
    # Fraction of bibliography entries that must match one notation style.
    style_vote_fraction: float = 0.8
    # Fraction of body spans each x-start cluster must hold to count as a
    # column.
    column_mass_fraction: float = 0.3
    # Paragraphs at or under this many tokens are their own summary.
    verbatim_summary_max_tokens: int = 40


@dataclass
class BudgetShares:
    """How the context window is partitioned during synthesis."""

    paragraph: float = 0.50
    draft: float = 0.25
    output: float = 0.15
    template: float = 0.10


@dataclass
class Config:
    model_id: str = "gpt-3.5-turbo-16k"
    temperature: float = 0.0
    context_window_tokens: int = 16000
    max_output_tokens: int = 1024
    backend: str = "mock"  # "mock" or "openai"
    api_key_env: str = "OPENAI_API_KEY"
    api_base: str = "https://api.openai.com/v1"
    input_price_per_1m: float = 0.150
    output_price_per_1m: float = 0.600
    parallelism: int = 1
    thresholds: ExtractionThresholds = field(default_factory=ExtractionThresholds)
    budget: BudgetShares = field(default_factory=BudgetShares)
    # "context_relevancy" (reproduces the published score tables) or
    # "context_precision".
    ragas_components: str = "context_relevancy"
    pseudo_question_count: int = 3
    correctness_f1_weight: float = 0.75
    correctness_similarity_weight: float = 0.25
    # Alignment accounting: one call over the whole answer, or one boolean
    # judgment per (answer line, context line) pair.
    alignment_mode: str = "single_call"  # or "per_pair"
    # Queries running longer than this return a polled job id instead.
    job_threshold_seconds: float = 10.0
    ledger_path: str | None = None

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        raw = json.loads(Path(path).read_text())
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "Config":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        if "thresholds" in kwargs:
            kwargs["thresholds"] = ExtractionThresholds(**kwargs["thresholds"])
        if "budget" in kwargs:
            kwargs["budget"] = BudgetShares(**kwargs["budget"])
        return cls(**kwargs)
