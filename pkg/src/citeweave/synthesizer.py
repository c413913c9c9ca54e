"""Iterative answer synthesis under the model's context budget.

The first retrieved paragraph seeds the draft; every further paragraph is
folded in by a refine call. Before each call the window arithmetic is
checked explicitly: paragraphs that cannot fit are split at sentence
boundaries, and a draft that outgrows its budget share is condensed by one
extra call. Nothing is ever silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from . import prompts
from .config import BudgetShares
from .errors import BudgetExceededError
from .gateway import Gateway, GenerationParams
from .retriever import RetrievedContext
from .textutils import split_sentences


@dataclass
class SynthesisResult:
    answer_text: str
    contributing_para_ids: list[str] = field(default_factory=list)
    rounds: int = 0  # gateway synthesis calls made
    truncation_events: list[tuple[str, str]] = field(default_factory=list)


def _template_overhead(estimate: Callable[[str], int]) -> int:
    blank = prompts.SYNTHESIZE_REFINE.format(response="", paragraph="", query="")
    return estimate(blank)


def split_for_budget(text: str, budget_tokens: int, estimate: Callable[[str], int]) -> list[str]:
    """Sentence-boundary chunks, each within the budget.

    A single sentence larger than the whole budget falls back to a hard
    character split rather than overflowing the window.
    """
    if estimate(text) <= budget_tokens:
        return [text]
    chunks: list[str] = []
    current = ""
    for sentence in split_sentences(text):
        if estimate(sentence) > budget_tokens:
            if current:
                chunks.append(current)
                current = ""
            step = max(1, budget_tokens * 4 - 4)
            chunks.extend(sentence[i : i + step] for i in range(0, len(sentence), step))
            continue
        candidate = f"{current} {sentence}".strip()
        if current and estimate(candidate) > budget_tokens:
            chunks.append(current)
            current = sentence
        else:
            current = candidate
    if current:
        chunks.append(current)
    return chunks


def synthesize_initial(query: str, paragraph: str, gateway: Gateway, params: GenerationParams) -> str:
    prompt = prompts.SYNTHESIZE_INITIAL.format(paragraph=paragraph, query=query)
    reply, _ = gateway.complete(prompt, params, stage="synthesize")
    return reply


def synthesize_refine(
    draft: str, paragraph: str, query: str, gateway: Gateway, params: GenerationParams
) -> str:
    prompt = prompts.SYNTHESIZE_REFINE.format(response=draft, paragraph=paragraph, query=query)
    reply, _ = gateway.complete(prompt, params, stage="synthesize")
    return reply


def synthesize(
    query: str,
    contexts: Sequence[RetrievedContext],
    gateway: Gateway,
    params: GenerationParams,
    shares: BudgetShares | None = None,
    on_progress: Callable[[int, int], None] | None = None,
) -> SynthesisResult:
    shares = shares or BudgetShares()
    if not contexts:
        return SynthesisResult(answer_text="", rounds=0)

    estimate = gateway.estimate_tokens
    window = params.context_window_tokens
    paragraph_budget = int(window * shares.paragraph)
    draft_budget = int(window * shares.draft)
    max_output = min(params.max_output_tokens, int(window * shares.output))
    call_params = replace(params, max_output_tokens=max_output)
    overhead = _template_overhead(estimate)

    result = SynthesisResult(answer_text="")
    plan: list[tuple[str, str]] = []
    for context in contexts:
        chunks = split_for_budget(context.paragraph.text, paragraph_budget, estimate)
        if len(chunks) > 1:
            result.truncation_events.append((context.para_id, f"split:{len(chunks)}"))
        plan.extend((context.para_id, chunk) for chunk in chunks)
    total_steps = len(plan)

    draft = ""
    done = 0
    for para_id, chunk in plan:
        if draft and estimate(draft) > draft_budget:
            draft = _condense(draft, query, gateway, call_params, estimate, window, overhead, max_output)
            result.rounds += 1
            result.truncation_events.append((para_id, "draft_condensed"))
        needed = estimate(query) + estimate(chunk) + estimate(draft) + overhead + max_output
        if needed > window:
            raise BudgetExceededError(
                f"integration step for {para_id} needs ~{needed} tokens in a {window}-token window"
            )
        if not draft:
            draft = synthesize_initial(query, chunk, gateway, call_params)
        else:
            draft = synthesize_refine(draft, chunk, query, gateway, call_params)
        result.rounds += 1
        done += 1
        if on_progress is not None:
            on_progress(done, total_steps)
    result.answer_text = draft
    result.contributing_para_ids = [c.para_id for c in contexts]
    return result


def _condense(
    draft: str,
    query: str,
    gateway: Gateway,
    params: GenerationParams,
    estimate: Callable[[str], int],
    window: int,
    overhead: int,
    max_output: int,
) -> str:
    if estimate(query) + estimate(draft) + overhead + max_output > window:
        raise BudgetExceededError("draft too large to condense within the window")
    prompt = prompts.SYNTHESIZE_CONDENSE.format(response=draft, query=query)
    reply, _ = gateway.complete(prompt, params, stage="synthesize")
    return reply
