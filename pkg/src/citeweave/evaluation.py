"""Run-level evaluation metrics and dataset generation.

Implements the judge-based metric suite: faithfulness (supported statements
over total statements), answer relevancy (mean question/pseudo-question
cosine), context precision (mean average precision of judged ranks), context
recall (attributable ground-truth sentences), context relevancy (relevant
context sentences), answer similarity, answer correctness, and the composite
score as the harmonic mean of four components. Undefined per-item scores are
reported as null and excluded from aggregates, never silently zeroed.
"""

from __future__ import annotations

import ast
import json
import logging
import re
from dataclasses import dataclass, field
from typing import Sequence

from . import prompts
from .corpus import Corpus
from .errors import (
    DatasetGenerationError,
    EmptyCorpusError,
    EmptyReportError,
    MetricDomainError,
)
from .gateway import Gateway, GenerationParams, cosine, cost_report, PriceSheet
from .textutils import normalized_key, split_sentences

log = logging.getLogger(__name__)


@dataclass
class EvalItem:
    question: str
    ground_truth: str
    gt_contexts: list[str] = field(default_factory=list)
    retrieved_contexts: list[str] = field(default_factory=list)
    answer: str = ""


@dataclass
class FaithfulnessBreakdown:
    statements: list[str]
    supported: list[bool]
    score: float | None  # None when no statements could be extracted

    @property
    def total_statements(self) -> int:
        return len(self.statements)

    @property
    def supported_count(self) -> int:
        return sum(self.supported)


@dataclass
class MetricBundle:
    faithfulness: float | None = None
    answer_relevancy: float | None = None
    answer_similarity: float | None = None
    answer_correctness: float | None = None
    context_relevancy: float | None = None
    context_precision: float | None = None
    context_recall: float | None = None
    ragas_score: float | None = None
    supported_statements: int = 0
    total_statements: int = 0
    cosine_similarities: list[float] = field(default_factory=list)
    pseudo_question_count: int = 0
    attributable_gt_sentences: int = 0
    total_gt_sentences: int = 0


def _parse_listed_lines(reply: str) -> list[str]:
    items: list[str] = []
    for line in reply.splitlines():
        line = re.sub(r"^\s*(?:\d+[.)]\s*|[-*]\s*)", "", line).strip()
        if line:
            items.append(line)
    return items


def extract_statements(answer: str, gateway: Gateway, params: GenerationParams) -> list[str]:
    prompt = prompts.STATEMENT_EXTRACTION.format(answer=answer)
    reply, _ = gateway.complete(prompt, params, stage="judge")
    return _parse_listed_lines(reply)


def faithfulness(
    answer: str, contexts: Sequence[str], gateway: Gateway, params: GenerationParams
) -> FaithfulnessBreakdown:
    if not answer.strip():
        raise ValueError("faithfulness requires a non-empty answer")
    statements = extract_statements(answer, gateway, params)
    if not statements:
        return FaithfulnessBreakdown(statements=[], supported=[], score=None)
    context_blob = "\n".join(contexts)
    supported = [
        gateway.judge_boolean(
            prompts.STATEMENT_SUPPORT_JUDGE.format(context=context_blob, statement=s),
            params,
            stage="judge",
        )
        for s in statements
    ]
    return FaithfulnessBreakdown(
        statements=statements, supported=supported, score=sum(supported) / len(statements)
    )


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def answer_relevancy(
    question: str,
    answer: str,
    gateway: Gateway,
    params: GenerationParams,
    pseudo_question_count: int = 3,
) -> tuple[float | None, list[float]]:
    if not answer.strip():
        raise ValueError("answer_relevancy requires a non-empty answer")
    prompt = prompts.PSEUDO_QUESTIONS.format(count=pseudo_question_count, answer=answer)
    reply, _ = gateway.complete(prompt, params, stage="judge")
    pseudo = _parse_listed_lines(reply)[:pseudo_question_count]
    if not pseudo:
        return None, []
    question_vec = gateway.embed(question)
    sims = [_clamp01(cosine(question_vec, gateway.embed(p))) for p in pseudo]
    return sum(sims) / len(sims), sims


def average_precision(verdicts: Sequence[bool]) -> float:
    relevant = sum(verdicts)
    if relevant == 0:
        return 0.0
    hits = 0
    total = 0.0
    for k, verdict in enumerate(verdicts, start=1):
        if verdict:
            hits += 1
            total += hits / k
    return total / relevant


def context_precision(
    question: str, retrieved_contexts: Sequence[str], gateway: Gateway, params: GenerationParams
) -> float:
    if not retrieved_contexts:
        raise ValueError("context_precision requires at least one retrieved context")
    verdicts = [
        gateway.judge_boolean(
            prompts.CONTEXT_RELEVANCE_JUDGE.format(question=question, context=c),
            params,
            stage="judge",
        )
        for c in retrieved_contexts
    ]
    return average_precision(verdicts)


def context_recall(
    ground_truth: str, retrieved_contexts: Sequence[str], gateway: Gateway, params: GenerationParams
) -> tuple[float | None, int, int]:
    if not ground_truth.strip():
        raise ValueError("context_recall requires a non-empty ground truth")
    sentences = split_sentences(ground_truth)
    if not sentences:
        return None, 0, 0
    context_blob = "\n".join(retrieved_contexts)
    attributable = sum(
        gateway.judge_boolean(
            prompts.CONTEXT_ATTRIBUTION_JUDGE.format(context=context_blob, sentence=s),
            params,
            stage="judge",
        )
        for s in sentences
    )
    return attributable / len(sentences), attributable, len(sentences)


def context_relevancy(
    question: str, retrieved_contexts: Sequence[str], gateway: Gateway, params: GenerationParams
) -> float | None:
    if not retrieved_contexts:
        raise ValueError("context_relevancy requires at least one retrieved context")
    sentences = [s for c in retrieved_contexts for s in split_sentences(c)]
    if not sentences:
        return None
    relevant = sum(
        gateway.judge_boolean(
            prompts.SENTENCE_RELEVANCE_JUDGE.format(question=question, sentence=s),
            params,
            stage="judge",
        )
        for s in sentences
    )
    return relevant / len(sentences)


def answer_similarity(answer: str, ground_truth: str, gateway: Gateway) -> float:
    if not answer.strip() or not ground_truth.strip():
        raise ValueError("answer_similarity requires non-empty texts")
    return _clamp01(cosine(gateway.embed(answer), gateway.embed(ground_truth)))


def answer_correctness(
    answer: str,
    ground_truth: str,
    gateway: Gateway,
    params: GenerationParams,
    f1_weight: float = 0.75,
    similarity_weight: float = 0.25,
) -> float | None:
    """Weighted blend of a factual statement-overlap F1 and embedding
    similarity. None when either side yields no statements."""
    if not answer.strip() or not ground_truth.strip():
        raise ValueError("answer_correctness requires non-empty texts")
    answer_statements = extract_statements(answer, gateway, params)
    truth_statements = extract_statements(ground_truth, gateway, params)
    if not answer_statements or not truth_statements:
        return None

    def supported_fraction(statements: list[str], context: str) -> float:
        hits = sum(
            gateway.judge_boolean(
                prompts.STATEMENT_SUPPORT_JUDGE.format(context=context, statement=s),
                params,
                stage="judge",
            )
            for s in statements
        )
        return hits / len(statements)

    precision = supported_fraction(answer_statements, ground_truth)
    recall = supported_fraction(truth_statements, answer)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    similarity = answer_similarity(answer, ground_truth, gateway)
    return f1_weight * f1 + similarity_weight * similarity


def ragas_score(ff: float, ar: float, cxr: float, cr: float) -> float:
    """Harmonic mean of the four components; continuous extension to 0."""
    values = (ff, ar, cxr, cr)
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise MetricDomainError(f"component {v} outside [0, 1]")
    if any(v == 0.0 for v in values):
        return 0.0
    return 4.0 / sum(1.0 / v for v in values)


# --- run-level evaluation ----------------------------------------------------

TABLE_COLUMNS = (
    ("Answer Relevancy", "answer_relevancy"),
    ("Answer Correctness", "answer_correctness"),
    ("Answer Similarity", "answer_similarity"),
    ("Context Relevancy", "context_relevancy"),
    ("Context Precision", "context_precision"),
    ("Context Recall", "context_recall"),
    ("Faithfulness", "faithfulness"),
    ("Ragas Score", "ragas_score"),
)


@dataclass
class RunReport:
    config: dict
    per_item: list[MetricBundle]
    means: dict[str, float | None]
    exclusions: dict[str, int]
    ragas: float | None
    ledger_summary: dict

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "per_item": [vars(b) for b in self.per_item],
            "means": self.means,
            "exclusions": self.exclusions,
            "ragas_score": self.ragas,
            "ledger_summary": self.ledger_summary,
        }

    def to_text_table(self, name: str = "run") -> str:
        headers = [label for label, _ in TABLE_COLUMNS]
        values = []
        for label, key in TABLE_COLUMNS:
            v = self.ragas if key == "ragas_score" else self.means.get(key)
            values.append("n/a" if v is None else f"{v:.3f}")
        widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
        name_width = max(len("Name"), len(name))
        head = "  ".join(["Name".ljust(name_width)] + [h.ljust(w) for h, w in zip(headers, widths)])
        row = "  ".join([name.ljust(name_width)] + [v.ljust(w) for v, w in zip(values, widths)])
        rule = "-" * len(head)
        return "\n".join([head, rule, row])


def evaluate_item(
    item: EvalItem,
    gateway: Gateway,
    params: GenerationParams,
    pseudo_question_count: int = 3,
    f1_weight: float = 0.75,
    similarity_weight: float = 0.25,
    components: str = "context_relevancy",
) -> MetricBundle:
    if not item.question.strip() or not item.ground_truth.strip():
        raise ValueError("item must carry a question and a ground truth")
    if not item.answer.strip() or not item.retrieved_contexts:
        raise ValueError("item must carry an answer and retrieved contexts")
    bundle = MetricBundle()
    ff = faithfulness(item.answer, item.retrieved_contexts, gateway, params)
    bundle.faithfulness = ff.score
    bundle.supported_statements = ff.supported_count
    bundle.total_statements = ff.total_statements

    ar, sims = answer_relevancy(item.question, item.answer, gateway, params, pseudo_question_count)
    bundle.answer_relevancy = ar
    bundle.cosine_similarities = sims
    bundle.pseudo_question_count = len(sims)

    bundle.answer_similarity = answer_similarity(item.answer, item.ground_truth, gateway)
    bundle.answer_correctness = answer_correctness(
        item.answer, item.ground_truth, gateway, params, f1_weight, similarity_weight
    )
    bundle.context_precision = context_precision(
        item.question, item.retrieved_contexts, gateway, params
    )
    cr, ngts, tgs = context_recall(item.ground_truth, item.retrieved_contexts, gateway, params)
    bundle.context_recall = cr
    bundle.attributable_gt_sentences = ngts
    bundle.total_gt_sentences = tgs
    bundle.context_relevancy = context_relevancy(
        item.question, item.retrieved_contexts, gateway, params
    )

    third = bundle.context_relevancy if components == "context_relevancy" else bundle.context_precision
    parts = (bundle.faithfulness, bundle.answer_relevancy, third, bundle.context_recall)
    if all(p is not None for p in parts):
        bundle.ragas_score = ragas_score(*parts)  # type: ignore[arg-type]
    return bundle


def evaluate_run(
    items: Sequence[EvalItem],
    gateway: Gateway,
    params: GenerationParams,
    pseudo_question_count: int = 3,
    f1_weight: float = 0.75,
    similarity_weight: float = 0.25,
    components: str = "context_relevancy",
    prices: PriceSheet | None = None,
) -> RunReport:
    """Score every item, average per metric, and compute the composite score
    from the dataset-level means (one score per system, table-style)."""
    if not items:
        raise EmptyReportError("no items to evaluate")
    per_item = [
        evaluate_item(
            item, gateway, params, pseudo_question_count, f1_weight, similarity_weight, components
        )
        for item in items
    ]

    means: dict[str, float | None] = {}
    exclusions: dict[str, int] = {}
    for _, key in TABLE_COLUMNS:
        if key == "ragas_score":
            continue
        values = [getattr(b, key) for b in per_item]
        defined = [v for v in values if v is not None]
        exclusions[key] = len(values) - len(defined)
        means[key] = sum(defined) / len(defined) if defined else None

    third_key = "context_relevancy" if components == "context_relevancy" else "context_precision"
    component_means = (
        means["faithfulness"],
        means["answer_relevancy"],
        means[third_key],
        means["context_recall"],
    )
    ragas = (
        ragas_score(*component_means)  # type: ignore[arg-type]
        if all(m is not None for m in component_means)
        else None
    )
    totals_in, totals_out = gateway.ledger.totals()
    ledger_summary = {
        "calls": len(gateway.ledger.records),
        "input_tokens": totals_in,
        "output_tokens": totals_out,
    }
    if prices is not None:
        ledger_summary["cost"] = cost_report(gateway.ledger, prices).cost
    return RunReport(
        config={
            "pseudo_question_count": pseudo_question_count,
            "correctness_f1_weight": f1_weight,
            "correctness_similarity_weight": similarity_weight,
            "ragas_components": components,
        },
        per_item=per_item,
        means=means,
        exclusions=exclusions,
        ragas=ragas,
        ledger_summary=ledger_summary,
    )


# --- dataset generation -------------------------------------------------------

def generate_dataset(
    corpus: Corpus,
    gateway: Gateway,
    params: GenerationParams,
    target_count: int,
    batch_size: int = 5,
) -> list[EvalItem]:
    """Generate question/context/answer items from the corpus documents.

    Batches are requested until the target is reached, three consecutive
    batches bring nothing new, or three consecutive replies fail to parse.
    Items deduplicate on normalized question text.
    """
    if not corpus.documents:
        raise EmptyCorpusError("cannot generate a dataset from an empty corpus")
    material = _corpus_material(corpus, params, gateway)
    prompt = prompts.DATASET_GENERATION + "\n\nDocuments:\n" + material

    items: list[EvalItem] = []
    seen_questions: set[str] = set()
    consecutive_parse_failures = 0
    consecutive_duplicate_batches = 0
    max_batches = max(4, (target_count // max(1, batch_size)) * 4 + 8)
    failures: list[str] = []

    for _ in range(max_batches):
        if len(items) >= target_count:
            break
        reply, _ = gateway.complete(prompt, params, stage="dataset_gen")
        batch, skipped = _parse_dataset_reply(reply)
        if batch is None:
            consecutive_parse_failures += 1
            failures.append(reply[:200])
            log.warning("dataset batch reply unparseable (%d consecutive)", consecutive_parse_failures)
            if consecutive_parse_failures >= 3:
                raise DatasetGenerationError(
                    "three consecutive unparseable dataset batches; "
                    f"last replies: {failures[-3:]}"
                )
            continue
        consecutive_parse_failures = 0
        if skipped:
            log.warning("skipped %d malformed dataset blocks", skipped)
        new_count = 0
        for item in batch:
            key = normalized_key(item.question)
            if key in seen_questions:
                continue
            seen_questions.add(key)
            items.append(item)
            new_count += 1
        if new_count == 0:
            consecutive_duplicate_batches += 1
            if consecutive_duplicate_batches >= 3:
                break
        else:
            consecutive_duplicate_batches = 0
    return items[:target_count]


def _corpus_material(corpus: Corpus, params: GenerationParams, gateway: Gateway) -> str:
    parts = []
    for doc in corpus.documents.values():
        parts.append(f"# {doc.title}")
        parts.extend(p.text for p in doc.iter_paragraphs())
    material = "\n".join(parts)
    budget_chars = max(400, (params.context_window_tokens // 2) * 4)
    return material[:budget_chars]


def _parse_dataset_reply(reply: str) -> tuple[list[EvalItem] | None, int]:
    start = reply.find("[")
    end = reply.rfind("]")
    if start < 0 or end <= start:
        return None, 0
    try:
        data = ast.literal_eval(reply[start : end + 1])
    except (ValueError, SyntaxError):
        return None, 0
    if not isinstance(data, list):
        return None, 0
    items: list[EvalItem] = []
    skipped = 0
    for block in data:
        if (
            isinstance(block, dict)
            and isinstance(block.get("question"), str)
            and block["question"].strip()
            and isinstance(block.get("context"), list)
            and all(isinstance(c, str) for c in block["context"])
            and isinstance(block.get("ground_truth"), str)
            and block["ground_truth"].strip()
        ):
            items.append(
                EvalItem(
                    question=block["question"].strip(),
                    ground_truth=block["ground_truth"].strip(),
                    gt_contexts=[c for c in block["context"]],
                )
            )
        else:
            skipped += 1
    if not items and skipped:
        return None, 0
    return items, skipped


def load_dataset(path: str) -> list[EvalItem]:
    data = json.loads(open(path, encoding="utf-8").read())
    items = []
    for block in data:
        items.append(
            EvalItem(
                question=block["question"],
                ground_truth=block.get("ground_truth", ""),
                gt_contexts=list(block.get("context", block.get("gt_contexts", []))),
                retrieved_contexts=list(block.get("retrieved_contexts", [])),
                answer=block.get("answer", ""),
            )
        )
    return items


def dataset_to_json(items: Sequence[EvalItem]) -> list[dict]:
    return [
        {
            "question": item.question,
            "context": item.gt_contexts,
            "ground_truth": item.ground_truth,
            **({"retrieved_contexts": item.retrieved_contexts} if item.retrieved_contexts else {}),
            **({"answer": item.answer} if item.answer else {}),
        }
        for item in items
    ]
