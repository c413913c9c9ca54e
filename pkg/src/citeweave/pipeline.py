"""Query pipeline shared by the CLI and the HTTP service.

One entry point runs retrieve -> synthesize -> reference attachment and
returns the wire payload, so both surfaces produce identical results for
identical inputs and backends.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable

from .config import Config
from .corpus import Corpus
from .gateway import Gateway, GenerationParams, OpenAICompatBackend, PriceSheet, cost_report
from .mock import DemoBackend
from .references import ReferenceBundle, coarse_references, fine_references
from .retriever import retrieve
from .synthesizer import synthesize


# Wire format of a query response, served identically by the CLI (--json)
# and the HTTP endpoint.
QUERY_RESPONSE_SCHEMA = {
    "type": "object",
    "required": [
        "query", "grain", "answer", "annotated_answer", "references",
        "contributing_para_ids", "rounds", "usage",
    ],
    "properties": {
        "query": {"type": "string"},
        "grain": {"enum": ["coarse", "fine"]},
        "answer": {"type": "string"},
        "annotated_answer": {"type": "string"},
        "references": {
            "type": "object",
            "required": ["primary", "secondary"],
            "properties": {
                "primary": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["number", "doc_id", "title"],
                        "properties": {
                            "number": {"type": "integer", "minimum": 1},
                            "doc_id": {"type": "string"},
                            "title": {"type": "string"},
                        },
                    },
                },
                "secondary": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["number", "raw", "doc_id"],
                        "properties": {
                            "number": {"type": "integer", "minimum": 1},
                            "raw": {"type": "string"},
                            "doc_id": {"type": "string"},
                        },
                    },
                },
            },
        },
        "contributing_para_ids": {"type": "array", "items": {"type": "string"}},
        "rounds": {"type": "integer", "minimum": 0},
        "truncation_events": {"type": "array"},
        "usage": {
            "type": "object",
            "required": ["calls", "input_tokens", "output_tokens", "cost"],
            "properties": {
                "calls": {"type": "integer", "minimum": 0},
                "input_tokens": {"type": "integer", "minimum": 0},
                "output_tokens": {"type": "integer", "minimum": 0},
                "cost": {"type": "number", "minimum": 0},
            },
        },
    },
}


def build_gateway(config: Config) -> Gateway:
    if config.backend == "mock":
        return Gateway(DemoBackend())
    if config.backend == "openai":
        backend = OpenAICompatBackend(api_base=config.api_base, api_key_env=config.api_key_env)
        return Gateway(backend)
    raise ValueError(f"unknown backend {config.backend!r}")


def params_from_config(config: Config) -> GenerationParams:
    return GenerationParams(
        model_id=config.model_id,
        temperature=config.temperature,
        max_output_tokens=config.max_output_tokens,
        context_window_tokens=config.context_window_tokens,
    )


def bundle_payload(bundle: ReferenceBundle) -> dict:
    return {
        "primary": [
            {"number": p.number, "doc_id": p.doc_id, "title": p.title} for p in bundle.primary
        ],
        "secondary": [
            {"number": s.number, "raw": s.raw, "doc_id": s.doc_id} for s in bundle.secondary
        ],
    }


def run_query(
    query: str,
    grain: str,
    corpus: Corpus,
    gateway: Gateway,
    config: Config,
    on_progress: Callable[[int, int], None] | None = None,
) -> dict:
    params = params_from_config(config)
    ledger_start = len(gateway.ledger.records)
    contexts = retrieve(query, corpus, gateway, params, parallelism=config.parallelism)
    result = synthesize(query, contexts, gateway, params, config.budget, on_progress=on_progress)

    if not contexts:
        annotated = ""
        bundle = ReferenceBundle(grain=grain)
    elif grain == "fine" and result.answer_text.strip():
        annotated, bundle = fine_references(
            result.answer_text, contexts, corpus, gateway, params, mode=config.alignment_mode
        )
    else:
        annotated = result.answer_text
        bundle = coarse_references(contexts, corpus)
        bundle = replace(bundle, grain="coarse")

    new_records = gateway.ledger.records[ledger_start:]
    usage_in = sum(r.input_tokens for r in new_records)
    usage_out = sum(r.output_tokens for r in new_records)
    prices = PriceSheet(config.input_price_per_1m, config.output_price_per_1m)
    cost = (
        prices.input_price_per_1m * usage_in / 1_000_000
        + prices.output_price_per_1m * usage_out / 1_000_000
    )
    return {
        "query": query,
        "grain": grain,
        "answer": result.answer_text,
        "annotated_answer": annotated,
        "references": bundle_payload(bundle),
        "contributing_para_ids": result.contributing_para_ids,
        "rounds": result.rounds,
        "truncation_events": [list(e) for e in result.truncation_events],
        "usage": {
            "calls": len(new_records),
            "input_tokens": usage_in,
            "output_tokens": usage_out,
            "cost": cost,
        },
    }


def usage_summary(gateway: Gateway, config: Config) -> dict:
    stages: dict[str, dict] = {}
    for record in gateway.ledger.records:
        bucket = stages.setdefault(
            record.stage, {"calls": 0, "input_tokens": 0, "output_tokens": 0}
        )
        bucket["calls"] += 1
        bucket["input_tokens"] += record.input_tokens
        bucket["output_tokens"] += record.output_tokens
    report = cost_report(
        gateway.ledger, PriceSheet(config.input_price_per_1m, config.output_price_per_1m)
    )
    return {
        "stages": stages,
        "totals": {
            "calls": len(gateway.ledger.records),
            "input_tokens": report.total_input_tokens,
            "output_tokens": report.total_output_tokens,
        },
        "cost": report.cost,
    }
