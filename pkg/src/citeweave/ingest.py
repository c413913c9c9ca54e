"""Document ingestion: extract, summarize per paragraph, commit to the store.

One summarization call per paragraph, except paragraphs already at or under
the verbatim threshold, which become their own summary without a call.
Ingestion is idempotent for byte-identical PDFs (content-hash doc ids) and
atomic: a failed ingest leaves the stored corpus untouched.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import prompts
from .config import Config
from .corpus import Corpus, Paragraph, ParagraphSummary, save_corpus
from .errors import CiteweaveError
from .extractor import extract_document
from .gateway import Gateway, GenerationParams


def doc_id_for(pdf_bytes: bytes) -> str:
    return hashlib.sha256(pdf_bytes).hexdigest()[:16]


def summarize_paragraph(
    paragraph: Paragraph,
    gateway: Gateway,
    params: GenerationParams,
    verbatim_max_tokens: int = 40,
) -> ParagraphSummary:
    if not paragraph.text.strip():
        raise ValueError(f"{paragraph.para_id}: cannot summarize empty paragraph")
    if paragraph.token_estimate <= verbatim_max_tokens:
        summary_text = paragraph.text
    else:
        prompt = prompts.SUMMARIZE_PARAGRAPH.format(paragraph=paragraph.text)
        try:
            summary_text, _ = gateway.complete(prompt, params, stage="summarize")
        except CiteweaveError as exc:
            raise type(exc)(f"{paragraph.para_id}: {exc}") from exc
        if not summary_text.strip():
            summary_text = paragraph.text
    return ParagraphSummary(
        para_id=paragraph.para_id,
        summary_text=summary_text,
        model_id=params.model_id,
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        token_estimate=gateway.estimate_tokens(summary_text),
    )


def ingest_document(
    pdf_bytes: bytes,
    corpus: Corpus,
    store_path: str | Path,
    gateway: Gateway,
    params: GenerationParams,
    config: Config | None = None,
    origin: str = "",
) -> tuple[Corpus, str]:
    """Extract and summarize one PDF, then persist the grown corpus.

    Returns the new corpus value and the document id. Re-ingesting an
    identical PDF is a no-op that returns the existing id.
    """
    config = config or Config()
    doc_id = doc_id_for(pdf_bytes)
    if doc_id in corpus.documents:
        return corpus, doc_id

    doc = extract_document(
        pdf_bytes,
        doc_id,
        origin=origin,
        thresholds=config.thresholds,
        estimator=gateway.estimate_tokens,
    )
    paragraphs = list(doc.iter_paragraphs())
    verbatim_max = config.thresholds.verbatim_summary_max_tokens

    def summarize(paragraph: Paragraph) -> ParagraphSummary:
        return summarize_paragraph(paragraph, gateway, params, verbatim_max)

    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            summaries = list(pool.map(summarize, paragraphs))
    else:
        summaries = [summarize(p) for p in paragraphs]

    new_corpus = corpus.with_document(doc, summaries)
    save_corpus(new_corpus, store_path)
    return new_corpus, doc_id
