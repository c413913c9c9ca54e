"""Shared fixtures: scripted gateways and hand-built corpora."""

from __future__ import annotations

import pytest

from citeweave.corpus import (
    Corpus,
    Paragraph,
    ParagraphSummary,
    ReferenceEntry,
    SectionNode,
    SourceDocument,
)
from citeweave.gateway import Gateway, GenerationParams, estimate_tokens
from citeweave.mock import MockBackend


@pytest.fixture
def params() -> GenerationParams:
    return GenerationParams(model_id="mock", max_output_tokens=256, context_window_tokens=16000)


def make_gateway(backend: MockBackend | None = None) -> tuple[Gateway, MockBackend]:
    backend = backend or MockBackend()
    return Gateway(backend, backoff_seconds=0.0), backend


def make_document(
    doc_id: str,
    paragraph_texts: list[str],
    references: list[ReferenceEntry] | None = None,
    notation_style: str = "enumerated",
    title: str | None = None,
) -> SourceDocument:
    root = SectionNode(label="", heading="", depth=0)
    section = SectionNode(label="1", heading="Body", depth=1)
    root.children.append(section)
    for i, text in enumerate(paragraph_texts):
        section.paragraphs.append(
            Paragraph(
                para_id=f"{doc_id}/0/{i}",
                text=text,
                page_span=(1, 1),
                token_estimate=estimate_tokens(text),
            )
        )
    return SourceDocument(
        doc_id=doc_id,
        title=title or f"Document {doc_id}",
        origin=f"{doc_id}.pdf",
        notation_style=notation_style,
        root=root,
        references=references or [],
        page_count=1,
    )


def make_corpus(docs: list[SourceDocument], with_summaries: bool = True) -> Corpus:
    corpus = Corpus(corpus_id="test")
    for doc in docs:
        summaries = []
        if with_summaries:
            for para in doc.iter_paragraphs():
                summaries.append(
                    ParagraphSummary(
                        para_id=para.para_id,
                        summary_text=f"Summary of: {para.text[:80]}",
                        model_id="mock",
                        created_at="2026-01-01T00:00:00+00:00",
                        token_estimate=estimate_tokens(para.text[:80]),
                    )
                )
        corpus = corpus.with_document(doc, summaries)
    return corpus
