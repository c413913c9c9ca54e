"""Context retrieval: an LLM judge over paragraph summaries.

Every summary is judged exactly once per query; there is no top-k cutoff.
All paragraphs the judge accepts come back as RetrievedContext values in
document order, carrying the original paragraph text for generation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import prompts
from .corpus import Corpus, Paragraph
from .errors import EmptyCorpusError
from .gateway import Gateway, GenerationParams


@dataclass
class RetrievedContext:
    para_id: str
    paragraph: Paragraph  # original text, not the summary
    verdict_source: str = "llm_judge"  # or "forced_include"
    rank: int = 0


def is_relevant(query: str, summary: str, gateway: Gateway, params: GenerationParams) -> bool:
    if not query.strip() or not summary.strip():
        raise ValueError("query and summary must be non-empty")
    prompt = prompts.RELEVANCE_JUDGE.format(paragraph=summary, query=query)
    return gateway.judge_boolean(prompt, params, stage="retrieve")


def corpus_paragraphs(corpus: Corpus) -> list[Paragraph]:
    """All paragraphs in (document ingest order, section path, ordinal)."""
    ordered: list[Paragraph] = []
    for doc in corpus.documents.values():
        ordered.extend(doc.iter_paragraphs())
    return ordered


def retrieve(
    query: str,
    corpus: Corpus,
    gateway: Gateway,
    params: GenerationParams,
    parallelism: int = 1,
) -> list[RetrievedContext]:
    paragraphs = [p for p in corpus_paragraphs(corpus) if p.para_id in corpus.summaries]
    if not paragraphs:
        raise EmptyCorpusError("corpus has no summarized paragraphs to judge")

    def judge(paragraph: Paragraph) -> bool:
        return is_relevant(query, corpus.summaries[paragraph.para_id].summary_text, gateway, params)

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            verdicts = list(pool.map(judge, paragraphs))
    else:
        verdicts = [judge(p) for p in paragraphs]

    contexts = []
    for paragraph, verdict in zip(paragraphs, verdicts):
        if verdict:
            contexts.append(
                RetrievedContext(para_id=paragraph.para_id, paragraph=paragraph, rank=len(contexts))
            )
    return contexts
