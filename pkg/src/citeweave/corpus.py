"""Hierarchy-preserving document model and the offline corpus store.

A corpus is persisted as a single canonical JSON document (sorted keys) so
that saves are deterministic and diffable. Corpora are treated as immutable
values after load; ingestion builds a new value and saves it atomically.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator

from .errors import CorpusFormatError, ParagraphNotFoundError, ValidationError
from .textutils import normalize_ws, normalized_key

SCHEMA_VERSION = 1

ENUMERATED = "enumerated"
NAMED = "named"
UNKNOWN = "unknown"

# A reference key is an integer (enumerated style) or a named key:
# (surnames tuple, year).
NamedKey = tuple[tuple[str, ...], int]
RefKey = "int | NamedKey"


@dataclass
class CitationMarker:
    span: tuple[int, int]
    raw: str
    style: str  # ENUMERATED or NAMED
    resolved_keys: list = field(default_factory=list)
    unresolved: bool = True
    # Resolution found several candidate entries; first one was chosen.
    # Diagnostic only: not persisted, not part of equality.
    ambiguous: bool = field(default=False, compare=False)


@dataclass
class ReferenceEntry:
    key: Any  # int or NamedKey
    raw: str
    normalized: str = ""

    def __post_init__(self) -> None:
        if not self.normalized:
            self.normalized = normalized_key(self.raw)


@dataclass
class Paragraph:
    para_id: str
    text: str
    page_span: tuple[int, int]
    markers: list[CitationMarker] = field(default_factory=list)
    token_estimate: int = 0


@dataclass
class SectionNode:
    label: str
    heading: str
    depth: int
    paragraphs: list[Paragraph] = field(default_factory=list)
    children: list["SectionNode"] = field(default_factory=list)


@dataclass
class SourceDocument:
    doc_id: str
    title: str
    origin: str
    notation_style: str
    root: SectionNode
    references: list[ReferenceEntry] = field(default_factory=list)
    page_count: int = 1

    def iter_paragraphs(self) -> Iterator[Paragraph]:
        yield from _walk_paragraphs(self.root)

    def reference_by_key(self, key: Any) -> ReferenceEntry | None:
        for entry in self.references:
            if entry.key == key:
                return entry
        return None


def _walk_paragraphs(node: SectionNode) -> Iterator[Paragraph]:
    yield from node.paragraphs
    for child in node.children:
        yield from _walk_paragraphs(child)


def _walk_sections(node: SectionNode) -> Iterator[SectionNode]:
    yield node
    for child in node.children:
        yield from _walk_sections(child)


@dataclass
class ParagraphSummary:
    para_id: str
    summary_text: str
    model_id: str
    created_at: str  # ISO-8601
    token_estimate: int = 0


@dataclass
class Corpus:
    corpus_id: str
    documents: dict[str, SourceDocument] = field(default_factory=dict)
    summaries: dict[str, ParagraphSummary] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def with_document(self, doc: SourceDocument, summaries: list[ParagraphSummary]) -> "Corpus":
        """New corpus value containing this document and its summaries."""
        docs = dict(self.documents)
        docs[doc.doc_id] = doc
        summary_map = dict(self.summaries)
        for s in summaries:
            summary_map[s.para_id] = s
        return replace(self, documents=docs, summaries=summary_map)


def get_paragraph(corpus: Corpus, para_id: str) -> Paragraph:
    doc_id = para_id.split("/", 1)[0]
    doc = corpus.documents.get(doc_id)
    if doc is not None:
        for para in doc.iter_paragraphs():
            if para.para_id == para_id:
                return para
    raise ParagraphNotFoundError(para_id)


def owning_document(corpus: Corpus, para_id: str) -> SourceDocument:
    doc_id = para_id.split("/", 1)[0]
    doc = corpus.documents.get(doc_id)
    if doc is None:
        raise ParagraphNotFoundError(para_id)
    return doc


# --- validation -------------------------------------------------------------

def validate_corpus(corpus: Corpus) -> None:
    """Check every structural invariant; raise ValidationError naming the
    first violation found (deterministic order)."""
    if corpus.schema_version < 1:
        raise ValidationError("schema_version must be >= 1")
    seen_para_ids: set[str] = set()
    for doc_id, doc in corpus.documents.items():
        if doc_id != doc.doc_id:
            raise ValidationError(f"document map key {doc_id!r} != doc_id {doc.doc_id!r}")
        if doc.page_count < 1:
            raise ValidationError(f"{doc_id}: page_count must be >= 1")
        if doc.notation_style not in (ENUMERATED, NAMED, UNKNOWN):
            raise ValidationError(f"{doc_id}: bad notation_style {doc.notation_style!r}")
        _validate_tree(doc_id, doc.root, seen_para_ids)
        _validate_references(doc_id, doc)
        _validate_markers(doc)
    for para_id, summary in corpus.summaries.items():
        if para_id != summary.para_id:
            raise ValidationError(f"summary map key {para_id!r} != para_id {summary.para_id!r}")
        if not normalize_ws(summary.summary_text):
            raise ValidationError(f"{para_id}: empty summary_text")
        try:
            get_paragraph(corpus, para_id)
        except ParagraphNotFoundError:
            raise ValidationError(f"summary for unknown paragraph {para_id}") from None


def _validate_tree(doc_id: str, root: SectionNode, seen_para_ids: set[str]) -> None:
    if root.depth != 0:
        raise ValidationError(f"{doc_id}: root section depth must be 0")
    visited: set[int] = set()

    def walk(node: SectionNode) -> None:
        if id(node) in visited:
            raise ValidationError(f"{doc_id}: section tree has a cycle at {node.label!r}")
        visited.add(id(node))
        for para in node.paragraphs:
            if para.para_id in seen_para_ids:
                raise ValidationError(f"duplicate paragraph id {para.para_id}")
            seen_para_ids.add(para.para_id)
            if not normalize_ws(para.text):
                raise ValidationError(f"{para.para_id}: empty paragraph text")
            if para.token_estimate < 0:
                raise ValidationError(f"{para.para_id}: negative token_estimate")
        for child in node.children:
            if child.depth != node.depth + 1:
                raise ValidationError(
                    f"{doc_id}: section {child.label!r} depth {child.depth} "
                    f"under parent depth {node.depth}"
                )
            walk(child)

    walk(root)


def _validate_references(doc_id: str, doc: SourceDocument) -> None:
    seen_enumerated: set[int] = set()
    for entry in doc.references:
        if isinstance(entry.key, int):
            if entry.key < 1:
                raise ValidationError(f"{doc_id}: enumerated key {entry.key} < 1")
            if entry.key in seen_enumerated:
                raise ValidationError(f"{doc_id}: duplicate enumerated key {entry.key}")
            seen_enumerated.add(entry.key)


def _validate_markers(doc: SourceDocument) -> None:
    known_keys = {_hashable(e.key) for e in doc.references}
    for para in doc.iter_paragraphs():
        prev_end = -1
        for m in sorted(para.markers, key=lambda m: m.span[0]):
            start, end = m.span
            if not (0 <= start < end <= len(para.text)):
                raise ValidationError(f"{para.para_id}: marker span {m.span} out of bounds")
            if start < prev_end:
                raise ValidationError(f"{para.para_id}: overlapping marker spans")
            prev_end = end
            if m.unresolved != (not m.resolved_keys):
                raise ValidationError(
                    f"{para.para_id}: marker {m.raw!r} unresolved flag inconsistent"
                )
            if m.style == ENUMERATED:
                keys = [k for k in m.resolved_keys if isinstance(k, int)]
                if keys != sorted(set(keys)):
                    raise ValidationError(
                        f"{para.para_id}: enumerated keys not sorted/unique in {m.raw!r}"
                    )
            for key in m.resolved_keys:
                if _hashable(key) not in known_keys:
                    raise ValidationError(
                        f"{para.para_id}: marker {m.raw!r} resolves to unknown key {key!r}"
                    )


def _hashable(key: Any) -> Any:
    if isinstance(key, tuple):
        return (tuple(key[0]), key[1])
    return key


# --- JSON encoding ----------------------------------------------------------

def key_to_json(key: Any) -> Any:
    if isinstance(key, int):
        return key
    surnames, year = key
    return {"surnames": list(surnames), "year": year}


def key_from_json(value: Any) -> Any:
    if isinstance(value, int):
        return value
    if isinstance(value, dict) and "surnames" in value and "year" in value:
        return (tuple(value["surnames"]), int(value["year"]))
    raise CorpusFormatError(f"bad reference key {value!r}")


def _marker_to_json(m: CitationMarker) -> dict:
    return {
        "span": list(m.span),
        "raw": m.raw,
        "style": m.style,
        "resolved_keys": [key_to_json(k) for k in m.resolved_keys],
        "unresolved": m.unresolved,
    }


def _marker_from_json(d: dict) -> CitationMarker:
    return CitationMarker(
        span=(int(d["span"][0]), int(d["span"][1])),
        raw=d["raw"],
        style=d["style"],
        resolved_keys=[key_from_json(k) for k in d["resolved_keys"]],
        unresolved=bool(d["unresolved"]),
    )


def _paragraph_to_json(p: Paragraph) -> dict:
    return {
        "para_id": p.para_id,
        "text": p.text,
        "page_span": list(p.page_span),
        "markers": [_marker_to_json(m) for m in p.markers],
        "token_estimate": p.token_estimate,
    }


def _paragraph_from_json(d: dict) -> Paragraph:
    return Paragraph(
        para_id=d["para_id"],
        text=d["text"],
        page_span=(int(d["page_span"][0]), int(d["page_span"][1])),
        markers=[_marker_from_json(m) for m in d["markers"]],
        token_estimate=int(d["token_estimate"]),
    )


def _section_to_json(s: SectionNode) -> dict:
    return {
        "label": s.label,
        "heading": s.heading,
        "depth": s.depth,
        "paragraphs": [_paragraph_to_json(p) for p in s.paragraphs],
        "children": [_section_to_json(c) for c in s.children],
    }


def _section_from_json(d: dict) -> SectionNode:
    return SectionNode(
        label=d["label"],
        heading=d["heading"],
        depth=int(d["depth"]),
        paragraphs=[_paragraph_from_json(p) for p in d["paragraphs"]],
        children=[_section_from_json(c) for c in d["children"]],
    )


def _document_to_json(doc: SourceDocument) -> dict:
    return {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "origin": doc.origin,
        "notation_style": doc.notation_style,
        "page_count": doc.page_count,
        "root": _section_to_json(doc.root),
        "references": [{"key": key_to_json(e.key), "raw": e.raw} for e in doc.references],
    }


def _document_from_json(d: dict) -> SourceDocument:
    return SourceDocument(
        doc_id=d["doc_id"],
        title=d["title"],
        origin=d["origin"],
        notation_style=d["notation_style"],
        root=_section_from_json(d["root"]),
        references=[ReferenceEntry(key=key_from_json(e["key"]), raw=e["raw"]) for e in d["references"]],
        page_count=int(d["page_count"]),
    )


def corpus_to_json(corpus: Corpus) -> dict:
    return {
        "schema_version": corpus.schema_version,
        "corpus_id": corpus.corpus_id,
        "documents": [_document_to_json(doc) for doc in corpus.documents.values()],
        "summaries": [
            {
                "para_id": s.para_id,
                "summary_text": s.summary_text,
                "model_id": s.model_id,
                "created_at": s.created_at,
                "token_estimate": s.token_estimate,
            }
            for s in corpus.summaries.values()
        ],
    }


def corpus_from_json(data: dict) -> Corpus:
    try:
        version = int(data["schema_version"])
        if version > SCHEMA_VERSION:
            raise CorpusFormatError(
                f"corpus schema_version {version} newer than supported {SCHEMA_VERSION}"
            )
        documents = {}
        for d in data["documents"]:
            doc = _document_from_json(d)
            documents[doc.doc_id] = doc
        summaries = {}
        for s in data["summaries"]:
            summaries[s["para_id"]] = ParagraphSummary(
                para_id=s["para_id"],
                summary_text=s["summary_text"],
                model_id=s["model_id"],
                created_at=s["created_at"],
                token_estimate=int(s["token_estimate"]),
            )
        return Corpus(
            corpus_id=data["corpus_id"],
            documents=documents,
            summaries=summaries,
            schema_version=version,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorpusFormatError(f"malformed corpus JSON: {exc}") from exc


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Validate and persist; the write is atomic (temp file + rename)."""
    validate_corpus(corpus)
    payload = json.dumps(corpus_to_json(corpus), sort_keys=True, indent=1)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(payload, encoding="utf-8")
    os.replace(tmp, path)


def load_corpus(path: str | Path) -> Corpus:
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"corpus file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorpusFormatError(f"corpus file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise CorpusFormatError("corpus JSON must be an object")
    corpus = corpus_from_json(data)
    validate_corpus(corpus)
    return corpus
