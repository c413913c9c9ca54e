"""Citation parsing and reference attachment.

Recognizes enumerated ("[1]", "[2-5]", "[3,9]") and author-year
("(Jia et al., 2021)", "Jia et al. (2021)") citation markers, resolves them
against a document's bibliography, and builds numbered reference bundles for
synthesized answers: primary references are the contributing source
documents, secondary references are the bibliography entries cited inside
the retrieved paragraphs. Coarse grain catalogs everything found in the
contexts; fine grain attaches references per answer line via source-line
alignment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from . import prompts
from .corpus import (
    ENUMERATED,
    NAMED,
    UNKNOWN,
    CitationMarker,
    Corpus,
    ReferenceEntry,
    SourceDocument,
    owning_document,
)
from .errors import AlignmentParseError
from .gateway import Gateway, GenerationParams
from .retriever import RetrievedContext
from .textutils import ngram_jaccard, normalize_ws, split_sentences

_ENUM_MARKER = re.compile(r"\[(\d+(?:\s*[,\-–]\s*\d+)*)\]")
_SURNAME = r"[A-Z][A-Za-z'\-]+"
_NAMED_ITEM = re.compile(
    rf"({_SURNAME})(?:\s+et\s+al\.?)?(?:\s+and\s+({_SURNAME}))?\s*,\s*((?:19|20)\d{{2}})"
)
_NAMED_PAREN = re.compile(
    rf"\(\s*{_SURNAME}(?:\s+et\s+al\.?)?(?:\s+and\s+{_SURNAME})?\s*,\s*(?:19|20)\d{{2}}"
    rf"(?:\s*;\s*{_SURNAME}(?:\s+et\s+al\.?)?(?:\s+and\s+{_SURNAME})?\s*,\s*(?:19|20)\d{{2}})*\s*\)"
)
_NAMED_PROSE = re.compile(rf"({_SURNAME})\s+et\s+al\.\s*\(\s*((?:19|20)\d{{2}})\s*\)")


def parse_citations(text: str, style: str) -> list[CitationMarker]:
    """Find citation markers in running text.

    Keys are syntactic at this stage (bracket numbers with ranges expanded,
    or (surnames, year) tuples); resolve_markers checks them against the
    bibliography. Unknown style tries both grammars. Overlapping matches
    keep the earliest.
    """
    found: list[CitationMarker] = []
    if style in (ENUMERATED, UNKNOWN):
        for m in _ENUM_MARKER.finditer(text):
            keys = _expand_enumerated(m.group(1))
            found.append(
                CitationMarker(
                    span=(m.start(), m.end()),
                    raw=m.group(0),
                    style=ENUMERATED,
                    resolved_keys=keys,
                    unresolved=not keys,
                )
            )
    if style in (NAMED, UNKNOWN):
        for m in _NAMED_PAREN.finditer(text):
            keys = [
                ((item.group(1),) + ((item.group(2),) if item.group(2) else ()), int(item.group(3)))
                for item in _NAMED_ITEM.finditer(m.group(0))
            ]
            found.append(
                CitationMarker(
                    span=(m.start(), m.end()),
                    raw=m.group(0),
                    style=NAMED,
                    resolved_keys=keys,
                    unresolved=not keys,
                )
            )
        for m in _NAMED_PROSE.finditer(text):
            found.append(
                CitationMarker(
                    span=(m.start(), m.end()),
                    raw=m.group(0),
                    style=NAMED,
                    resolved_keys=[((m.group(1),), int(m.group(2)))],
                    unresolved=False,
                )
            )
    found.sort(key=lambda mk: mk.span)
    result: list[CitationMarker] = []
    for marker in found:
        if result and marker.span[0] < result[-1].span[1]:
            continue
        result.append(marker)
    return result


def _expand_enumerated(body: str) -> list[int]:
    keys: set[int] = set()
    for piece in body.split(","):
        piece = piece.strip()
        m = re.fullmatch(r"(\d+)\s*[\-–]\s*(\d+)", piece)
        if m:
            a, b = sorted((int(m.group(1)), int(m.group(2))))
            keys.update(range(a, b + 1))
        elif piece.isdigit():
            keys.add(int(piece))
    return sorted(keys)


def render_enumerated_keys(keys: Sequence[int]) -> str:
    """Canonical bracket form; consecutive runs collapse to ranges."""
    ordered = sorted(set(keys))
    if not ordered:
        return "[]"
    parts: list[str] = []
    run_start = prev = ordered[0]
    for k in ordered[1:] + [None]:  # type: ignore[list-item]
        if k is not None and k == prev + 1:
            prev = k
            continue
        parts.append(str(run_start) if run_start == prev else f"{run_start}-{prev}")
        if k is not None:
            run_start = prev = k
    return "[" + ", ".join(parts) + "]"


def resolve_markers(markers: list[CitationMarker], references: list[ReferenceEntry]) -> list[CitationMarker]:
    """Resolve marker keys against the owning document's bibliography.

    Enumerated keys resolve when the number exists. Named keys resolve when
    exactly one entry's raw text contains the first surname (word boundary,
    case-insensitive) and the year; several candidates pick the earliest and
    flag the marker ambiguous.
    """
    enumerated_keys = {e.key for e in references if isinstance(e.key, int)}
    for marker in markers:
        if marker.style == ENUMERATED:
            resolved = [k for k in marker.resolved_keys if k in enumerated_keys]
            marker.resolved_keys = sorted(set(resolved))
        else:
            resolved = []
            for key in marker.resolved_keys:
                surnames, year = key
                matches = [
                    e
                    for e in references
                    if re.search(rf"\b{re.escape(surnames[0])}\b", e.raw, re.IGNORECASE)
                    and re.search(rf"\b{year}\b", e.raw)
                ]
                if not matches:
                    continue
                if len(matches) > 1:
                    marker.ambiguous = True
                entry_key = matches[0].key
                if entry_key not in resolved:
                    resolved.append(entry_key)
            marker.resolved_keys = resolved
        marker.unresolved = not marker.resolved_keys
    return markers


@dataclass
class PrimaryRef:
    number: int
    doc_id: str
    title: str


@dataclass
class SecondaryRef:
    number: int
    key: object
    raw: str
    doc_id: str  # document whose bibliography carries the entry


@dataclass
class ReferenceBundle:
    primary: list[PrimaryRef] = field(default_factory=list)
    secondary: list[SecondaryRef] = field(default_factory=list)
    grain: str = "coarse"
    unresolved: list[CitationMarker] = field(default_factory=list)

    def render(self) -> str:
        lines = [f"{p.number}. {p.title}" for p in self.primary]
        lines += [f"{s.number}. {s.raw}" for s in self.secondary]
        return "\n".join(lines)


def coarse_references(contexts: Sequence[RetrievedContext], corpus: Corpus) -> ReferenceBundle:
    """Catalog of every reference found anywhere in the retrieved contexts."""
    if not contexts:
        raise ValueError("coarse_references requires at least one context")
    context_docs = {c.para_id.split("/", 1)[0] for c in contexts}
    primary_docs = [d for d in corpus.documents.values() if d.doc_id in context_docs]

    secondary: list[tuple[ReferenceEntry, str]] = []
    seen_normalized: set[str] = set()
    unresolved: list[CitationMarker] = []
    for context in contexts:
        doc = owning_document(corpus, context.para_id)
        for marker in sorted(context.paragraph.markers, key=lambda m: m.span):
            if marker.unresolved:
                unresolved.append(marker)
                continue
            for key in marker.resolved_keys:
                entry = doc.reference_by_key(key)
                if entry is None or entry.normalized in seen_normalized:
                    continue
                seen_normalized.add(entry.normalized)
                secondary.append((entry, doc.doc_id))

    bundle = ReferenceBundle(grain="coarse", unresolved=unresolved)
    for i, doc in enumerate(primary_docs, start=1):
        bundle.primary.append(PrimaryRef(number=i, doc_id=doc.doc_id, title=doc.title))
    offset = len(bundle.primary)
    for j, (entry, doc_id) in enumerate(secondary, start=offset + 1):
        bundle.secondary.append(SecondaryRef(number=j, key=entry.key, raw=entry.raw, doc_id=doc_id))
    return bundle


@dataclass
class LineAlignment:
    answer_line: str
    line_index: int
    source_line: str
    para_id: str | None
    match_method: str  # exact | normalized | ngram_overlap | unattributed
    source_span: tuple[int, int] | None = None


_PAIR_PATTERN = re.compile(
    r"Synthesized\s+Line\s*:?\s*(.*?)\s*Corresponding\s+Source\s+Line\s*:?\s*(.*?)"
    r"(?=(?:\d+[.)]\s*|[-*]\s*)?Synthesized\s+Line|\Z)",
    re.IGNORECASE | re.DOTALL,
)


def align_lines(
    answer_text: str,
    contexts: Sequence[RetrievedContext],
    gateway: Gateway,
    params: GenerationParams,
    mode: str = "single_call",
) -> list[LineAlignment]:
    """Map each answer line to its supporting source line and paragraph.

    single_call renders the whole-answer alignment prompt once and parses
    "Synthesized Line / Corresponding Source Line" pairs. per_pair judges
    every (answer line, context line) pair with a boolean prompt, matching
    the per-pair cost accounting.
    """
    if not answer_text.strip():
        raise ValueError("answer text must be non-empty")
    answer_lines = split_sentences(answer_text)
    if mode == "per_pair":
        pairs = _align_per_pair(answer_lines, contexts, gateway, params)
    else:
        pairs = _align_single_call(answer_text, answer_lines, contexts, gateway, params)

    alignments: list[LineAlignment] = []
    for index, line in enumerate(answer_lines):
        source_line = pairs.get(_loose(line))
        if source_line is None:
            alignments.append(
                LineAlignment(line, index, "", None, "unattributed")
            )
            continue
        para_id, method, span = _locate_source(source_line, contexts)
        alignments.append(
            LineAlignment(line, index, source_line, para_id, method, span)
        )
    return alignments


def _align_single_call(
    answer_text: str,
    answer_lines: list[str],
    contexts: Sequence[RetrievedContext],
    gateway: Gateway,
    params: GenerationParams,
) -> dict[str, str]:
    context_blob = "\n\n".join(c.paragraph.text for c in contexts)
    prompt = prompts.LINE_ALIGNMENT.format(synthesized_result=answer_text, context=context_blob)
    reply, _ = gateway.complete(prompt, params, stage="align")
    parsed = _PAIR_PATTERN.findall(reply)
    # keep the source side verbatim so the exact/normalized match tiers stay
    # distinguishable downstream
    parsed = [(normalize_ws(a), b.strip()) for a, b in parsed if normalize_ws(a) and normalize_ws(b)]
    if not parsed and reply.strip():
        raise AlignmentParseError("no alignment pairs found in reply", raw_reply=reply)
    pairs: dict[str, str] = {}
    for synthesized, source in parsed:
        match = _match_answer_line(synthesized, answer_lines)
        if match is not None and _loose(match) not in pairs:
            pairs[_loose(match)] = source
    return pairs


def _align_per_pair(
    answer_lines: list[str],
    contexts: Sequence[RetrievedContext],
    gateway: Gateway,
    params: GenerationParams,
) -> dict[str, str]:
    context_lines = [s for c in contexts for s in split_sentences(c.paragraph.text)]
    pairs: dict[str, str] = {}
    for line in answer_lines:
        for context_line in context_lines:
            prompt = prompts.LINE_PAIR_JUDGE.format(answer_line=line, context_line=context_line)
            if gateway.judge_boolean(prompt, params, stage="align") and _loose(line) not in pairs:
                pairs[_loose(line)] = context_line
    return pairs


def _loose(text: str) -> str:
    return normalize_ws(text).lower().rstrip(".")


def _match_answer_line(synthesized: str, answer_lines: list[str]) -> str | None:
    target = _loose(synthesized)
    for line in answer_lines:
        if _loose(line) == target:
            return line
    for line in answer_lines:
        loose = _loose(line)
        if loose and (loose in target or target in loose):
            return line
    return None


def _locate_source(
    source_line: str, contexts: Sequence[RetrievedContext]
) -> tuple[str | None, str, tuple[int, int] | None]:
    stripped = source_line.strip()
    for context in contexts:
        pos = context.paragraph.text.find(stripped)
        if pos >= 0:
            return context.para_id, "exact", (pos, pos + len(stripped))
    pattern = _normalized_pattern(stripped)
    if pattern is not None:
        for context in contexts:
            m = pattern.search(context.paragraph.text)
            if m:
                return context.para_id, "normalized", (m.start(), m.end())
    best: tuple[float, str, str] | None = None
    for context in contexts:
        for sentence in split_sentences(context.paragraph.text):
            score = ngram_jaccard(stripped, sentence)
            if score >= 0.5 and (best is None or score > best[0]):
                best = (score, context.para_id, sentence)
    if best is not None:
        _, para_id, sentence = best
        context = next(c for c in contexts if c.para_id == para_id)
        pos = context.paragraph.text.find(sentence)
        span = (pos, pos + len(sentence)) if pos >= 0 else None
        return para_id, "ngram_overlap", span
    return None, "unattributed", None


def _normalized_pattern(text: str) -> re.Pattern | None:
    tokens = normalize_ws(text).split(" ")
    tokens = [t for t in tokens if t]
    if not tokens:
        return None
    return re.compile(r"\s+".join(re.escape(t) for t in tokens), re.IGNORECASE)


def fine_references(
    answer_text: str,
    contexts: Sequence[RetrievedContext],
    corpus: Corpus,
    gateway: Gateway,
    params: GenerationParams,
    mode: str = "single_call",
) -> tuple[str, ReferenceBundle]:
    """Per-line reference attachment.

    Each attributed answer line collects the markers whose spans intersect
    its matched source line (falling back to the whole paragraph's markers
    when the line itself carries none) plus the owning document as primary.
    Answer lines are rewritten with bracketed output numbers; consecutive
    numbers collapse to ranges. A wholly unattributed answer degrades to a
    primaries-only bundle with no annotations.
    """
    if not contexts:
        raise ValueError("fine_references requires at least one context")
    alignments = align_lines(answer_text, contexts, gateway, params, mode=mode)
    by_para = {c.para_id: c for c in contexts}

    attributed = [a for a in alignments if a.para_id is not None]
    if not attributed:
        bundle = coarse_references(contexts, corpus)
        return answer_text, ReferenceBundle(primary=bundle.primary, secondary=[], grain="fine")

    cited_doc_ids: list[str] = []
    line_entries: dict[int, list[tuple[ReferenceEntry, str]]] = {}
    ordered_entries: list[tuple[ReferenceEntry, str]] = []
    seen_normalized: set[str] = set()
    unresolved: list[CitationMarker] = []

    for alignment in attributed:
        context = by_para[alignment.para_id]
        doc = owning_document(corpus, alignment.para_id)
        if doc.doc_id not in cited_doc_ids:
            cited_doc_ids.append(doc.doc_id)
        markers = [
            m
            for m in context.paragraph.markers
            if alignment.source_span is not None
            and m.span[0] < alignment.source_span[1]
            and m.span[1] > alignment.source_span[0]
        ]
        if not markers:
            markers = list(context.paragraph.markers)  # paragraph-level fallback
        entries: list[tuple[ReferenceEntry, str]] = []
        for marker in sorted(markers, key=lambda m: m.span):
            if marker.unresolved:
                unresolved.append(marker)
                continue
            for key in marker.resolved_keys:
                entry = doc.reference_by_key(key)
                if entry is None:
                    continue
                entries.append((entry, doc.doc_id))
                if entry.normalized not in seen_normalized:
                    seen_normalized.add(entry.normalized)
                    ordered_entries.append((entry, doc.doc_id))
        line_entries[alignment.line_index] = entries

    primary_docs = [d for d in corpus.documents.values() if d.doc_id in cited_doc_ids]
    bundle = ReferenceBundle(grain="fine", unresolved=unresolved)
    primary_numbers: dict[str, int] = {}
    for i, doc in enumerate(primary_docs, start=1):
        bundle.primary.append(PrimaryRef(number=i, doc_id=doc.doc_id, title=doc.title))
        primary_numbers[doc.doc_id] = i
    secondary_numbers: dict[str, int] = {}
    for j, (entry, doc_id) in enumerate(ordered_entries, start=len(bundle.primary) + 1):
        bundle.secondary.append(SecondaryRef(number=j, key=entry.key, raw=entry.raw, doc_id=doc_id))
        secondary_numbers[entry.normalized] = j

    annotated_lines: list[str] = []
    for alignment in alignments:
        line = alignment.answer_line
        if alignment.para_id is None:
            annotated_lines.append(line)
            continue
        doc = owning_document(corpus, alignment.para_id)
        numbers = {primary_numbers[doc.doc_id]}
        for entry, _ in line_entries.get(alignment.line_index, []):
            numbers.add(secondary_numbers[entry.normalized])
        annotated_lines.append(_annotate_line(line, sorted(numbers)))
    return " ".join(annotated_lines), bundle


def _annotate_line(line: str, numbers: list[int]) -> str:
    if not numbers:
        return line
    rendered = render_enumerated_keys(numbers)
    stripped = line.rstrip()
    if stripped and stripped[-1] in ".!?":
        return f"{stripped[:-1]} {rendered}{stripped[-1]}"
    return f"{stripped} {rendered}"
