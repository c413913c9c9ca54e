"""Research-article PDF structure extraction.

Turns positioned text runs into a hierarchy-preserving SourceDocument:
layout statistics (columns, body font, line-gap and indent medians), section
and subsection headings (keyword and numbering patterns verified against the
layout), paragraph segmentation by gap/indent/column rules, and bibliography
entry splitting for enumerated and author-year styles.
"""

from __future__ import annotations

import re
import statistics
from collections import Counter
from dataclasses import dataclass, field

from .config import ExtractionThresholds
from .corpus import ENUMERATED, NAMED, UNKNOWN, Paragraph, ReferenceEntry, SectionNode, SourceDocument
from .errors import EmptyDocumentError, UnsupportedDocumentError
from .gateway import estimate_tokens
from .pdfread import TextRun, read_text_runs
from .references import parse_citations, resolve_markers
from .textutils import merge_broken_lines, normalize_ws

# Unnumbered headings recognized by keyword.
HEADING_KEYWORDS = {
    "abstract",
    "introduction",
    "background",
    "related work",
    "methods",
    "methodology",
    "approach",
    "experiments",
    "evaluation",
    "results",
    "discussion",
    "analysis",
    "conclusion",
    "conclusions",
    "limitations",
    "future work",
    "acknowledgments",
    "acknowledgements",
    "appendix",
    "references",
    "bibliography",
}

BIBLIOGRAPHY_KEYWORDS = {"references", "bibliography"}

_NUMBERED = re.compile(r"^(\d+(?:\.\d+){0,3})\.?\s+(\S.*)$")
_LETTERED = re.compile(r"^\(?([a-z])[.)]\s+(\S.*)$")
_ENUM_ENTRY = re.compile(r"^\[(\d+)\]\s*")
_YEAR = re.compile(r"\b(19|20)\d{2}\b")

# Line-building geometry (points).
_BASELINE_TOLERANCE = 1.8
_COLUMN_GAP_MIN = 12.0
_CLUSTER_WINDOW = 6.0
_COLUMN_SNAP = 2.5
_MIN_COLUMN_SEPARATION = 90.0


@dataclass
class TextSpan:
    """One physical text line."""

    text: str
    page: int
    bbox: tuple[float, float, float, float]  # x0, y0, x1, y1
    font: str
    size: float
    bold: bool
    baseline: float

    @property
    def x0(self) -> float:
        return self.bbox[0]


@dataclass
class LayoutProfile:
    column_count: int
    body_font: tuple[str, float]
    heading_fonts: list[tuple[str, float, bool]]
    median_line_gap: float
    median_indent: float
    page_boxes: dict[int, tuple[float, float, float, float]]
    column_xs: list[float] = field(default_factory=list)

    def column_of(self, x0: float) -> int:
        col = 0
        for i, cx in enumerate(self.column_xs):
            if x0 >= cx - _COLUMN_SNAP:
                col = i
        return col

    def indent_of(self, span: TextSpan) -> float:
        if not self.column_xs:
            return 0.0
        return max(0.0, span.x0 - self.column_xs[self.column_of(span.x0)])

    def at_column_start(self, span: TextSpan) -> bool:
        return any(abs(span.x0 - cx) <= _COLUMN_SNAP for cx in self.column_xs)


@dataclass
class Heading:
    label: str
    text: str
    depth: int
    span: TextSpan


def spans_from_runs(runs: list[TextRun]) -> list[TextSpan]:
    """Group raw text runs into physical lines.

    Runs sharing a baseline merge left to right; a horizontal jump wider
    than the column-gap minimum starts a new line (two-column layouts, and
    producers that emit one run per word stay intact either way).
    """
    spans: list[TextSpan] = []
    by_page: dict[int, list[TextRun]] = {}
    for run in runs:
        if run.text.strip():
            by_page.setdefault(run.page, []).append(run)
    for page in sorted(by_page):
        page_runs = sorted(by_page[page], key=lambda r: (-r.y, r.x))
        groups: list[list[TextRun]] = []
        for run in page_runs:
            if groups and abs(groups[-1][0].y - run.y) <= _BASELINE_TOLERANCE:
                groups[-1].append(run)
            else:
                groups.append([run])
        for group in groups:
            group.sort(key=lambda r: r.x)
            segment: list[TextRun] = []
            for run in group:
                if segment:
                    gap = run.x - (segment[-1].x + segment[-1].width)
                    if gap > max(_COLUMN_GAP_MIN, segment[-1].size * 1.2):
                        spans.append(_segment_to_span(segment))
                        segment = []
                segment.append(run)
            if segment:
                spans.append(_segment_to_span(segment))
    spans.sort(key=lambda s: (s.page, -s.baseline, s.x0))
    return spans


def _segment_to_span(segment: list[TextRun]) -> TextSpan:
    pieces: list[str] = []
    for i, run in enumerate(segment):
        if i > 0:
            gap = run.x - (segment[i - 1].x + segment[i - 1].width)
            if gap > 0.2 * run.size and not pieces[-1].endswith(" ") and not run.text.startswith(" "):
                pieces.append(" ")
        pieces.append(run.text)
    weights: Counter = Counter()
    for run in segment:
        weights[(run.font, round(run.size, 1))] += len(run.text.replace(" ", ""))
    (font, size), _ = weights.most_common(1)[0]
    x0 = segment[0].x
    x1 = max(r.x + r.width for r in segment)
    baseline = segment[0].y
    return TextSpan(
        text="".join(pieces).strip(),
        page=segment[0].page,
        bbox=(x0, baseline - 0.22 * size, max(x1, x0 + 0.1), baseline + 0.78 * size),
        font=font,
        size=size,
        bold="bold" in font.lower() or "black" in font.lower(),
        baseline=baseline,
    )


def analyze_layout(
    spans: list[TextSpan], thresholds: ExtractionThresholds | None = None
) -> LayoutProfile:
    """Layout statistics over the whole document.

    Body font is the glyph-count mode; columns are x-start clusters holding
    at least the configured share of body lines; gap and indent medians are
    computed over body-font lines only.
    """
    thresholds = thresholds or ExtractionThresholds()
    if not spans:
        raise EmptyDocumentError("document has no text spans")

    glyphs: Counter = Counter()
    for span in spans:
        glyphs[(span.font, span.size)] += len(span.text.replace(" ", ""))
    body_font = glyphs.most_common(1)[0][0]
    body = [s for s in spans if (s.font, s.size) == body_font]
    if not body:
        body = list(spans)

    clusters = _merge_indent_clusters(_cluster_positions([s.x0 for s in body]))
    qualifying = [(pos, count) for pos, count in clusters if count >= thresholds.column_mass_fraction * len(body)]
    qualifying.sort(key=lambda pc: -pc[1])
    column_xs = [qualifying[0][0]] if qualifying else [min(s.x0 for s in body)]
    for pos, _ in qualifying[1:]:
        # a genuine second column sits far from the first; nearby clusters
        # are indentation, not columns
        if abs(pos - column_xs[0]) > _MIN_COLUMN_SEPARATION:
            column_xs.append(pos)
            break
    column_xs.sort()
    column_count = 2 if len(column_xs) == 2 else 1

    profile = LayoutProfile(
        column_count=column_count,
        body_font=body_font,
        heading_fonts=sorted(
            {(s.font, s.size, s.bold) for s in spans if s.bold or s.size > body_font[1]},
            key=lambda f: -f[1],
        ),
        median_line_gap=0.0,
        median_indent=0.0,
        page_boxes=_page_boxes(spans),
        column_xs=column_xs,
    )

    gaps: list[float] = []
    for (_, _), column_spans in _by_page_column(body, profile).items():
        for prev, cur in zip(column_spans, column_spans[1:]):
            delta = prev.baseline - cur.baseline
            if delta > 0:
                gaps.append(delta)
    profile.median_line_gap = statistics.median(gaps) if gaps else body_font[1] * 1.2

    indents = [off for s in body if 2.0 < (off := profile.indent_of(s)) < 48.0]
    profile.median_indent = statistics.median(indents) if indents else 0.0
    return profile


def _cluster_positions(xs: list[float]) -> list[tuple[float, int]]:
    clusters: list[tuple[float, int]] = []
    for x in sorted(xs):
        if clusters and x - clusters[-1][0] <= _CLUSTER_WINDOW:
            pos, count = clusters[-1]
            clusters[-1] = (pos, count + 1)  # anchor stays at cluster start
        else:
            clusters.append((x, 1))
    return clusters


def _merge_indent_clusters(clusters: list[tuple[float, int]]) -> list[tuple[float, int]]:
    """Fold indent-band clusters into the column anchor on their left.

    First-line and hanging indents start within ~half an inch of the column
    edge; their lines count toward the column's mass, not a column of their
    own."""
    merged: list[tuple[float, int]] = []
    for pos, count in clusters:  # sorted ascending by construction
        if merged and pos - merged[-1][0] <= 48.0:
            anchor, total = merged[-1]
            merged[-1] = (anchor, total + count)
        else:
            merged.append((pos, count))
    return merged


def _page_boxes(spans: list[TextSpan]) -> dict[int, tuple[float, float, float, float]]:
    boxes: dict[int, tuple[float, float, float, float]] = {}
    for s in spans:
        x0, y0, x1, y1 = s.bbox
        if s.page in boxes:
            bx0, by0, bx1, by1 = boxes[s.page]
            boxes[s.page] = (min(bx0, x0), min(by0, y0), max(bx1, x1), max(by1, y1))
        else:
            boxes[s.page] = s.bbox
    return boxes


def _by_page_column(spans: list[TextSpan], profile: LayoutProfile) -> dict[tuple[int, int], list[TextSpan]]:
    grouped: dict[tuple[int, int], list[TextSpan]] = {}
    for span in spans:
        grouped.setdefault((span.page, profile.column_of(span.x0)), []).append(span)
    for key in grouped:
        grouped[key].sort(key=lambda s: (-s.baseline, s.x0))
    return grouped


def _reading_key(span: TextSpan, profile: LayoutProfile) -> tuple:
    return (span.page, profile.column_of(span.x0), -span.baseline, span.x0)


def _match_heading_pattern(text: str) -> tuple[str, str, int] | None:
    """Return (label, heading text, depth) when the line looks like a
    section heading; None otherwise."""
    stripped = normalize_ws(text)
    if not stripped or len(stripped) > 80:
        return None
    lowered = stripped.lower().rstrip(".:")
    if lowered in HEADING_KEYWORDS:
        return (stripped.rstrip(".:"), stripped.rstrip(".:"), 1)
    m = _NUMBERED.match(stripped)
    if m:
        title = m.group(2)
        first_alpha = next((c for c in title if c.isalpha()), "")
        if first_alpha and first_alpha.isupper():
            depth = m.group(1).count(".") + 1
            return (m.group(1), title, depth)
    m = _LETTERED.match(stripped)
    if m:
        title = m.group(2)
        first_alpha = next((c for c in title if c.isalpha()), "")
        if first_alpha and first_alpha.isupper():
            return (m.group(1), title, 1)
    return None


def detect_headings(spans: list[TextSpan], profile: LayoutProfile) -> list[Heading]:
    """Headings are pattern matches whose formatting backs them up.

    A candidate must differ from the body font (bigger or bold) or start at
    a column x-position. When the same heading text matches several spans,
    position-and-font verification keeps the strongest candidates and drops
    look-alikes in running prose.
    """
    body_name, body_size = profile.body_font
    candidates: list[Heading] = []
    for span in spans:
        parsed = _match_heading_pattern(span.text)
        if parsed is None:
            continue
        font_differs = span.bold or span.size > body_size + 0.25
        if not (font_differs or profile.at_column_start(span)):
            continue
        label, title, depth = parsed
        candidates.append(Heading(label=label, text=title, depth=depth, span=span))

    by_text: dict[str, list[Heading]] = {}
    for h in candidates:
        by_text.setdefault((h.label + " " + h.text).lower(), []).append(h)
    accepted: list[Heading] = []
    for group in by_text.values():
        if len(group) > 1:
            verified = [
                h
                for h in group
                if (h.span.bold or h.span.size > body_size + 0.25)
                and profile.at_column_start(h.span)
            ]
            group = verified or [group[0]]
        accepted.extend(group)
    accepted.sort(key=lambda h: _reading_key(h.span, profile))
    return accepted


def segment_paragraphs(
    spans: list[TextSpan],
    profile: LayoutProfile,
    headings: list[Heading],
    doc_id: str = "doc",
    thresholds: ExtractionThresholds | None = None,
    estimator=estimate_tokens,
) -> SectionNode:
    """Merge lines into paragraphs inside a section tree.

    Lines merge unless separated by an oversized vertical gap, an indented
    first line after terminal punctuation, or a column/page break with an
    indent. Bibliography sections are segmented per entry instead: "[n]"
    starts for enumerated lists, flush lines for hanging-indent lists.
    Text before the first heading lands in the depth-0 front-matter root.
    """
    thresholds = thresholds or ExtractionThresholds()
    root = SectionNode(label="", heading="", depth=0)
    heading_span_ids = {id(h.span) for h in headings}
    body = [s for s in spans if id(s) not in heading_span_ids]

    events: list[tuple[tuple, str, object]] = []
    for h in headings:
        events.append((_reading_key(h.span, profile), "heading", h))
    for s in body:
        events.append((_reading_key(s, profile), "line", s))
    events.sort(key=lambda e: e[0])

    gap_limit = thresholds.gap_break_factor * profile.median_line_gap
    indent_limit = thresholds.indent_break_factor * profile.median_indent

    def has_indent(span: TextSpan) -> bool:
        return profile.median_indent > 0 and profile.indent_of(span) >= indent_limit

    stack: list[tuple[SectionNode, str]] = [(root, "front")]
    current_lines: list[TextSpan] = []
    paragraphs_out: list[tuple[SectionNode, str, list[TextSpan]]] = []
    in_bibliography = False

    def flush() -> None:
        if current_lines:
            node, path = stack[-1]
            paragraphs_out.append((node, path, list(current_lines)))
            current_lines.clear()

    for _, kind, payload in events:
        if kind == "heading":
            flush()
            h: Heading = payload  # type: ignore[assignment]
            while len(stack) > 1 and stack[-1][0].depth >= h.depth:
                stack.pop()
            parent, parent_path = stack[-1]
            child_index = len(parent.children)
            node = SectionNode(label=h.label, heading=h.text, depth=parent.depth + 1)
            parent.children.append(node)
            path = str(child_index) if parent is root else f"{parent_path}.{child_index}"
            stack.append((node, path))
            in_bibliography = h.text.lower().rstrip(".:") in BIBLIOGRAPHY_KEYWORDS
            continue

        span: TextSpan = payload  # type: ignore[assignment]
        if in_bibliography:
            if _bib_entry_start(span, current_lines, profile):
                flush()
            current_lines.append(span)
            continue
        if current_lines:
            prev = current_lines[-1]
            same_flow = span.page == prev.page and profile.column_of(span.x0) == profile.column_of(prev.x0)
            if same_flow:
                gap = prev.baseline - span.baseline
                breaks = gap > gap_limit or (
                    has_indent(span) and prev.text.rstrip().endswith((".", "?", "!"))
                )
            else:
                breaks = has_indent(span)
            if breaks:
                flush()
        current_lines.append(span)
    flush()

    ordinals: dict[str, int] = {}
    for node, path, lines in paragraphs_out:
        text = lines[0].text
        for line in lines[1:]:
            text = merge_broken_lines(text, line.text)
        text = normalize_ws(text)
        if not text:
            continue
        ordinal = ordinals.get(path, 0)
        ordinals[path] = ordinal + 1
        node.paragraphs.append(
            Paragraph(
                para_id=f"{doc_id}/{path}/{ordinal}",
                text=text,
                page_span=(min(l.page for l in lines), max(l.page for l in lines)),
                markers=[],
                token_estimate=estimator(text),
            )
        )
    return root


def _bib_entry_start(span: TextSpan, current: list[TextSpan], profile: LayoutProfile) -> bool:
    if not current:
        return False
    if _ENUM_ENTRY.match(span.text):
        return True
    if profile.indent_of(span) > 2.0:
        return False  # indented line: hanging-indent continuation
    prev = current[-1]
    if profile.indent_of(prev) > 2.0:
        return True  # flush line after a continuation starts the next entry
    # flush after flush: a completed single-line entry ends with year + period
    return prev.text.rstrip().endswith(".") and _YEAR.search(prev.text) is not None


def find_bibliography_section(root: SectionNode) -> SectionNode | None:
    queue = [root]
    while queue:
        node = queue.pop(0)
        if node.heading.lower().rstrip(".:") in BIBLIOGRAPHY_KEYWORDS:
            return node
        queue.extend(node.children)
    return None


def extract_reference_list(
    root: SectionNode, thresholds: ExtractionThresholds | None = None
) -> tuple[list[ReferenceEntry], str]:
    """Split the bibliography section into entries and vote the style.

    Enumerated entries are keyed by their bracket number, author-year
    entries by (first-author surname, year). Entries that fit neither
    grammar attach to the preceding entry as residue.
    """
    thresholds = thresholds or ExtractionThresholds()
    section = find_bibliography_section(root)
    if section is None or not section.paragraphs:
        return [], UNKNOWN

    chunks: list[str] = []
    for para in section.paragraphs:
        chunks.extend(_split_inline_entries(para.text))

    enum_hits = sum(1 for c in chunks if _ENUM_ENTRY.match(c))
    named_hits = sum(1 for c in chunks if _looks_named(c))
    style = UNKNOWN
    if chunks and enum_hits >= thresholds.style_vote_fraction * len(chunks):
        style = ENUMERATED
    elif chunks and named_hits >= thresholds.style_vote_fraction * len(chunks):
        style = NAMED

    entries: list[ReferenceEntry] = []
    for chunk in chunks:
        m = _ENUM_ENTRY.match(chunk)
        if m:
            entries.append(ReferenceEntry(key=int(m.group(1)), raw=chunk[m.end() :].strip()))
        elif style == NAMED or (style == UNKNOWN and _looks_named(chunk)):
            surname = _first_author_surname(chunk)
            year_match = _YEAR.search(chunk)
            year = int(year_match.group(0)) if year_match else 0
            entries.append(ReferenceEntry(key=((surname,), year), raw=chunk))
        elif entries:
            # unparseable residue: attach to the previous entry
            entries[-1].raw = normalize_ws(entries[-1].raw + " " + chunk)
            entries[-1].normalized = ""
            entries[-1].__post_init__()
        else:
            entries.append(ReferenceEntry(key=(("unknown",), 0), raw=chunk))
    return entries, style


def _split_inline_entries(text: str) -> list[str]:
    """Split a merged run of enumerated entries on its "[n]" tags."""
    starts = [
        m.start()
        for m in re.finditer(r"\[\d+\]\s", text)
        if m.start() == 0 or text[m.start() - 1] == " "
    ]
    if not starts:
        return [text]
    bounds = ([0] if starts[0] != 0 else []) + starts + [len(text)]
    pieces = [text[a:b].strip() for a, b in zip(bounds, bounds[1:])]
    return [p for p in pieces if p]


def _looks_named(chunk: str) -> bool:
    if not chunk or not chunk[0].isupper():
        return False
    return _YEAR.search(chunk) is not None


def _first_author_surname(chunk: str) -> str:
    head = re.split(r",| et al| and |\(", chunk, maxsplit=1)[0]
    words = re.findall(r"[A-Za-z][A-Za-z'-]+", head)
    return words[-1] if words else "unknown"


def extract_document(
    pdf_bytes: bytes,
    doc_id: str,
    origin: str = "",
    thresholds: ExtractionThresholds | None = None,
    estimator=estimate_tokens,
    debug: dict | None = None,
) -> SourceDocument:
    """Full extraction pipeline for one PDF."""
    thresholds = thresholds or ExtractionThresholds()
    runs, page_count = read_text_runs(pdf_bytes)
    spans = spans_from_runs(runs)
    if not spans:
        raise UnsupportedDocumentError("no text lines after grouping")
    profile = analyze_layout(spans, thresholds)

    title, title_ids = _take_title(spans, profile)
    spans = [s for s in spans if id(s) not in title_ids]
    headings = detect_headings(spans, profile)
    spans, dropped = _drop_furniture(spans, profile, headings)

    root = segment_paragraphs(spans, profile, headings, doc_id, thresholds, estimator)
    references, notation_style = extract_reference_list(root, thresholds)
    bib_section = find_bibliography_section(root)
    if bib_section is not None:
        bib_section.paragraphs = []  # entries live in doc.references

    doc = SourceDocument(
        doc_id=doc_id,
        title=title or doc_id,
        origin=origin,
        notation_style=notation_style,
        root=root,
        references=references,
        page_count=page_count,
    )
    for para in doc.iter_paragraphs():
        markers = parse_citations(para.text, notation_style)
        resolve_markers(markers, references)
        para.markers = markers

    if debug is not None:
        debug["profile"] = {
            "column_count": profile.column_count,
            "body_font": list(profile.body_font),
            "column_xs": profile.column_xs,
            "median_line_gap": profile.median_line_gap,
            "median_indent": profile.median_indent,
        }
        debug["headings"] = [
            {"label": h.label, "text": h.text, "depth": h.depth, "page": h.span.page}
            for h in headings
        ]
        debug["dropped_spans"] = [{"text": s.text, "page": s.page} for s in dropped]
    return doc


def _take_title(spans: list[TextSpan], profile: LayoutProfile) -> tuple[str, set[int]]:
    body_size = profile.body_font[1]
    first_page = [s for s in spans if s.page == min(x.page for x in spans)]
    big = [s for s in first_page if s.size >= body_size * 1.3 and _match_heading_pattern(s.text) is None]
    if not big:
        return "", set()
    top_size = max(s.size for s in big)
    title_spans = [s for s in big if abs(s.size - top_size) < 0.5]
    title_spans.sort(key=lambda s: -s.baseline)
    # consecutive lines of the same outsized font form the title block
    block = [title_spans[0]]
    for s in title_spans[1:]:
        if block[-1].baseline - s.baseline <= 2.0 * top_size:
            block.append(s)
    return normalize_ws(" ".join(s.text for s in block)), {id(s) for s in block}


def _drop_furniture(
    spans: list[TextSpan], profile: LayoutProfile, headings: list[Heading]
) -> tuple[list[TextSpan], list[TextSpan]]:
    """Drop decorated spans floating off the column grid (captions, labels)."""
    heading_ids = {id(h.span) for h in headings}
    kept: list[TextSpan] = []
    dropped: list[TextSpan] = []
    for s in spans:
        if id(s) in heading_ids or (s.font, s.size) == profile.body_font:
            kept.append(s)
            continue
        near_grid = any(abs(s.x0 - cx) <= 24.0 for cx in profile.column_xs)
        (kept if near_grid else dropped).append(s)
    return kept, dropped
