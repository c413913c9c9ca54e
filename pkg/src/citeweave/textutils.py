"""Text helpers shared by the synthesizer, reference extractor, and metrics."""

from __future__ import annotations

import re

# Period-terminated tokens that do not end a sentence.
_ABBREVIATIONS = (
    "al",  # et al.
    "fig",
    "figs",
    "eq",
    "eqs",
    "sec",
    "ref",
    "refs",
    "no",
    "vol",
    "pp",
    "cf",
    "vs",
    "e.g",
    "i.e",
    "etc",
    "dr",
    "prof",
    "mr",
    "ms",
    "st",
)

_SENTENCE_END = re.compile(r"([.!?])(\s+)(?=[A-Z0-9\(\[\"'])")
_WS = re.compile(r"\s+")


def normalize_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


def _ends_with_abbreviation(fragment: str) -> bool:
    tail = fragment.rstrip()
    if not tail.endswith("."):
        return False
    word = tail[:-1].rsplit(None, 1)[-1] if tail[:-1].strip() else ""
    word = word.lstrip("([\"'").lower()
    if word in _ABBREVIATIONS:
        return True
    # Single capital initial ("A.", "W.") is an author initial, not an end.
    if len(word) == 1 and word.isalpha():
        return True
    return False


def split_sentences(text: str) -> list[str]:
    """Split on ./?/! followed by whitespace and an uppercase-ish start.

    Keeps abbreviations such as "et al.", "Fig.", "Eq." attached to their
    sentence. Returns stripped, non-empty sentences.
    """
    text = normalize_ws(text)
    if not text:
        return []
    sentences: list[str] = []
    start = 0
    for match in _SENTENCE_END.finditer(text):
        candidate = text[start : match.end(1)]
        if _ends_with_abbreviation(candidate):
            continue
        sentences.append(candidate.strip())
        start = match.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return [s for s in sentences if s]


def word_ngrams(text: str, n: int = 3) -> set[tuple[str, ...]]:
    words = re.findall(r"[a-z0-9]+", text.lower())
    if len(words) < n:
        return {tuple(words)} if words else set()
    return {tuple(words[i : i + n]) for i in range(len(words) - n + 1)}


def ngram_jaccard(a: str, b: str, n: int = 3) -> float:
    ga, gb = word_ngrams(a, n), word_ngrams(b, n)
    if not ga or not gb:
        return 0.0
    return len(ga & gb) / len(ga | gb)


def normalized_key(text: str) -> str:
    """Lowercased, whitespace-collapsed form used for dedup comparisons."""
    return normalize_ws(text).lower()


def merge_broken_lines(prev: str, nxt: str) -> str:
    """Merge two consecutive lines of one paragraph.

    A trailing hyphen is dropped only when both halves of the broken word are
    plain lowercase letters; hyphenated compounds keep their hyphen. Lines
    without a break hyphen are joined with a single space.
    """
    if not prev.endswith("-") or not nxt:
        return (prev + " " + nxt).strip()
    head = prev[:-1].rsplit(None, 1)[-1] if prev[:-1].strip() else ""
    first_core = nxt.split(None, 1)[0].rstrip(".,;:!?)")
    if head.isalpha() and head.islower() and first_core.isalpha() and first_core.islower():
        return prev[:-1] + nxt
    return prev + nxt  # keep hyphen, no space
