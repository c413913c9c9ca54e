"""Scripted backends for offline runs and deterministic tests.

MockBackend maps prompt patterns to scripted replies and produces
hash-seeded embeddings, so every downstream module can be exercised against
an exact oracle without network access. DemoBackend layers simple heuristics
on top so the full pipeline (ingest, ask, eval, web UI) runs end to end with
plausible output and zero external calls.
"""

from __future__ import annotations

import hashlib
import math
import random
import re
import threading
from typing import Callable

from . import prompts
from .gateway import GenerationParams
from .textutils import split_sentences

Reply = "str | Exception | Callable[[str], str]"


class MockBackend:
    """Pattern-scripted completion backend.

    Rules are checked in registration order; the first whose pattern is a
    substring of (or regex match in) the prompt wins. A rule scripted with
    several replies serves them one call at a time, repeating the last.
    Exception replies are raised, enabling retry-path tests.
    """

    def __init__(self, default_reply: str = "OK", embedding_dim: int = 16):
        self.default_reply = default_reply
        self.embedding_dim = embedding_dim
        self.rules: list[tuple[str | re.Pattern, list]] = []
        self.embedding_overrides: dict[str, list[float]] = {}
        self.call_history: list[str] = []
        self._lock = threading.Lock()

    def script(self, pattern: str | re.Pattern, *replies) -> "MockBackend":
        self.rules.append((pattern, list(replies)))
        return self

    def script_embedding(self, text: str, vector: list[float]) -> "MockBackend":
        self.embedding_overrides[text] = vector
        return self

    def _match(self, prompt: str):
        for pattern, replies in self.rules:
            if isinstance(pattern, re.Pattern):
                if pattern.search(prompt):
                    return replies
            elif pattern in prompt:
                return replies
        return None

    def complete_text(self, prompt: str, params: GenerationParams) -> str:
        with self._lock:
            self.call_history.append(prompt)
            replies = self._match(prompt)
            if replies is None:
                reply = self.default_reply
            else:
                reply = replies.pop(0) if len(replies) > 1 else replies[0]
        if isinstance(reply, Exception):
            raise reply
        if callable(reply):
            return reply(prompt)
        return reply

    def embed_text(self, text: str) -> list[float]:
        if text in self.embedding_overrides:
            return list(self.embedding_overrides[text])
        return hash_embedding(text, self.embedding_dim)


def hash_embedding(text: str, dim: int = 16) -> list[float]:
    """Deterministic unit vector seeded by the text's digest."""
    seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
    rng = random.Random(seed)
    vector = [rng.gauss(0.0, 1.0) for _ in range(dim)]
    norm = math.sqrt(sum(v * v for v in vector)) or 1.0
    return [v / norm for v in vector]


_SENTINEL = re.compile(r"\[CTX:[^\]]+\]")


def sentinel_echo(prompt: str) -> str:
    """Reply with every [CTX:...] sentinel in the prompt, first-seen order.

    Used as a scripted synthesis rule: the accumulated draft then provably
    contains the sentinel of every context paragraph it was fed.
    """
    seen: list[str] = []
    for match in _SENTINEL.findall(prompt):
        if match not in seen:
            seen.append(match)
    return " ".join(seen) if seen else "no sentinels"


def _extract_field(prompt: str, label: str, end_labels: tuple[str, ...]) -> str:
    start = prompt.find(label)
    if start < 0:
        return ""
    start += len(label)
    end = len(prompt)
    for other in end_labels:
        pos = prompt.find(other, start)
        if 0 <= pos < end:
            end = pos
    return prompt[start:end].strip().strip(":").strip()


class DemoBackend(MockBackend):
    """Heuristic scripted backend for offline end-to-end runs.

    Recognizes each pipeline template by its opening line and produces
    deterministic, content-derived replies: summaries are leading sentences,
    synthesis echoes source sentences verbatim (so line alignment finds exact
    matches), and judgments are keyword-overlap votes.
    """

    def __init__(self) -> None:
        super().__init__()
        first = lambda t: t.splitlines()[0]
        self.script(first(prompts.RELEVANCE_JUDGE), self._judge_relevance)
        self.script(first(prompts.SUMMARIZE_PARAGRAPH), self._summarize)
        self.script("**Existing Synthesis**", self._refine)
        self.script("**Paragraph**", self._initial)
        self.script(first(prompts.LINE_ALIGNMENT), self._align)
        self.script(first(prompts.LINE_PAIR_JUDGE), self._pair_judge)
        self.script(first(prompts.STATEMENT_EXTRACTION), self._statements)
        self.script("questions that this answer would directly and completely answer", self._pseudo_questions)
        self.script(first(prompts.DATASET_GENERATION), self._dataset)
        self.script("Respond with 'True' or 'False'", self._overlap_judge)

    @staticmethod
    def _content_words(text: str) -> set[str]:
        return {w for w in re.findall(r"[a-z0-9]{4,}", text.lower())}

    def _judge_relevance(self, prompt: str) -> str:
        paragraph = _extract_field(prompt, "Paragraph:", ("Query:",))
        query = _extract_field(prompt, "Query:", ("Instructions:",))
        overlap = self._content_words(paragraph) & self._content_words(query)
        return "True" if overlap else "False"

    def _summarize(self, prompt: str) -> str:
        paragraph = _extract_field(prompt, "Paragraph:", ())
        sentences = split_sentences(paragraph)
        return " ".join(sentences[:2]) if sentences else paragraph

    def _initial(self, prompt: str) -> str:
        paragraph = _extract_field(prompt, "**Paragraph**:", ("**Query**:",))
        sentences = split_sentences(paragraph)
        return " ".join(sentences[:2]) if sentences else paragraph

    def _refine(self, prompt: str) -> str:
        existing = _extract_field(prompt, "**Existing Synthesis**:", ("**New Paragraph**:", "**Query**:"))
        paragraph = _extract_field(prompt, "**New Paragraph**:", ("**Query**:",))
        if not paragraph:  # condensation pass
            sentences = split_sentences(existing)
            return " ".join(sentences[: max(1, len(sentences) // 2)])
        addition = " ".join(split_sentences(paragraph)[:2])
        return (existing + " " + addition).strip()

    def _align(self, prompt: str) -> str:
        answer = _extract_field(prompt, "Synthesized result:", ("Source Paragraphs:",))
        context = _extract_field(prompt, "Source Paragraphs:", ("Just provide",))
        context_sentences = split_sentences(context)
        lines = []
        for sentence in split_sentences(answer):
            best = next((c for c in context_sentences if c.rstrip(".") == sentence.rstrip(".")), None)
            if best is None:
                words = self._content_words(sentence)
                best = next(
                    (c for c in context_sentences if len(words & self._content_words(c)) >= max(2, len(words) // 2)),
                    None,
                )
            if best is not None:
                lines.append(f"Synthesized Line: {sentence} Corresponding Source Line: {best}")
        return "\n".join(lines) if lines else "Synthesized Line: none Corresponding Source Line: none"

    def _pair_judge(self, prompt: str) -> str:
        a = _extract_field(prompt, "Synthesized Line:", ("Source Line:",))
        b = _extract_field(prompt, "Source Line:", ("Respond with",))
        return "True" if a.rstrip(".") == b.rstrip(".") else "False"

    def _statements(self, prompt: str) -> str:
        answer = _extract_field(prompt, "Answer:", ())
        return "\n".join(f"{i}. {s}" for i, s in enumerate(split_sentences(answer), start=1))

    def _pseudo_questions(self, prompt: str) -> str:
        answer = _extract_field(prompt, "Answer:", ())
        topics = sorted(self._content_words(answer))[:3] or ["this"]
        return "\n".join(f"What does the text say about {t}?" for t in topics)

    def _dataset(self, prompt: str) -> str:
        source = _extract_field(prompt, "Documents:", ())
        sentences = split_sentences(source)[:5] or ["No content provided."]
        items = []
        for i, sentence in enumerate(sentences, start=1):
            topic = " ".join(sorted(self._content_words(sentence))[:4]) or "the material"
            items.append(
                {
                    "question": f"Question {i}: what is reported about {topic}?",
                    "context": [sentence],
                    "ground_truth": sentence,
                }
            )
        return "data = " + repr(items)

    def _overlap_judge(self, prompt: str) -> str:
        halves = [
            _extract_field(prompt, label, ("Instructions:",))
            for label in ("Context:", "Statement:", "Question:", "Sentence:")
        ]
        filled = [h for h in halves if h]
        if len(filled) < 2:
            return "True"
        overlap = self._content_words(filled[0]) & self._content_words(filled[1])
        return "True" if overlap else "False"
