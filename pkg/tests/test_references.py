"""Citation grammar, resolution, bundles, and line alignment."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citeweave.corpus import CitationMarker, ReferenceEntry
from citeweave.errors import AlignmentParseError
from citeweave.gateway import GenerationParams
from citeweave.mock import MockBackend
from citeweave.references import (
    LineAlignment,
    align_lines,
    coarse_references,
    fine_references,
    parse_citations,
    render_enumerated_keys,
    resolve_markers,
)
from citeweave.retriever import RetrievedContext

from conftest import make_corpus, make_document, make_gateway
from fixtures import SPEECH_BIBLIOGRAPHY


class TestParseCitations:
    def test_range_form(self):
        markers = parse_citations("as shown in [2-5] earlier", "enumerated")
        assert len(markers) == 1
        assert markers[0].resolved_keys == [2, 3, 4, 5]
        assert markers[0].raw == "[2-5]"
        assert markers[0].span == (12, 17)

    def test_list_form(self):
        (marker,) = parse_citations("compare [3,9] here", "enumerated")
        assert marker.resolved_keys == [3, 9]

    def test_singleton(self):
        (marker,) = parse_citations("see [1].", "enumerated")
        assert marker.resolved_keys == [1]

    def test_named_parenthetical(self):
        (marker,) = parse_citations("improves over (Jia et al., 2021) baselines", "named")
        assert marker.style == "named"
        assert marker.resolved_keys == [(("Jia",), 2021)]

    def test_named_prose_form(self):
        (marker,) = parse_citations("Jia et al. (2021) showed this.", "named")
        assert marker.resolved_keys == [(("Jia",), 2021)]

    def test_named_multiple_in_one_parenthetical(self):
        (marker,) = parse_citations("(Lee, 2019; Kim and Park, 2020)", "named")
        assert marker.resolved_keys == [(("Lee",), 2019), (("Kim", "Park"), 2020)]

    def test_mixed_list_and_range(self):
        (marker,) = parse_citations("[1, 8, 10-12]", "enumerated")
        assert marker.resolved_keys == [1, 8, 10, 11, 12]

    def test_en_dash_range(self):
        (marker,) = parse_citations("[2–5]", "enumerated")
        assert marker.resolved_keys == [2, 3, 4, 5]

    def test_unknown_style_tries_both(self):
        markers = parse_citations("see [2] and (Jia et al., 2021)", "unknown")
        assert {m.style for m in markers} == {"enumerated", "named"}

    def test_plain_text_yields_nothing(self):
        assert parse_citations("no citations here at all", "unknown") == []

    def test_spans_non_overlapping_and_ordered(self):
        markers = parse_citations("[1] then [2-3] then [9]", "enumerated")
        spans = [m.span for m in markers]
        assert spans == sorted(spans)
        for (a, b), (c, d) in zip(spans, spans[1:]):
            assert b <= c


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.one_of(
            st.integers(1, 50),
            st.tuples(st.integers(1, 50), st.integers(1, 50)),
        ),
        min_size=1,
        max_size=6,
    )
)
def test_parse_render_round_trip_preserves_key_sets(pieces):
    expected: set[int] = set()
    rendered_pieces = []
    for piece in pieces:
        if isinstance(piece, tuple):
            a, b = sorted(piece)
            expected.update(range(a, b + 1))
            rendered_pieces.append(f"{a}-{b}" if a != b else str(a))
        else:
            expected.add(piece)
            rendered_pieces.append(str(piece))
    marker_text = "[" + ",".join(rendered_pieces) + "]"
    (marker,) = parse_citations(marker_text, "enumerated")
    assert set(marker.resolved_keys) == expected
    # canonical re-render parses back to the same key set
    (again,) = parse_citations(render_enumerated_keys(marker.resolved_keys), "enumerated")
    assert set(again.resolved_keys) == expected


def test_render_collapses_consecutive_runs():
    assert render_enumerated_keys([2, 3, 4, 5]) == "[2-5]"
    assert render_enumerated_keys([3, 9]) == "[3, 9]"
    assert render_enumerated_keys([1, 8, 10, 11, 12]) == "[1, 8, 10-12]"
    assert render_enumerated_keys([7]) == "[7]"


def _speech_entries() -> list[ReferenceEntry]:
    return [ReferenceEntry(key=i, raw=raw) for i, raw in enumerate(SPEECH_BIBLIOGRAPHY, start=1)]


class TestResolveMarkers:
    def test_enumerated_direct_lookup(self):
        entries = _speech_entries()
        (marker,) = parse_citations("[4]", "enumerated")
        resolve_markers([marker], entries)
        assert marker.resolved_keys == [4] and not marker.unresolved

    def test_enumerated_missing_key_unresolved(self):
        entries = _speech_entries()
        (marker,) = parse_citations("[99]", "enumerated")
        resolve_markers([marker], entries)
        assert marker.unresolved and marker.resolved_keys == []

    def test_named_resolves_to_unique_surname_year_entry(self):
        entries = _speech_entries()
        (marker,) = parse_citations("(Jia et al., 2021)", "named")
        resolve_markers([marker], entries)
        # only the Translatotron entry carries both Jia and 2021
        assert marker.resolved_keys == [5] and not marker.ambiguous

    def test_named_ambiguity_flagged_earliest_wins(self):
        entries = [
            ReferenceEntry(key=1, raw="A. Novak et al. First system. Venue, 2020."),
            ReferenceEntry(key=2, raw="B. Novak et al. Second system. Venue, 2020."),
        ]
        (marker,) = parse_citations("(Novak et al., 2020)", "named")
        resolve_markers([marker], entries)
        assert marker.resolved_keys == [1]
        assert marker.ambiguous

    def test_named_no_match_unresolved(self):
        (marker,) = parse_citations("(Zzyzx et al., 1999)", "named")
        resolve_markers([marker], _speech_entries())
        assert marker.unresolved

    def test_partial_enumerated_resolution(self):
        entries = [ReferenceEntry(key=k, raw=f"entry {k}") for k in (1, 2, 3)]
        (marker,) = parse_citations("[2,9]", "enumerated")
        resolve_markers([marker], entries)
        assert marker.resolved_keys == [2] and not marker.unresolved


def _context(doc, index=0, rank=0):
    para = list(doc.iter_paragraphs())[index]
    return RetrievedContext(para_id=para.para_id, paragraph=para, rank=rank)


def _attach_markers(doc):
    for para in doc.iter_paragraphs():
        markers = parse_citations(para.text, doc.notation_style)
        resolve_markers(markers, doc.references)
        para.markers = markers


class TestCoarseReferences:
    def _fixture(self):
        doc_a = make_document(
            "docA",
            ["First uses [4] here.", "Second uses [7] there."],
            references=[ReferenceEntry(key=k, raw=f"Entry A{k}. Venue, 200{k}.") for k in range(1, 9)],
            title="Document A",
        )
        doc_b = make_document(
            "docB",
            ["Only context cites [2]."],
            references=[ReferenceEntry(key=k, raw=f"Entry B{k}. Venue, 199{k}.") for k in range(1, 4)],
            title="Document B",
        )
        _attach_markers(doc_a)
        _attach_markers(doc_b)
        corpus = make_corpus([doc_a, doc_b])
        contexts = [
            _context(doc_a, 0, 0),
            _context(doc_a, 1, 1),
            _context(doc_b, 0, 2),
        ]
        return corpus, contexts

    def test_primary_then_secondary_numbering(self):
        corpus, contexts = self._fixture()
        bundle = coarse_references(contexts, corpus)
        assert [(p.number, p.doc_id) for p in bundle.primary] == [(1, "docA"), (2, "docB")]
        assert [(s.number, s.raw) for s in bundle.secondary] == [
            (3, "Entry A4. Venue, 2004."),
            (4, "Entry A7. Venue, 2007."),
            (5, "Entry B2. Venue, 1992."),
        ]

    def test_contexts_without_markers_yield_primaries_only(self):
        doc = make_document("docC", ["No citations in this text."], title="Document C")
        corpus = make_corpus([doc])
        bundle = coarse_references([_context(doc)], corpus)
        assert len(bundle.primary) == 1 and bundle.secondary == []

    def test_same_entry_cited_twice_appears_once(self):
        doc = make_document(
            "docD",
            ["Cites [1] early.", "Cites [1] again."],
            references=[ReferenceEntry(key=1, raw="Shared entry. Venue, 2001.")],
        )
        _attach_markers(doc)
        corpus = make_corpus([doc])
        bundle = coarse_references([_context(doc, 0, 0), _context(doc, 1, 1)], corpus)
        assert len(bundle.secondary) == 1

    def test_unresolved_markers_in_side_channel_not_bundle(self):
        doc = make_document(
            "docE",
            ["Cites [9] which is missing."],
            references=[ReferenceEntry(key=1, raw="Only entry. Venue, 2001.")],
        )
        _attach_markers(doc)
        corpus = make_corpus([doc])
        bundle = coarse_references([_context(doc)], corpus)
        assert bundle.secondary == []
        assert len(bundle.unresolved) == 1 and bundle.unresolved[0].raw == "[9]"

    def test_numbering_contiguous(self):
        corpus, contexts = self._fixture()
        bundle = coarse_references(contexts, corpus)
        numbers = [p.number for p in bundle.primary] + [s.number for s in bundle.secondary]
        assert numbers == list(range(1, len(numbers) + 1))


class TestAlignLines:
    def _doc_contexts(self):
        doc = make_document(
            "docX",
            [
                "Direct systems cut latency by half [1]. They avoid staged decoding.",
                "Training without transcripts stays feasible [2]. Coverage grows with data.",
            ],
            references=[
                ReferenceEntry(key=1, raw="Entry one. Venue, 2001."),
                ReferenceEntry(key=2, raw="Entry two. Venue, 2002."),
            ],
        )
        _attach_markers(doc)
        corpus = make_corpus([doc])
        return doc, corpus, [_context(doc, 0, 0), _context(doc, 1, 1)]

    def test_two_exact_pairs(self, params):
        doc, corpus, contexts = self._doc_contexts()
        reply = (
            "Synthesized Line: Latency falls sharply. "
            "Corresponding Source Line: Direct systems cut latency by half [1].\n"
            "Synthesized Line: Transcripts are optional. "
            "Corresponding Source Line: Training without transcripts stays feasible [2].\n"
        )
        gw, _ = make_gateway(MockBackend().script("Synthesized result", reply))
        answer = "Latency falls sharply. Transcripts are optional."
        alignments = align_lines(answer, contexts, gw, params)
        assert [a.match_method for a in alignments] == ["exact", "exact"]
        assert [a.para_id for a in alignments] == ["docX/0/0", "docX/0/1"]

    def test_extra_whitespace_matches_normalized(self, params):
        doc, corpus, contexts = self._doc_contexts()
        reply = (
            "Synthesized Line: Latency falls sharply. "
            "Corresponding Source Line: Direct systems   cut latency by  half [1].\n"
        )
        gw, _ = make_gateway(MockBackend().script("Synthesized result", reply))
        alignments = align_lines("Latency falls sharply.", contexts, gw, params)
        assert alignments[0].match_method == "normalized"
        assert alignments[0].para_id == "docX/0/0"

    def test_invented_source_line_unattributed(self, params):
        doc, corpus, contexts = self._doc_contexts()
        reply = (
            "Synthesized Line: Latency falls sharply. "
            "Corresponding Source Line: Completely unrelated invented words about gardening tulips.\n"
        )
        gw, _ = make_gateway(MockBackend().script("Synthesized result", reply))
        alignments = align_lines("Latency falls sharply.", contexts, gw, params)
        assert alignments[0].match_method == "unattributed"

    def test_ngram_overlap_match(self, params):
        doc, corpus, contexts = self._doc_contexts()
        reply = (
            "Synthesized Line: Latency falls sharply. "
            "Corresponding Source Line: Direct systems cut latency by half actually.\n"
        )
        gw, _ = make_gateway(MockBackend().script("Synthesized result", reply))
        alignments = align_lines("Latency falls sharply.", contexts, gw, params)
        assert alignments[0].match_method == "ngram_overlap"
        assert alignments[0].para_id == "docX/0/0"

    def test_wholly_unparseable_reply_raises(self, params):
        doc, corpus, contexts = self._doc_contexts()
        gw, _ = make_gateway(MockBackend().script("Synthesized result", "I cannot help with that."))
        with pytest.raises(AlignmentParseError) as err:
            align_lines("Latency falls sharply.", contexts, gw, params)
        assert "cannot help" in err.value.raw_reply

    def test_answer_line_missing_from_reply_unattributed(self, params):
        doc, corpus, contexts = self._doc_contexts()
        reply = (
            "Synthesized Line: Latency falls sharply. "
            "Corresponding Source Line: Direct systems cut latency by half [1].\n"
        )
        gw, _ = make_gateway(MockBackend().script("Synthesized result", reply))
        alignments = align_lines("Latency falls sharply. A second unmatched line.", contexts, gw, params)
        assert alignments[1].match_method == "unattributed"

    def test_per_pair_mode_counts_p_times_q_calls(self, params):
        doc, corpus, contexts = self._doc_contexts()
        backend = MockBackend(default_reply="False").script(
            "Source Line: Direct systems cut latency by half [1].", "True"
        )
        gw, _ = make_gateway(backend)
        answer = "Latency falls sharply. Another line here."
        alignments = align_lines(answer, contexts, gw, params, mode="per_pair")
        answer_lines = 2
        context_lines = 4
        assert gw.ledger.stage_count("align") == answer_lines * context_lines
        assert alignments[0].para_id == "docX/0/0"


class TestFineReferences:
    def _three_doc_fixture(self):
        """Three source documents; the sample-structure bundle: primaries
        numbered 1..3, ten secondaries numbered 4..13."""
        entries_a = [ReferenceEntry(key=k, raw=f"Alpha entry {k}. Venue, 20{k:02d}.") for k in range(1, 7)]
        entries_b = [ReferenceEntry(key=k, raw=f"Beta entry {k}. Venue, 19{90 + k}.") for k in range(1, 4)]
        entries_c = [ReferenceEntry(key=k, raw=f"Gamma entry {k}. Venue, 201{k}.") for k in range(1, 2)]
        doc_a = make_document(
            "srcA",
            ["Units reduce decoding cost [1-6]. Extra sentence without citation."],
            references=entries_a,
            title="Source Alpha",
        )
        doc_b = make_document(
            "srcB",
            ["Cascades keep accuracy high [1-3]. Another remark."],
            references=entries_b,
            title="Source Beta",
        )
        doc_c = make_document(
            "srcC",
            ["Unwritten languages benefit most [1]. Trailing note."],
            references=entries_c,
            title="Source Gamma",
        )
        for doc in (doc_a, doc_b, doc_c):
            _attach_markers(doc)
        corpus = make_corpus([doc_a, doc_b, doc_c])
        contexts = [_context(doc_a, 0, 0), _context(doc_b, 0, 1), _context(doc_c, 0, 2)]
        return corpus, contexts

    def _echo_alignment_reply(self, contexts):
        lines = []
        for context in contexts:
            first = context.paragraph.text.split(". ")[0] + "."
            lines.append(
                f"Synthesized Line: {first} Corresponding Source Line: {first}"
            )
        return "\n".join(lines)

    def test_sample_structure_three_primaries_then_secondaries(self, params):
        corpus, contexts = self._three_doc_fixture()
        answer = " ".join(c.paragraph.text.split(". ")[0] + "." for c in contexts)
        reply = self._echo_alignment_reply(contexts)
        gw, _ = make_gateway(MockBackend().script("Synthesized result", reply))
        annotated, bundle = fine_references(answer, contexts, corpus, gw, params)
        assert [p.number for p in bundle.primary] == [1, 2, 3]
        assert [p.doc_id for p in bundle.primary] == ["srcA", "srcB", "srcC"]
        assert [s.number for s in bundle.secondary] == list(range(4, 14))
        assert len(bundle.primary) + len(bundle.secondary) == 13
        assert "[1, 4-9]" in annotated  # primary 1 plus the six Alpha entries

    def test_fine_secondary_subset_of_coarse(self, params):
        corpus, contexts = self._three_doc_fixture()
        answer = contexts[0].paragraph.text.split(". ")[0] + "."
        reply = (
            f"Synthesized Line: {answer} Corresponding Source Line: {answer}"
        )
        gw, _ = make_gateway(MockBackend().script("Synthesized result", reply))
        _, fine = fine_references(answer, contexts, corpus, gw, params)
        coarse = coarse_references(contexts, corpus)
        fine_raws = {s.raw for s in fine.secondary}
        coarse_raws = {s.raw for s in coarse.secondary}
        assert fine_raws <= coarse_raws

    def test_wholly_unattributed_answer(self, params):
        corpus, contexts = self._three_doc_fixture()
        gw, _ = make_gateway(
            MockBackend().script(
                "Synthesized result",
                "Synthesized Line: nothing Corresponding Source Line: totally unrelated gardening",
            )
        )
        answer = "A claim the sources never made."
        annotated, bundle = fine_references(answer, contexts, corpus, gw, params)
        assert annotated == answer
        assert len(bundle.primary) == 3 and bundle.secondary == []

    def test_consecutive_numbers_render_as_range(self, params):
        corpus, contexts = self._three_doc_fixture()
        answer = contexts[1].paragraph.text.split(". ")[0] + "."
        reply = f"Synthesized Line: {answer} Corresponding Source Line: {answer}"
        gw, _ = make_gateway(MockBackend().script("Synthesized result", reply))
        annotated, bundle = fine_references(answer, [contexts[1]], corpus, gw, params)
        # one primary plus three consecutive secondaries: 1 then 2,3,4
        assert "[1-4]" in annotated

    def test_paragraph_level_fallback_when_line_has_no_marker(self, params):
        corpus, contexts = self._three_doc_fixture()
        bare_line = "Extra sentence without citation."
        reply = f"Synthesized Line: {bare_line} Corresponding Source Line: {bare_line}"
        gw, _ = make_gateway(MockBackend().script("Synthesized result", reply))
        annotated, bundle = fine_references(bare_line, [contexts[0]], corpus, gw, params)
        # falls back to the paragraph markers: entries 1-6 of source Alpha
        assert len(bundle.secondary) == 6


def test_line_alignment_dataclass_invariant():
    attributed = LineAlignment("a", 0, "s", "doc/0/0", "exact", (0, 1))
    unattributed = LineAlignment("a", 0, "", None, "unattributed")
    assert (attributed.para_id is not None) == (attributed.match_method != "unattributed")
    assert (unattributed.para_id is not None) == (unattributed.match_method != "unattributed")
