"""Metric arithmetic with scripted judges and embeddings."""

import itertools
import random
import re

import pytest

from citeweave.errors import DatasetGenerationError, EmptyReportError, MetricDomainError
from citeweave.evaluation import (
    EvalItem,
    answer_correctness,
    answer_relevancy,
    answer_similarity,
    average_precision,
    context_precision,
    context_recall,
    context_relevancy,
    evaluate_run,
    faithfulness,
    generate_dataset,
    load_dataset,
    ragas_score,
)
from citeweave.mock import MockBackend

from conftest import make_corpus, make_document, make_gateway

EXTRACT = "Break the following answer"
SUPPORT = "Determine whether the statement can be directly inferred"
PSEUDO = "questions that this answer would directly and completely answer"
CTX_REL = "Determine whether the context is relevant"
SENT_REL = "Determine whether the sentence is relevant"
ATTRIB = "can be attributed to the context"


def _statements_reply(n: int) -> str:
    return "\n".join(f"{i}. Statement number {i} stands." for i in range(1, n + 1))


class TestFaithfulness:
    def test_three_of_four_supported(self, params):
        backend = MockBackend().script(EXTRACT, _statements_reply(4))
        backend.script(SUPPORT, "True", "True", "True", "False")
        gw, _ = make_gateway(backend)
        breakdown = faithfulness("answer text", ["context"], gw, params)
        assert breakdown.score == 3 / 4
        assert breakdown.total_statements == 4
        assert breakdown.supported_count == 3

    def test_all_supported(self, params):
        backend = MockBackend().script(EXTRACT, _statements_reply(3)).script(SUPPORT, "True")
        gw, _ = make_gateway(backend)
        assert faithfulness("answer", ["ctx"], gw, params).score == 1.0

    def test_scripted_pattern_tftff(self, params):
        backend = MockBackend().script(EXTRACT, _statements_reply(5))
        backend.script(SUPPORT, "True", "False", "True", "False", "False")
        gw, _ = make_gateway(backend)
        assert faithfulness("answer", ["ctx"], gw, params).score == 2 / 5

    def test_no_statements_undefined(self, params):
        backend = MockBackend().script(EXTRACT, "")
        gw, _ = make_gateway(backend)
        assert faithfulness("answer", ["ctx"], gw, params).score is None


class TestAnswerRelevancy:
    def test_identical_pseudo_questions(self, params):
        backend = MockBackend().script(PSEUDO, "the question\nthe question\nthe question")
        gw, _ = make_gateway(backend)
        score, sims = answer_relevancy("the question", "answer", gw, params)
        assert score == pytest.approx(1.0)
        assert len(sims) == 3

    def test_scripted_cosines_mean(self, params):
        backend = MockBackend().script(PSEUDO, "p one\np two\np three")
        backend.script_embedding("the question", [1.0, 0.0])
        for text, c in (("p one", 0.9), ("p two", 0.8), ("p three", 0.7)):
            backend.script_embedding(text, [c, (1 - c * c) ** 0.5])
        gw, _ = make_gateway(backend)
        score, _ = answer_relevancy("the question", "answer", gw, params)
        assert score == pytest.approx(0.8)

    def test_orthogonal_embeddings_zero(self, params):
        backend = MockBackend().script(PSEUDO, "p one")
        backend.script_embedding("the question", [1.0, 0.0])
        backend.script_embedding("p one", [0.0, 1.0])
        gw, _ = make_gateway(backend)
        score, _ = answer_relevancy("the question", "answer", gw, params)
        assert score == 0.0

    def test_no_pseudo_questions_undefined(self, params):
        backend = MockBackend().script(PSEUDO, "")
        gw, _ = make_gateway(backend)
        score, sims = answer_relevancy("q", "a", gw, params)
        assert score is None and sims == []


class TestContextPrecision:
    def test_verdicts_101(self, params):
        backend = MockBackend().script(CTX_REL, "True", "False", "True")
        gw, _ = make_gateway(backend)
        score = context_precision("q", ["c1", "c2", "c3"], gw, params)
        assert score == pytest.approx((1 / 1 + 2 / 3) / 2)

    def test_all_relevant(self, params):
        gw, _ = make_gateway(MockBackend(default_reply="True"))
        assert context_precision("q", ["c1", "c2"], gw, params) == 1.0

    def test_all_irrelevant(self, params):
        gw, _ = make_gateway(MockBackend(default_reply="False"))
        assert context_precision("q", ["c1", "c2"], gw, params) == 0.0


class TestAveragePrecisionOracle:
    @staticmethod
    def brute_force_ap(verdicts) -> float:
        """Independent oracle: precision@k recomputed from scratch per rank."""
        relevant_ranks = [k for k, v in enumerate(verdicts, start=1) if v]
        if not relevant_ranks:
            return 0.0
        total = 0.0
        for k in relevant_ranks:
            prefix = verdicts[:k]
            total += sum(1 for v in prefix if v) / k
        return total / len(relevant_ranks)

    def test_exhaustive_up_to_length_six(self):
        for n in range(1, 7):
            for bits in itertools.product([False, True], repeat=n):
                assert average_precision(bits) == pytest.approx(self.brute_force_ap(bits))

    def test_random_up_to_length_twelve(self):
        rng = random.Random(11)
        for _ in range(300):
            n = rng.randint(7, 12)
            bits = [rng.random() < 0.5 for _ in range(n)]
            assert average_precision(bits) == pytest.approx(self.brute_force_ap(bits))


class TestContextRecall:
    def test_two_of_five(self, params):
        gt = " ".join(f"Ground truth sentence number {i} stands." for i in range(5))
        backend = MockBackend().script(ATTRIB, "True", "True", "False", "False", "False")
        gw, _ = make_gateway(backend)
        score, ngts, tgs = context_recall(gt, ["ctx"], gw, params)
        assert score == 2 / 5 and (ngts, tgs) == (2, 5)

    def test_all_attributable(self, params):
        gw, _ = make_gateway(MockBackend(default_reply="True"))
        score, _, _ = context_recall("One sentence. Two sentences here.", ["ctx"], gw, params)
        assert score == 1.0

    def test_ttf_two_thirds(self, params):
        gt = "First claim holds. Second claim holds. Third claim fails."
        backend = MockBackend().script(ATTRIB, "True", "True", "False")
        gw, _ = make_gateway(backend)
        score, _, _ = context_recall(gt, ["ctx"], gw, params)
        assert score == 2 / 3


class TestContextRelevancy:
    def test_three_of_twelve(self, params):
        contexts = [" ".join(f"Sentence {i}{j} filler words." for j in range(4)) for i in range(3)]
        replies = ["True"] * 3 + ["False"] * 9
        backend = MockBackend().script(SENT_REL, *replies)
        gw, _ = make_gateway(backend)
        assert context_relevancy("q", contexts, gw, params) == 3 / 12

    def test_all_relevant(self, params):
        gw, _ = make_gateway(MockBackend(default_reply="True"))
        assert context_relevancy("q", ["One. Two."], gw, params) == 1.0

    def test_none_relevant(self, params):
        gw, _ = make_gateway(MockBackend(default_reply="False"))
        assert context_relevancy("q", ["One. Two."], gw, params) == 0.0


class TestAnswerSimilarityAndCorrectness:
    def test_identical_texts_similarity_one(self, params):
        gw, _ = make_gateway()
        assert answer_similarity("same text", "same text", gw) == pytest.approx(1.0)

    def test_orthogonal_similarity_zero(self, params):
        backend = MockBackend()
        backend.script_embedding("a text", [1.0, 0.0]).script_embedding("b text", [0.0, 1.0])
        gw, _ = make_gateway(backend)
        assert answer_similarity("a text", "b text", gw) == 0.0

    def test_scripted_cosine_091(self, params):
        backend = MockBackend()
        backend.script_embedding("ans", [0.91, (1 - 0.91**2) ** 0.5])
        backend.script_embedding("truth", [1.0, 0.0])
        gw, _ = make_gateway(backend)
        assert answer_similarity("ans", "truth", gw) == pytest.approx(0.91)

    def test_correctness_identical_full_overlap(self, params):
        backend = MockBackend().script(EXTRACT, _statements_reply(3)).script(SUPPORT, "True")
        gw, _ = make_gateway(backend)
        assert answer_correctness("same text", "same text", gw, params) == pytest.approx(1.0)

    def test_correctness_zero_overlap_orthogonal(self, params):
        backend = MockBackend().script(EXTRACT, _statements_reply(2)).script(SUPPORT, "False")
        backend.script_embedding("a text", [1.0, 0.0]).script_embedding("b text", [0.0, 1.0])
        gw, _ = make_gateway(backend)
        assert answer_correctness("a text", "b text", gw, params) == 0.0

    def test_correctness_blend_f1_08_sim_09(self, params):
        backend = MockBackend().script(EXTRACT, _statements_reply(5))
        # five answer statements: 4 supported; five truth statements: 4 supported
        backend.script(SUPPORT, *(["True"] * 4 + ["False"] + ["True"] * 4 + ["False"]))
        backend.script_embedding("ans", [0.9, (1 - 0.81) ** 0.5])
        backend.script_embedding("truth", [1.0, 0.0])
        gw, _ = make_gateway(backend)
        score = answer_correctness("ans", "truth", gw, params)
        assert score == pytest.approx(0.75 * 0.8 + 0.25 * 0.9)


class TestRagasScore:
    def test_published_multi_document_rows(self):
        assert ragas_score(0.629, 0.948, 0.268, 0.705) == pytest.approx(0.513, abs=0.001)
        assert ragas_score(0.547, 0.598, 0.049, 0.697) == pytest.approx(0.158, abs=0.001)

    def test_all_ones(self):
        assert ragas_score(1.0, 1.0, 1.0, 1.0) == 1.0

    def test_zero_component_extends_to_zero(self):
        assert ragas_score(0.0, 0.9, 0.9, 0.9) == 0.0

    def test_domain_errors(self):
        with pytest.raises(MetricDomainError):
            ragas_score(1.2, 0.5, 0.5, 0.5)
        with pytest.raises(MetricDomainError):
            ragas_score(0.5, -0.1, 0.5, 0.5)

    def test_harmonic_mean_bounds_sample(self):
        rng = random.Random(5)
        for _ in range(200)        :
            vals = [rng.uniform(0.01, 1.0) for _ in range(4)]
            score = ragas_score(*vals)
            assert min(vals) - 1e-12 <= score <= max(vals) + 1e-12
            assert (score == 1.0) == all(v == 1.0 for v in vals)

    def test_strictly_increasing_in_each_component(self):
        rng = random.Random(6)
        for _ in range(100):
            vals = [rng.uniform(0.05, 0.9) for _ in range(4)]
            base = ragas_score(*vals)
            for i in range(4):
                bumped = list(vals)
                bumped[i] = min(1.0, bumped[i] + 0.05)
                assert ragas_score(*bumped) > base


def _two_item_run():
    """Two items with opposite scripted judges and pinned embeddings."""
    backend = MockBackend()
    backend.script(re.compile(r"Break the following answer.*ansONE", re.S), "1. The ansONE fact holds.")
    backend.script(re.compile(r"Break the following answer.*ansTWO", re.S), "1. The ansTWO claim stands.")
    backend.script(re.compile(r"completely answer.*ansONE", re.S), "Pseudo question one")
    backend.script(re.compile(r"completely answer.*ansTWO", re.S), "Pseudo question two")
    backend.script("ctxONE", "True")
    backend.script("ctxTWO", "False")
    backend.script("ansONE", "True")
    backend.script("ansTWO", "False")
    backend.script_embedding("What is oneQ about?", [1.0, 0.0])
    backend.script_embedding("Pseudo question one", [1.0, 0.0])
    backend.script_embedding("What is twoQ about?", [0.0, 1.0])
    backend.script_embedding("Pseudo question two", [0.0, 1.0])
    items = [
        EvalItem(
            question="What is oneQ about?",
            ground_truth="The ansONE fact holds.",
            retrieved_contexts=["The ctxONE evidence sentence."],
            answer="The ansONE fact holds.",
        ),
        EvalItem(
            question="What is twoQ about?",
            ground_truth="The ansTWO claim stands.",
            retrieved_contexts=["The ctxTWO evidence sentence."],
            answer="The ansTWO claim stands.",
        ),
    ]
    return items, backend


class TestEvaluateRun:
    def test_hand_computed_means(self, params):
        items, backend = _two_item_run()
        gw, _ = make_gateway(backend)
        report = evaluate_run(items, gw, params)
        assert report.means["faithfulness"] == pytest.approx(0.5)
        assert report.means["answer_relevancy"] == pytest.approx(1.0)
        assert report.means["answer_similarity"] == pytest.approx(1.0)
        assert report.means["answer_correctness"] == pytest.approx((1.0 + 0.25) / 2)
        assert report.means["context_precision"] == pytest.approx(0.5)
        assert report.means["context_recall"] == pytest.approx(0.5)
        assert report.means["context_relevancy"] == pytest.approx(0.5)
        # composite from dataset-level means
        assert report.ragas == pytest.approx(4 / (2 + 1 + 2 + 2))
        assert [b.ragas_score for b in report.per_item] == [1.0, 0.0]

    def test_all_perfect_single_item(self, params):
        backend = MockBackend(default_reply="True")
        backend.script(re.compile(r"Break the following answer", re.S), "1. Single statement.")
        backend.script(re.compile(r"completely answer", re.S), "the only question")
        backend.script_embedding("the only question", [1.0, 0.0])
        gw, _ = make_gateway(backend)
        item = EvalItem(
            question="the only question",
            ground_truth="Single statement.",
            retrieved_contexts=["Single statement."],
            answer="Single statement.",
        )
        report = evaluate_run([item], gw, params)
        for key, value in report.means.items():
            assert value == pytest.approx(1.0), key
        assert report.ragas == pytest.approx(1.0)

    def test_empty_run_rejected(self, params):
        gw, _ = make_gateway()
        with pytest.raises(EmptyReportError):
            evaluate_run([], gw, params)

    def test_report_json_and_table_shape(self, params):
        items, backend = _two_item_run()
        gw, _ = make_gateway(backend)
        report = evaluate_run(items, gw, params)
        payload = report.to_json()
        assert set(payload) == {"config", "per_item", "means", "exclusions", "ragas_score", "ledger_summary"}
        table = report.to_text_table("demo")
        header = table.splitlines()[0]
        assert re.search(r"Answer Relevancy\s+Answer Correctness\s+Answer Similarity\s+Context Relevancy", header)
        assert "Ragas Score" in header

    def test_context_precision_variant_flag(self, params):
        items, backend = _two_item_run()
        gw, _ = make_gateway(backend)
        report = evaluate_run(items, gw, params, components="context_precision")
        assert report.config["ragas_components"] == "context_precision"
        assert report.ragas == pytest.approx(4 / (1 / 0.5 + 1 / 1.0 + 1 / 0.5 + 1 / 0.5))


def _dataset_reply(questions):
    items = [
        {"question": q, "context": [f"Context for {q}"], "ground_truth": f"Answer for {q}"}
        for q in questions
    ]
    return "data = " + repr(items)


class TestGenerateDataset:
    def _corpus(self):
        return make_corpus([make_document("d", ["Some source paragraph about lattice coupling."])])

    def test_five_well_formed_items(self, params):
        backend = MockBackend().script("expert research scientist", _dataset_reply([f"Q{i}?" for i in range(5)]))
        gw, _ = make_gateway(backend)
        items = generate_dataset(self._corpus(), gw, params, target_count=5)
        assert len(items) == 5
        assert items[0].question == "Q0?"
        assert items[0].gt_contexts == ["Context for Q0?"]

    def test_duplicates_kept_once(self, params):
        b1 = _dataset_reply(["Q1?", "Q2?", "Q3?", "Q4?", "Q5?"])
        b2 = _dataset_reply(["Q4?", "Q5?", "Q6?", "Q7?"])
        backend = MockBackend().script("expert research scientist", b1, b2)
        gw, _ = make_gateway(backend)
        items = generate_dataset(self._corpus(), gw, params, target_count=7)
        assert [i.question for i in items] == [f"Q{n}?" for n in range(1, 8)]

    def test_malformed_block_skipped(self, params):
        blocks = [
            {"question": "Good1?", "context": ["c"], "ground_truth": "a"},
            {"question": "NoTruth?", "context": ["c"]},
            {"question": "Good2?", "context": ["c"], "ground_truth": "a"},
            {"question": "Good3?", "context": ["c"], "ground_truth": "a"},
            {"question": "Good4?", "context": ["c"], "ground_truth": "a"},
        ]
        backend = MockBackend().script("expert research scientist", "data = " + repr(blocks))
        gw, _ = make_gateway(backend)
        items = generate_dataset(self._corpus(), gw, params, target_count=4)
        assert [i.question for i in items] == ["Good1?", "Good2?", "Good3?", "Good4?"]

    def test_three_parse_failures_abort(self, params):
        backend = MockBackend(default_reply="no structured data at all")
        gw, _ = make_gateway(backend)
        with pytest.raises(DatasetGenerationError):
            generate_dataset(self._corpus(), gw, params, target_count=5)

    def test_all_duplicate_batches_stop(self, params):
        reply = _dataset_reply(["Only1?", "Only2?"])
        backend = MockBackend().script("expert research scientist", reply)
        gw, _ = make_gateway(backend)
        items = generate_dataset(self._corpus(), gw, params, target_count=50)
        assert len(items) == 2


def test_load_dataset_round_trip(tmp_path, params):
    from citeweave.evaluation import dataset_to_json
    import json

    items = [
        EvalItem(question="Q?", ground_truth="A.", gt_contexts=["c1"], retrieved_contexts=["r1"], answer="ans")
    ]
    path = tmp_path / "ds.json"
    path.write_text(json.dumps(dataset_to_json(items)))
    loaded = load_dataset(str(path))
    assert loaded == items
