import random

import pytest

from medsum.concepts import Concept, Lexicon
from medsum.backends import WordTokenizer
from medsum.evaluation import (
    BUCKET_EDGES,
    aggregate_multi_reference,
    baseline_reference_loo,
    baseline_training_random,
    bucket_index,
    bucket_label,
    draw_training_indices,
    evaluate_run,
    render_report_tables,
)
from medsum.records import SummaryRecord
from medsum.rouge import score_pair

from helpers import WORD_POOL, make_conversation


def _record(conv_id, text, origin="gen"):
    return SummaryRecord(conv_id=conv_id, origin=origin, text=text)


def _random_summary(rng, n_words=12):
    return " ".join(rng.choice(WORD_POOL) for _ in range(n_words))


@pytest.fixture
def lexicon():
    return Lexicon(
        [
            Concept("C-FEVER", "fever", ("fever",), category="symptom"),
            Concept("C-COUGH", "cough", ("cough",), category="symptom"),
            Concept("C-PAIN", "pain", ("pain", "chest pain"), category="symptom"),
        ]
    )


class TestAggregateMultiReference:
    def test_best_reference_carries_all_measures(self):
        gen = _record("c", "the patient denies fever and cough")
        close = _record("c", "the patient denies fever and cough today", origin="a1")
        far = _record("c", "entirely unrelated text about scheduling", origin="a2")
        mean, best = aggregate_multi_reference(gen, [far, close])
        expected_best = score_pair(gen.text, close.text)
        assert best == expected_best
        assert mean.rouge1.f1 == pytest.approx(
            (score_pair(gen.text, far.text).rouge1.f1 + expected_best.rouge1.f1) / 2
        )

    def test_single_reference_mean_equals_best(self):
        gen = _record("c", "fever and cough")
        ref = _record("c", "fever and cough noted", origin="a1")
        mean, best = aggregate_multi_reference(gen, [ref])
        assert mean == best

    def test_tie_keeps_first_reference(self):
        gen = _record("c", "alpha beta")
        ref1 = _record("c", "alpha beta one", origin="a1")
        ref2 = _record("c", "alpha beta two", origin="a2")
        _, best = aggregate_multi_reference(gen, [ref1, ref2])
        assert best == score_pair(gen.text, ref1.text)

    def test_empty_references_rejected(self):
        with pytest.raises(ValueError):
            aggregate_multi_reference(_record("c", "x"), [])

    def test_best_r1_always_at_least_mean_r1(self):
        rng = random.Random(19)
        for _ in range(200):
            gen = _record("c", _random_summary(rng))
            refs = [
                _record("c", _random_summary(rng), origin=f"a{k}")
                for k in range(rng.randint(1, 6))
            ]
            mean, best = aggregate_multi_reference(gen, refs)
            assert best.rouge1.f1 >= mean.rouge1.f1 - 1e-12


class TestBuckets:
    def test_documented_edges(self):
        assert bucket_index(700) == 1
        assert bucket_label(1) == "(512, 1024]"
        assert bucket_index(1500) == 2
        assert bucket_label(2) == "(1024, 2048]"
        assert bucket_index(512) == 0
        assert bucket_index(513) == 1
        assert bucket_index(4096) == 3
        assert bucket_index(4097) == 4
        assert len(BUCKET_EDGES) + 1 == 5

    def test_empty_bucket_reported_with_zero_count(self, lexicon):
        conv = make_conversation("c", [5] * 4)
        gen = [_record("c", "fever")]
        refs = {"c": [_record("c", "fever", origin="a1")]}
        report = evaluate_run(
            gen, refs, lexicon, WordTokenizer(), {"c": conv}, buckets=True
        )
        assert len(report.buckets) == 5
        assert sum(row.count for row in report.buckets) == 1
        empty_rows = [row for row in report.buckets if row.count == 0]
        assert all(row.mean_of_mean is None for row in empty_rows)


class TestTrainingBaseline:
    def test_seeded_pairing_deterministic(self):
        targets = [f"t{i}" for i in range(20)]
        a = draw_training_indices(50, len(targets), seed=11)
        b = draw_training_indices(50, len(targets), seed=11)
        assert a == b
        assert draw_training_indices(50, len(targets), seed=12) != a

    def test_identical_pair_scores_one(self):
        result = baseline_training_random(["fever and cough"], ["fever and cough"], seed=0)
        assert result.mean_of_mean.rouge1.f1 == pytest.approx(1.0)

    def test_uniform_distribution_chi_square(self):
        # 10k draws over 8 targets; chi-square must stay under the
        # alpha=0.001 critical value for 7 degrees of freedom (24.32)
        n_targets = 8
        draws = draw_training_indices(10_000, n_targets, seed=5)
        counts = [draws.count(i) for i in range(n_targets)]
        expected = len(draws) / n_targets
        chi_square = sum((c - expected) ** 2 / expected for c in counts)
        assert chi_square < 24.32

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            baseline_training_random([], ["t"], seed=0)
        with pytest.raises(ValueError):
            baseline_training_random(["g"], [], seed=0)


class TestReferenceBaseline:
    def test_two_identical_references_score_one(self):
        refs = {"c": [_record("c", "same text", "a1"), _record("c", "same text", "a2")]}
        result = baseline_reference_loo(refs)
        assert result.mean_of_mean.rouge1.f1 == pytest.approx(1.0)
        assert result.pairs == 2

    def test_matches_exhaustive_loo_oracle(self):
        texts = ["fever and cough", "fever only today", "cough and pain"]
        refs = {"c": [_record("c", t, f"a{i}") for i, t in enumerate(texts)]}
        result = baseline_reference_loo(refs)
        per_ref = []
        for i, text in enumerate(texts):
            rest = [t for j, t in enumerate(texts) if j != i]
            per_ref.append(sum(score_pair(text, r).rouge1.f1 for r in rest) / len(rest))
        assert result.mean_of_mean.rouge1.f1 == pytest.approx(sum(per_ref) / len(per_ref))

    def test_single_reference_conversations_skipped(self):
        refs = {
            "c1": [_record("c1", "only one", "a1")],
            "c2": [_record("c2", "two here", "a1"), _record("c2", "two here too", "a2")],
        }
        result = baseline_reference_loo(refs)
        assert result.skipped == 1
        assert result.pairs == 2

    def test_no_multi_reference_conversations_rejected(self):
        with pytest.raises(ValueError):
            baseline_reference_loo({"c": [_record("c", "alone", "a1")]})


class TestEvaluateRun:
    def _setup(self, rng):
        conversations = {}
        references = {}
        generated = []
        for i in range(6):
            conv_id = f"c{i}"
            conversations[conv_id] = make_conversation(conv_id, [10] * (5 + 30 * i), rng=rng)
            references[conv_id] = [
                _record(conv_id, _random_summary(rng) + " fever", f"a{k}") for k in range(3)
            ]
            generated.append(_record(conv_id, _random_summary(rng) + " fever"))
        return conversations, references, generated

    def test_identical_generated_and_reference_scores_one(self, lexicon):
        gen = [_record("c", "patient has fever and cough")]
        refs = {"c": [_record("c", "patient has fever and cough", "a1")]}
        report = evaluate_run(gen, refs, lexicon)
        assert report.aggregate_mean_of_mean.rouge1.f1 == pytest.approx(1.0)
        assert report.aggregate_mean_of_best.rougeL.f1 == pytest.approx(1.0)
        assert report.aggregate_concept.f1 == pytest.approx(1.0)

    def test_full_report_structure(self, lexicon):
        rng = random.Random(3)
        conversations, references, generated = self._setup(rng)
        training_targets = [_random_summary(rng) for _ in range(10)]
        report = evaluate_run(
            generated,
            references,
            lexicon,
            WordTokenizer(),
            conversations,
            buckets=True,
            baselines=("training", "reference"),
            training_targets=training_targets,
            seed=1,
        )
        payload = report.to_json()
        assert set(payload) == {"settings", "aggregates", "buckets", "baselines", "per_conversation"}
        assert len(payload["per_conversation"]) == 6
        assert len(payload["buckets"]) == 5
        assert set(payload["baselines"]) == {"training", "reference"}
        assert payload["settings"]["bucket_edges"] == [512, 1024, 2048, 4096]
        text = render_report_tables(report)
        assert "ROUGE-1 F1" in text and "training" in text and "reference" in text

    def test_vacuous_policy_skip_vs_one(self):
        empty_lexicon_side = Lexicon([Concept("C-X", "xyz", ("xyzzy",))])
        gen = [_record("c", "no findings here")]
        refs = {"c": [_record("c", "none here either", "a1")]}
        one = evaluate_run(gen, refs, empty_lexicon_side, vacuous_policy="one")
        assert one.aggregate_concept.f1 == 1.0
        skip = evaluate_run(gen, refs, empty_lexicon_side, vacuous_policy="skip")
        assert skip.aggregate_concept is None
        assert skip.concept_skipped == 1

    def test_concept_uses_majority_vote(self, lexicon):
        gen = [_record("c", "fever")]
        refs = {
            "c": [
                _record("c", "fever and cough", "a1"),
                _record("c", "fever", "a2"),
                _record("c", "fever and pain", "a3"),
            ]
        }
        report = evaluate_run(gen, refs, lexicon)
        # only fever appears in >= 3 references; gen hits exactly it
        entry = report.per_conversation[0]
        assert entry.concept.precision == 1.0
        assert entry.concept.recall == 1.0

    def test_missing_references_rejected(self, lexicon):
        with pytest.raises(ValueError, match="no references"):
            evaluate_run([_record("c", "x")], {}, lexicon)

    def test_aggregates_recomputable_from_per_conversation_entries(self, lexicon):
        rng = random.Random(29)
        conversations, references, generated = self._setup(rng)
        report = evaluate_run(generated, references, lexicon)
        n = len(report.per_conversation)
        recomputed = sum(e.mean_of_mean.rouge1.f1 for e in report.per_conversation) / n
        assert report.aggregate_mean_of_mean.rouge1.f1 == pytest.approx(recomputed)
        recomputed_best = sum(e.mean_of_best.rougeL.f1 for e in report.per_conversation) / n
        assert report.aggregate_mean_of_best.rougeL.f1 == pytest.approx(recomputed_best)
        concepts = [e.concept.f1 for e in report.per_conversation if e.concept]
        assert report.aggregate_concept.f1 == pytest.approx(sum(concepts) / len(concepts))

    def test_injected_extractor_replaces_lexicon_scan(self, lexicon):
        gen = [_record("c", "whatever text")]
        refs = {"c": [_record("c", "other text", "a1")]}
        fixed = lambda text: frozenset({"C-FIXED"})
        report = evaluate_run(gen, refs, lexicon, extractor=fixed)
        entry = report.per_conversation[0]
        assert entry.concept.f1 == 1.0  # both sides extract the same fixed set

    def test_category_filter_restricts_lexicon(self):
        lexicon = Lexicon(
            [
                Concept("C-F", "fever", ("fever",), category="symptom"),
                Concept("C-D", "diabetes", ("diabetes",), category="disorder"),
            ]
        )
        gen = [_record("c", "diabetes")]
        refs = {"c": [_record("c", "diabetes", "a1")]}
        unfiltered = evaluate_run(gen, refs, lexicon)
        assert unfiltered.aggregate_concept.f1 == 1.0
        filtered = evaluate_run(gen, refs, lexicon, categories=["symptom"])
        # with disorders filtered out both sides are empty -> vacuous 1.0
        assert filtered.aggregate_concept.f1 == 1.0
        assert filtered.settings["concept_categories"] == ["symptom"]
