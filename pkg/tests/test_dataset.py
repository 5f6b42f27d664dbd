import json
import random

import pytest

from medsum.backends import WordTokenizer
from medsum.chunking import ChunkConfig, build_chunks
from medsum.concepts import Concept, Lexicon, extract_concepts
from medsum.dataset import (
    Corpus,
    corpus_stats,
    export_finetune_dataset,
    load_corpus,
    select_target_reference,
)
from medsum.mocks import HashedBagEmbedder
from medsum.records import SummaryRecord, read_jsonl
from medsum.transcript import conversation_to_json

from helpers import make_conversation


@pytest.fixture
def lexicon():
    return Lexicon(
        [
            Concept("C-FEVER", "fever", ("fever",)),
            Concept("C-COUGH", "cough", ("cough",)),
            Concept("C-PAIN", "pain", ("pain",)),
            Concept("C-SOB", "dyspnea", ("shortness of breath",)),
        ]
    )


def _extractor(lexicon):
    return lambda text: extract_concepts(text, lexicon)


def _ref(conv_id, origin, text):
    return SummaryRecord(conv_id=conv_id, origin=origin, text=text)


def _toy_corpus(rng=None, with_splits=True) -> Corpus:
    rng = rng or random.Random(0)
    conversations = {
        "c1": make_conversation("c1", [10] * 100, rng=rng),  # 3 chunks at defaults
        "c2": make_conversation("c2", [10] * 20, rng=rng),  # 1 chunk
        "c3": make_conversation("c3", [10] * 30, rng=rng),
    }
    references = {
        "c1": [
            _ref("c1", "ann-b", "Patient reports fever and cough and pain."),
            _ref("c1", "ann-a", "Fever noted."),
        ],
        "c2": [_ref("c2", "ann-a", "Cough with shortness of breath.")],
        "c3": [_ref("c3", "ann-a", "Pain persists.")],
    }
    splits = {"c1": "train", "c2": "train", "c3": "dev"} if with_splits else {}
    return Corpus(conversations=conversations, references=references, splits=splits)


class TestCorpus:
    def test_rejects_reference_for_unknown_conversation(self):
        conv = make_conversation("c1", [3])
        with pytest.raises(ValueError, match="unknown conversation"):
            Corpus(
                conversations={"c1": conv},
                references={"ghost": [_ref("ghost", "a", "text")]},
            )

    def test_split_must_cover_all_conversations(self):
        conv = make_conversation("c1", [3])
        other = make_conversation("c2", [3])
        with pytest.raises(ValueError, match="does not cover"):
            Corpus(
                conversations={"c1": conv, "c2": other},
                references={},
                splits={"c1": "train"},
            )

    def test_split_disjointness_by_construction(self, tmp_path):
        corpus = _toy_corpus()
        lists = corpus.split_lists()
        all_ids = [cid for ids in lists.values() for cid in ids]
        assert len(all_ids) == len(set(all_ids)) == 3

    def test_load_corpus_round_trip(self, tmp_path):
        corpus = _toy_corpus()
        transcript_path = tmp_path / "convs.jsonl"
        with open(transcript_path, "w") as stream:
            for conv in corpus.conversations.values():
                stream.write(json.dumps(conversation_to_json(conv)) + "\n")
        refs_path = tmp_path / "refs.jsonl"
        with open(refs_path, "w") as stream:
            for refs in corpus.references.values():
                for ref in refs:
                    stream.write(
                        json.dumps(
                            {"conv_id": ref.conv_id, "annotator_id": ref.origin, "summary": ref.text}
                        )
                        + "\n"
                    )
        loaded = load_corpus(
            transcript_path,
            refs_path,
            {"train": ["c1", "c2"], "dev": ["c3"], "test": []},
        )
        assert loaded.conversations == corpus.conversations
        assert loaded.references == corpus.references
        assert loaded.splits == corpus.splits

    def test_load_corpus_rejects_double_assignment(self, tmp_path):
        corpus = _toy_corpus()
        transcript_path = tmp_path / "convs.jsonl"
        with open(transcript_path, "w") as stream:
            for conv in corpus.conversations.values():
                stream.write(json.dumps(conversation_to_json(conv)) + "\n")
        with pytest.raises(ValueError, match="two splits"):
            load_corpus(transcript_path, None, {"train": ["c1"], "dev": ["c1"], "test": ["c2", "c3"]})


class TestSelectTargetReference:
    def test_most_findings_wins(self, lexicon):
        refs = [
            _ref("c", "a1", "Fever."),
            _ref("c", "a2", "Fever and cough."),
            _ref("c", "a3", "Fever, cough, and pain."),
        ]
        assert select_target_reference(refs, _extractor(lexicon)).origin == "a3"

    def test_single_reference_returned(self, lexicon):
        refs = [_ref("c", "a1", "Fever.")]
        assert select_target_reference(refs, _extractor(lexicon)) is refs[0]

    def test_tie_breaks_to_earliest_annotator_id(self, lexicon):
        refs = [
            _ref("c", "ann-b", "Fever and cough."),
            _ref("c", "ann-a", "Pain and shortness of breath."),
        ]
        assert select_target_reference(refs, _extractor(lexicon)).origin == "ann-a"

    def test_permutation_invariant(self, lexicon):
        rng = random.Random(5)
        refs = [
            _ref("c", "a1", "Fever."),
            _ref("c", "a2", "Fever and cough."),
            _ref("c", "a3", "Pain."),
        ]
        chosen = select_target_reference(refs, _extractor(lexicon))
        for _ in range(10):
            shuffled = refs[:]
            rng.shuffle(shuffled)
            assert select_target_reference(shuffled, _extractor(lexicon)) == chosen

    def test_empty_rejected(self, lexicon):
        with pytest.raises(ValueError):
            select_target_reference([], _extractor(lexicon))


class TestExportFinetuneDataset:
    def test_chunking_counts_match_chunk_totals(self, tmp_path, lexicon):
        corpus = _toy_corpus()
        manifest = export_finetune_dataset(
            corpus, "chunking", tmp_path, extractor=_extractor(lexicon)
        )
        cfg = ChunkConfig()
        expected_train = sum(
            len(build_chunks(corpus.conversations[cid], cfg)) for cid in ("c1", "c2")
        )
        assert manifest.counts["train"] == expected_train == 4
        rows = read_jsonl(tmp_path / "train.jsonl")
        assert len(rows) == 4
        assert {row["method"] for row in rows} == {"chunking"}
        # c1 target: ann-b has 3 findings, ann-a has 1
        c1_rows = [row for row in rows if row["conv_id"] == "c1"]
        assert {row["target"] for row in c1_rows} == {"Patient reports fever and cough and pain."}

    def test_single_mode_one_example_per_conversation(self, tmp_path, lexicon):
        corpus = _toy_corpus()
        manifest = export_finetune_dataset(
            corpus, "single", tmp_path, extractor=_extractor(lexicon)
        )
        assert manifest.counts == {"train": 2, "dev": 1}
        rows = read_jsonl(tmp_path / "train.jsonl")
        assert [row["piece_id"] for row in rows] == ["full", "full"]
        assert rows[0]["source"].startswith("[doctor] ")

    def test_sentbert_mode_writes_reports(self, tmp_path):
        corpus = _toy_corpus()
        manifest = export_finetune_dataset(
            corpus,
            "sentbert",
            tmp_path,
            embedder=HashedBagEmbedder(),
            tokenizer=WordTokenizer(),
        )
        assert manifest.sentences_total >= manifest.sentences_matched >= 0
        assert (tmp_path / "build_report.jsonl").exists()
        assert (tmp_path / "manifest.json").exists()

    def test_conversation_without_references_skipped(self, tmp_path, lexicon):
        corpus = _toy_corpus()
        corpus.references.pop("c2")
        manifest = export_finetune_dataset(
            corpus, "single", tmp_path, extractor=_extractor(lexicon)
        )
        assert manifest.skipped_no_references == ["c2"]
        assert manifest.counts["train"] == 1

    def test_identical_config_identical_manifest_hash(self, tmp_path, lexicon):
        corpus = _toy_corpus()
        m1 = export_finetune_dataset(corpus, "chunking", tmp_path / "x", extractor=_extractor(lexicon))
        m2 = export_finetune_dataset(corpus, "chunking", tmp_path / "y", extractor=_extractor(lexicon))
        assert m1.config_hash == m2.config_hash
        m3 = export_finetune_dataset(
            corpus,
            "chunking",
            tmp_path / "z",
            extractor=_extractor(lexicon),
            chunk_cfg=ChunkConfig(chunk_word_limit=256),
        )
        assert m3.config_hash != m1.config_hash

    def test_export_is_deterministic_bytes(self, tmp_path, lexicon):
        corpus = _toy_corpus()
        for method, kwargs in (
            ("single", {"extractor": _extractor(lexicon)}),
            ("chunking", {"extractor": _extractor(lexicon)}),
            ("sentbert", {"embedder": HashedBagEmbedder(), "tokenizer": WordTokenizer()}),
        ):
            a_dir, b_dir = tmp_path / f"{method}-a", tmp_path / f"{method}-b"
            export_finetune_dataset(corpus, method, a_dir, **kwargs)
            export_finetune_dataset(corpus, method, b_dir, **kwargs)
            for name in ("train.jsonl", "dev.jsonl", "manifest.json"):
                assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()

    def test_requires_split_assignment(self, tmp_path, lexicon):
        corpus = _toy_corpus(with_splits=False)
        with pytest.raises(ValueError, match="split"):
            export_finetune_dataset(corpus, "single", tmp_path, extractor=_extractor(lexicon))

    def test_test_split_never_exported(self, tmp_path, lexicon):
        corpus = _toy_corpus()
        corpus.splits["c3"] = "test"
        export_finetune_dataset(corpus, "single", tmp_path, extractor=_extractor(lexicon))
        exported = {row["conv_id"] for row in read_jsonl(tmp_path / "train.jsonl")}
        exported |= {row["conv_id"] for row in read_jsonl(tmp_path / "dev.jsonl")}
        assert "c3" not in exported


class TestCorpusStats:
    def test_all_short_conversations_zero_over_threshold(self):
        conversations = {
            f"c{i}": make_conversation(f"c{i}", [10] * 30) for i in range(5)
        }  # ~330 serialized words ≈ 528 tokens each
        corpus = Corpus(conversations=conversations, references={})
        stats = corpus_stats(corpus, WordTokenizer())
        assert stats.over_1024_tokens == 0.0
        assert stats.over_2048_tokens == 0.0

    def test_constructed_fraction_over_1024(self):
        rng = random.Random(9)
        conversations = {}
        # 13 of 20 conversations (65%) serialized above 1024 tokens
        for i in range(20):
            words = 700 if i < 13 else 200  # 700 words + tags ≈ 1100+ tokens
            conversations[f"c{i}"] = make_conversation(f"c{i}", [35] * (words // 35), rng=rng)
        corpus = Corpus(conversations=conversations, references={})
        stats = corpus_stats(corpus, WordTokenizer())
        assert stats.over_1024_tokens == pytest.approx(0.65)

    def test_histogram_mass_equals_corpus_size(self):
        corpus = _toy_corpus()
        stats = corpus_stats(corpus, WordTokenizer())
        assert sum(stats.conversation_words["counts"]) == stats.conversations
        assert sum(stats.summary_words["counts"]) == stats.references
        assert sum(stats.references_per_conversation.values()) == stats.conversations

    def test_references_per_conversation_histogram(self):
        corpus = _toy_corpus()
        stats = corpus_stats(corpus, WordTokenizer())
        assert stats.references_per_conversation == {1: 2, 2: 1}
