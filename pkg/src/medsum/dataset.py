"""Corpus management: splits, target selection, fine-tuning export, statistics.

A corpus binds conversations, their reference summaries, and a
train/dev/test split assignment. Fine-tuning datasets are exported per
construction method (single, chunking, sentbert) as TrainingExample JSONL
plus a manifest capturing counts, drop rates, and a config hash so
identical exports are verifiable byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

from .alignment import AlignConfig, build_sentbert_training_examples
from .backends import EmbeddingProvider, Tokenizer
from .chunking import ChunkConfig, build_chunk_training_examples
from .records import SummaryRecord, load_references, write_jsonl
from .transcript import Conversation, parse_transcript, serialize_with_roles

SPLITS = ("train", "dev", "test")

ConceptExtractor = Callable[[str], frozenset]


@dataclass
class Corpus:
    """Conversations, references, and a split assignment over conversation ids."""

    conversations: dict[str, Conversation]
    references: dict[str, list[SummaryRecord]]
    splits: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for conv_id in self.references:
            if conv_id not in self.conversations:
                raise ValueError(f"references mention unknown conversation {conv_id!r}")
        for conv_id, split in self.splits.items():
            if conv_id not in self.conversations:
                raise ValueError(f"split assigns unknown conversation {conv_id!r}")
            if split not in SPLITS:
                raise ValueError(f"conversation {conv_id!r}: unknown split {split!r}")
        missing = [cid for cid in self.conversations if cid not in self.splits]
        if self.splits and missing:
            raise ValueError(f"split does not cover conversations: {missing[:5]}")

    def ids_in(self, split: str) -> list[str]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return [cid for cid in self.conversations if self.splits.get(cid) == split]

    def split_lists(self) -> dict[str, list[str]]:
        return {split: self.ids_in(split) for split in SPLITS}


def load_corpus(
    transcripts: Union[str, Path],
    references: Union[str, Path, None] = None,
    splits: Optional[Mapping[str, Sequence[str]]] = None,
) -> Corpus:
    """Load a corpus from transcript JSONL, reference JSONL, and a split map.

    ``splits`` maps split name to a list of conversation ids (the manifest
    layout). Ids not mentioned in any split cause an error; omitting
    ``splits`` leaves the corpus unsplit (fine for inference/eval only).
    """
    with open(transcripts, "rb") as stream:
        conversations = {conv.id: conv for conv in parse_transcript(stream)}
    refs = load_references(references) if references is not None else {}
    assignment: dict[str, str] = {}
    if splits is not None:
        for split, ids in splits.items():
            if split not in SPLITS:
                raise ValueError(f"unknown split name {split!r}")
            for conv_id in ids:
                if conv_id in assignment:
                    raise ValueError(f"conversation {conv_id!r} assigned to two splits")
                assignment[conv_id] = split
    return Corpus(conversations=conversations, references=refs, splits=assignment)


def select_target_reference(
    refs: Sequence[SummaryRecord], extractor: ConceptExtractor
) -> SummaryRecord:
    """The reference with the most extracted findings; ties break to the
    earliest annotator id."""
    if not refs:
        raise ValueError("refs must be non-empty")
    best = None
    best_key = None
    for ref in refs:
        count = len(extractor(ref.text))
        # Maximize count; among equals prefer the smallest annotator id.
        key = (-count, ref.origin)
        if best_key is None or key < best_key:
            best = ref
            best_key = key
    return best


@dataclass
class ExportManifest:
    """What an export produced, and under which configuration."""

    method: str
    splits: dict[str, list[str]]
    counts: dict[str, int]
    skipped_no_references: list[str]
    sentences_total: int = 0
    sentences_matched: int = 0
    config_hash: str = ""

    def to_json(self) -> dict:
        payload = {
            "method": self.method,
            "splits": self.splits,
            "counts": self.counts,
            "skipped_no_references": self.skipped_no_references,
            "config_hash": self.config_hash,
        }
        if self.method == "sentbert":
            payload["sentences_total"] = self.sentences_total
            payload["sentences_matched"] = self.sentences_matched
        return payload


def config_hash(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def export_finetune_dataset(
    corpus: Corpus,
    method: str,
    out_dir: Union[str, Path],
    *,
    extractor: Optional[ConceptExtractor] = None,
    chunk_cfg: Optional[ChunkConfig] = None,
    align_cfg: Optional[AlignConfig] = None,
    embedder: Optional[EmbeddingProvider] = None,
    tokenizer: Optional[Tokenizer] = None,
    token_limit: int = 1024,
) -> ExportManifest:
    """Write train/dev TrainingExample JSONL files plus a manifest.

    single: role-serialized conversation mapped to the max-findings target.
    chunking: every chunk of a conversation mapped to that same target.
    sentbert: matched (snippet, sentence) pairs from all references.
    Conversations without references are skipped and listed in the manifest.
    """
    if method not in ("single", "chunking", "sentbert"):
        raise ValueError(f"unknown method {method!r}")
    if not corpus.splits:
        raise ValueError("export requires a split assignment")
    if method in ("single", "chunking") and extractor is None:
        raise ValueError(f"method {method!r} requires a concept extractor for target selection")
    if method == "chunking" and chunk_cfg is None:
        chunk_cfg = ChunkConfig()
    if method == "sentbert":
        if embedder is None:
            raise ValueError("sentbert export requires an embedding provider")
        if align_cfg is None:
            align_cfg = AlignConfig()

    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    manifest = ExportManifest(
        method=method,
        splits=corpus.split_lists(),
        counts={},
        skipped_no_references=[],
        config_hash=config_hash(_export_config(method, chunk_cfg, align_cfg, token_limit)),
    )

    reports = []
    for split in ("train", "dev"):
        examples = []
        for conv_id in corpus.ids_in(split):
            conv = corpus.conversations[conv_id]
            refs = corpus.references.get(conv_id, [])
            if not refs:
                manifest.skipped_no_references.append(conv_id)
                continue
            if method == "single":
                target = select_target_reference(refs, extractor)
                examples.append(
                    {
                        "conv_id": conv_id,
                        "piece_id": "full",
                        "source": serialize_with_roles(conv.turns),
                        "target": target.text,
                        "method": "single",
                    }
                )
            elif method == "chunking":
                target = select_target_reference(refs, extractor)
                examples.extend(
                    ex.to_json()
                    for ex in build_chunk_training_examples(conv, target.text, chunk_cfg)
                )
            else:
                built, report = build_sentbert_training_examples(
                    conv, refs, embedder, align_cfg, tokenizer=tokenizer, token_limit=token_limit
                )
                examples.extend(ex.to_json() for ex in built)
                manifest.sentences_total += report.sentences_total
                manifest.sentences_matched += report.sentences_matched
                reports.append(report.to_json())
        write_jsonl(examples, out_path / f"{split}.jsonl")
        manifest.counts[split] = len(examples)

    if method == "sentbert":
        write_jsonl(reports, out_path / "build_report.jsonl")
    with open(out_path / "manifest.json", "w", encoding="utf-8") as stream:
        json.dump(manifest.to_json(), stream, ensure_ascii=False, sort_keys=True, indent=2)
        stream.write("\n")
    return manifest


def _export_config(method, chunk_cfg, align_cfg, token_limit) -> dict:
    payload: dict = {"method": method, "token_limit": token_limit}
    if chunk_cfg is not None:
        payload["chunking"] = {
            "chunk_word_limit": chunk_cfg.chunk_word_limit,
            "header_fraction": chunk_cfg.header_fraction,
            "ellipsis_token": chunk_cfg.ellipsis_token,
        }
    if align_cfg is not None:
        payload["alignment"] = {
            "window_turns": align_cfg.window_turns,
            "train_stride": align_cfg.train_stride,
            "infer_stride": align_cfg.infer_stride,
            "similarity_threshold": align_cfg.similarity_threshold,
        }
    return payload


DEFAULT_CONV_WORD_EDGES = (0, 250, 500, 1000, 2000, 4000)
DEFAULT_SUMMARY_WORD_EDGES = (0, 25, 50, 100, 200, 400)


@dataclass
class CorpusStats:
    """Histograms and token-threshold fractions describing a corpus."""

    conversations: int
    references: int
    conversation_words: dict
    summary_words: dict
    references_per_conversation: dict[int, int]
    over_1024_tokens: float
    over_2048_tokens: float

    def to_json(self) -> dict:
        return {
            "conversations": self.conversations,
            "references": self.references,
            "conversation_words": self.conversation_words,
            "summary_words": self.summary_words,
            "references_per_conversation": {
                str(k): v for k, v in sorted(self.references_per_conversation.items())
            },
            "over_1024_tokens": self.over_1024_tokens,
            "over_2048_tokens": self.over_2048_tokens,
        }


def _histogram(values: Sequence[int], edges: Sequence[int]) -> dict:
    """Counts per half-open bin [edge_i, edge_i+1), last bin unbounded."""
    counts = [0] * len(edges)
    for value in values:
        index = 0
        for i, edge in enumerate(edges):
            if value >= edge:
                index = i
        counts[index] += 1
    return {"edges": list(edges), "counts": counts}


def corpus_stats(
    corpus: Corpus,
    tokenizer: Tokenizer,
    *,
    conversation_word_edges: Sequence[int] = DEFAULT_CONV_WORD_EDGES,
    summary_word_edges: Sequence[int] = DEFAULT_SUMMARY_WORD_EDGES,
) -> CorpusStats:
    """Corpus-level statistics; token thresholds use serialized conversations."""
    conv_words = [conv.word_count for conv in corpus.conversations.values()]
    summaries = [ref for refs in corpus.references.values() for ref in refs]
    token_counts = [
        tokenizer.count(serialize_with_roles(conv.turns)) for conv in corpus.conversations.values()
    ]
    total = len(corpus.conversations)
    refs_per_conv: dict[int, int] = {}
    for conv_id in corpus.conversations:
        n = len(corpus.references.get(conv_id, []))
        refs_per_conv[n] = refs_per_conv.get(n, 0) + 1
    return CorpusStats(
        conversations=total,
        references=len(summaries),
        conversation_words=_histogram(conv_words, conversation_word_edges),
        summary_words=_histogram([len(ref.text.split()) for ref in summaries], summary_word_edges),
        references_per_conversation=refs_per_conv,
        over_1024_tokens=(sum(1 for t in token_counts if t > 1024) / total) if total else 0.0,
        over_2048_tokens=(sum(1 for t in token_counts if t > 2048) / total) if total else 0.0,
    )
