"""Sentence-to-snippet alignment for the embedding dataset-construction method.

Each reference-summary sentence is matched against stride-one sliding
windows of the conversation by embedding cosine similarity. Windows at or
above the threshold are coalesced (merged transitively when their turn
ranges overlap or touch) and the longest merged span becomes the matched
snippet for that sentence, yielding (snippet, sentence) training pairs.
At inference time the conversation is covered by wider-stride windows
instead, since no reference exists to match against.

Turn ranges are inclusive ``(start, end)`` pairs throughout, matching
:func:`medsum.transcript.window_turns`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .backends import BackendError, EmbeddingProvider, Tokenizer
from .records import SummaryRecord, TrainingExample
from .transcript import Conversation, serialize_with_roles, split_sentences, window_turns


@dataclass(frozen=True)
class AlignConfig:
    """Window geometry and the similarity cutoff for alignment."""

    window_turns: int = 8
    train_stride: int = 1
    infer_stride: int = 4
    similarity_threshold: float = 0.7

    def __post_init__(self) -> None:
        if self.window_turns < 1:
            raise ValueError(f"window_turns must be >= 1, got {self.window_turns}")
        if self.train_stride < 1 or self.infer_stride < 1:
            raise ValueError("strides must be >= 1")
        if not 0.0 < self.similarity_threshold <= 1.0:
            raise ValueError(
                f"similarity_threshold must be in (0, 1], got {self.similarity_threshold}"
            )


@dataclass(frozen=True)
class Snippet:
    """A contiguous run of turns, role-serialized."""

    conv_id: str
    start: int
    end: int
    rendered: str


@dataclass(frozen=True)
class Alignment:
    """Outcome of matching one summary sentence against a conversation.

    ``candidate_windows`` are the raw windows that cleared the threshold;
    ``matched`` is the longest coalesced span of those windows, or None
    when nothing cleared the threshold.
    """

    sentence: str
    matched: Optional[Snippet]
    candidate_windows: tuple[tuple[int, int], ...]


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors; 0.0 when either is all-zero."""
    norm = float(np.linalg.norm(u)) * float(np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    return float(np.dot(u, v)) / norm


def merge_touching_ranges(ranges: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Coalesce inclusive ranges that overlap or are adjacent (share a boundary)."""
    if not ranges:
        return []
    ordered = sorted(ranges)
    merged = [ordered[0]]
    for start, end in ordered[1:]:
        last_start, last_end = merged[-1]
        if start <= last_end + 1:
            merged[-1] = (last_start, max(last_end, end))
        else:
            merged.append((start, end))
    return merged


def _longest_span(merged: Sequence[tuple[int, int]]) -> Optional[tuple[int, int]]:
    """Longest span by turn count; ties break to the earliest start."""
    if not merged:
        return None
    return max(merged, key=lambda span: (span[1] - span[0], -span[0]))


def _render_range(conv: Conversation, start: int, end: int) -> str:
    return serialize_with_roles(conv.turns[start : end + 1])


def _embed(embedder: EmbeddingProvider, texts: Sequence[str], what: str) -> np.ndarray:
    try:
        vectors = np.asarray(embedder.embed(texts), dtype=np.float64)
    except BackendError as exc:
        raise BackendError(f"embedding failed for {what}: {exc}", retriable=exc.retriable) from exc
    if vectors.shape[0] != len(texts):
        raise BackendError(
            f"embedder returned {vectors.shape[0]} vectors for {len(texts)} {what}",
            retriable=False,
        )
    return vectors


def _match_from_similarities(
    conv: Conversation,
    sentence: str,
    windows: Sequence[tuple[int, int]],
    similarities: Sequence[float],
    threshold: float,
) -> Alignment:
    candidates = tuple(
        window for window, sim in zip(windows, similarities) if sim >= threshold
    )
    span = _longest_span(merge_touching_ranges(candidates))
    matched = None
    if span is not None:
        matched = Snippet(
            conv_id=conv.id, start=span[0], end=span[1], rendered=_render_range(conv, *span)
        )
    return Alignment(sentence=sentence, matched=matched, candidate_windows=candidates)


def align_sentence(
    conv: Conversation,
    sentence: str,
    embedder: EmbeddingProvider,
    cfg: AlignConfig,
) -> Alignment:
    """Match one summary sentence to its best coalesced conversation span."""
    if not sentence.strip():
        raise ValueError("sentence must be non-empty")
    windows = window_turns(conv, cfg.window_turns, cfg.train_stride)
    texts = [sentence] + [_render_range(conv, start, end) for start, end in windows]
    vectors = _embed(embedder, texts, f"windows of conversation {conv.id!r}")
    similarities = [cosine_similarity(vectors[0], vectors[i + 1]) for i in range(len(windows))]
    return _match_from_similarities(conv, sentence, windows, similarities, cfg.similarity_threshold)


@dataclass(frozen=True)
class AlignmentReport:
    """Build accounting for one conversation's alignment pass."""

    conv_id: str
    sentences_total: int
    sentences_matched: int
    snippet_token_stats: Optional[dict] = None

    def to_json(self) -> dict:
        return {
            "conv_id": self.conv_id,
            "sentences_total": self.sentences_total,
            "sentences_matched": self.sentences_matched,
            "snippet_token_stats": self.snippet_token_stats,
        }


def build_sentbert_training_examples(
    conv: Conversation,
    references: Sequence[SummaryRecord],
    embedder: EmbeddingProvider,
    cfg: AlignConfig,
    tokenizer: Optional[Tokenizer] = None,
    token_limit: int = 1024,
) -> tuple[list[TrainingExample], AlignmentReport]:
    """(matched snippet, sentence) pairs from every reference of a conversation.

    Sentences that match no window are dropped and counted in the report.
    Window embeddings are computed once and shared across all sentences.
    When a tokenizer is supplied, the report carries snippet token statistics
    (mean and the fraction within ``token_limit``).
    """
    if not references:
        raise ValueError("references must be non-empty")
    windows = window_turns(conv, cfg.window_turns, cfg.train_stride)
    window_texts = [_render_range(conv, start, end) for start, end in windows]
    window_vectors = _embed(embedder, window_texts, f"windows of conversation {conv.id!r}")

    examples: list[TrainingExample] = []
    total = 0
    matched_count = 0
    for reference in references:
        sentences = list(split_sentences(reference.text))
        total += len(sentences)
        if not sentences:
            continue
        sentence_vectors = _embed(
            embedder, sentences, f"sentences of reference {reference.origin!r}"
        )
        for index, sentence in enumerate(sentences):
            similarities = [
                cosine_similarity(sentence_vectors[index], window_vectors[w])
                for w in range(len(windows))
            ]
            alignment = _match_from_similarities(
                conv, sentence, windows, similarities, cfg.similarity_threshold
            )
            if alignment.matched is None:
                continue
            matched_count += 1
            examples.append(
                TrainingExample(
                    conv_id=conv.id,
                    piece_id=f"{reference.origin}:sent-{index}",
                    source=alignment.matched.rendered,
                    target=sentence,
                    method="sentbert",
                )
            )

    stats = None
    if tokenizer is not None:
        counts = [tokenizer.count(example.source) for example in examples]
        stats = {
            "count": len(counts),
            "mean_tokens": (sum(counts) / len(counts)) if counts else 0.0,
            "within_limit_fraction": (
                sum(1 for c in counts if c <= token_limit) / len(counts) if counts else 1.0
            ),
            "token_limit": token_limit,
        }
    report = AlignmentReport(
        conv_id=conv.id,
        sentences_total=total,
        sentences_matched=matched_count,
        snippet_token_stats=stats,
    )
    return examples, report


def build_inference_snippets(conv: Conversation, cfg: AlignConfig) -> list[Snippet]:
    """Cover the conversation with wider-stride windows for stage-1 inference."""
    return [
        Snippet(conv_id=conv.id, start=start, end=end, rendered=_render_range(conv, start, end))
        for start, end in window_turns(conv, cfg.window_turns, cfg.infer_stride)
    ]
