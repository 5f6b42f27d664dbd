"""Chunking dataset-construction method.

A conversation is decomposed into chunks that share a fixed header (the
conversation opening, kept as context in every chunk) followed by a body
taken from a single left-to-right scan of the remaining turns. Bodies
partition the post-header turns; each is the longest turn run that keeps
header + body within the word budget. An ellipsis token marks elided
transcript: between header and body when they are not contiguous, and at
the end of every non-terminal chunk.

Turn index ranges here are half-open (Python slice convention): the header
is ``turns[0:header_end]`` and a body is ``turns[body_start:body_end]``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .records import TrainingExample
from .transcript import Conversation, serialize_with_roles


@dataclass(frozen=True)
class ChunkConfig:
    """Word-budget settings for chunk construction.

    ``header_fraction`` of ``chunk_word_limit`` (rounded half-up) is the
    header word budget; the header itself rounds up to a whole turn.
    """

    chunk_word_limit: int = 512
    header_fraction: float = 0.25
    ellipsis_token: str = "..."

    def __post_init__(self) -> None:
        if self.chunk_word_limit < 1:
            raise ValueError(f"chunk_word_limit must be >= 1, got {self.chunk_word_limit}")
        if not 0.0 <= self.header_fraction < 1.0:
            raise ValueError(f"header_fraction must be in [0, 1), got {self.header_fraction}")
        if self.header_word_budget >= self.chunk_word_limit:
            raise ValueError(
                f"header word budget {self.header_word_budget} must be below "
                f"chunk_word_limit {self.chunk_word_limit}"
            )

    @property
    def header_word_budget(self) -> int:
        return int(self.header_fraction * self.chunk_word_limit + 0.5)


@dataclass(frozen=True)
class Chunk:
    """One header+body slice of a conversation.

    ``header_end`` is the exclusive end of the shared header range (0 for an
    empty header). ``is_terminal`` marks the chunk whose body reaches the
    final turn.
    """

    conv_id: str
    index: int
    header_end: int
    body_start: int
    body_end: int
    is_terminal: bool

    @property
    def body_is_contiguous(self) -> bool:
        """True when the body immediately follows the header (no elision gap)."""
        return self.body_start == self.header_end


def build_header(conv: Conversation, cfg: ChunkConfig) -> int:
    """Exclusive end index of the header turn range.

    The header is the smallest prefix of whole turns whose cumulative word
    count reaches the header budget (rounded *up* to a turn end), clamped to
    the whole conversation when it is shorter than the budget. A zero budget
    yields an empty header.
    """
    budget = cfg.header_word_budget
    if budget == 0:
        return 0
    words = 0
    for i, turn in enumerate(conv.turns):
        words += turn.word_count
        if words >= budget:
            return i + 1
    return len(conv)


def build_chunks(conv: Conversation, cfg: ChunkConfig) -> list[Chunk]:
    """Decompose a conversation into chunks sharing one header.

    Bodies are consecutive, non-overlapping runs of whole turns covering
    everything after the header. Each body takes as many turns as fit in
    ``chunk_word_limit`` minus the header words, but always at least one
    turn: a single turn larger than the remaining budget is admitted whole
    rather than split.
    """
    header_end = build_header(conv, cfg)
    header_words = sum(turn.word_count for turn in conv.turns[:header_end])
    n = len(conv)

    if header_end == n:
        # Header swallowed the whole conversation: one terminal chunk, empty body.
        return [
            Chunk(
                conv_id=conv.id,
                index=0,
                header_end=header_end,
                body_start=header_end,
                body_end=header_end,
                is_terminal=True,
            )
        ]

    body_budget = cfg.chunk_word_limit - header_words
    chunks: list[Chunk] = []
    start = header_end
    while start < n:
        end = start + 1
        words = conv.turns[start].word_count
        while end < n and words + conv.turns[end].word_count <= body_budget:
            words += conv.turns[end].word_count
            end += 1
        chunks.append(
            Chunk(
                conv_id=conv.id,
                index=len(chunks),
                header_end=header_end,
                body_start=start,
                body_end=end,
                is_terminal=end == n,
            )
        )
        start = end
    return chunks


def render_chunk(chunk: Chunk, conv: Conversation, cfg: ChunkConfig) -> str:
    """Role-serialized chunk text with ellipsis markers.

    Layout: header, an ellipsis when the body does not immediately follow
    the header, the body, and a trailing ellipsis on every non-terminal
    chunk. Pieces are joined by single spaces; empty pieces are dropped.
    """
    pieces = []
    if chunk.header_end > 0:
        pieces.append(serialize_with_roles(conv.turns[: chunk.header_end]))
    if not chunk.body_is_contiguous:
        pieces.append(cfg.ellipsis_token)
    if chunk.body_end > chunk.body_start:
        pieces.append(serialize_with_roles(conv.turns[chunk.body_start : chunk.body_end]))
    if not chunk.is_terminal:
        pieces.append(cfg.ellipsis_token)
    return " ".join(pieces)


def build_chunk_training_examples(
    conv: Conversation, target_summary: str, cfg: ChunkConfig
) -> list[TrainingExample]:
    """One training example per chunk; every chunk targets the complete summary."""
    if not target_summary:
        raise ValueError("target_summary must be non-empty")
    return [
        TrainingExample(
            conv_id=conv.id,
            piece_id=f"chunk-{chunk.index}",
            source=render_chunk(chunk, conv, cfg),
            target=target_summary,
            method="chunking",
        )
        for chunk in build_chunks(conv, cfg)
    ]
