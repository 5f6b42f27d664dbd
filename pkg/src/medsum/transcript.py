"""Transcript parsing, normalization, serialization, and windowing.

Conversations are ordered lists of speaker-annotated turns. All other
modules consume conversations through the helpers here: role-tagged
serialization, rule-based sentence splitting, word counting, and
sliding-window turn ranges. Every type is immutable and every function
is pure, so callers may parallelize freely.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Union


class TranscriptError(ValueError):
    """Malformed transcript input (bad JSON, bad schema, bad speaker)."""


class SpeakerRole(enum.Enum):
    DOCTOR = "doctor"
    PATIENT = "patient"
    OTHER = "other"

    @property
    def tag(self) -> str:
        """Bracketed tag used when serializing turns, e.g. ``[doctor]``."""
        return f"[{self.value}]"


def normalize_text(text: str) -> str:
    """Collapse all whitespace runs (including newlines and tabs) to single spaces."""
    return " ".join(text.split())


def count_words(text: str) -> int:
    """Number of whitespace-separated words. A word is any maximal run of non-whitespace."""
    return len(text.split())


@dataclass(frozen=True)
class Turn:
    """One uninterrupted utterance by one speaker.

    ``text`` is stored normalized: no newlines or tabs, single spaces between
    words.
    """

    speaker: SpeakerRole
    text: str

    @property
    def word_count(self) -> int:
        return count_words(self.text)


@dataclass(frozen=True)
class Conversation:
    """An ordered, non-empty sequence of turns with a non-empty id."""

    id: str
    turns: tuple[Turn, ...]

    def __post_init__(self) -> None:
        if not self.id:
            raise TranscriptError("conversation id must be non-empty")
        if not self.turns:
            raise TranscriptError(f"conversation {self.id!r} has no turns")

    @property
    def word_count(self) -> int:
        return sum(turn.word_count for turn in self.turns)

    def __len__(self) -> int:
        return len(self.turns)


def make_turn(speaker: Union[SpeakerRole, str], text: str) -> Turn:
    """Build a turn, validating the speaker label and normalizing the text."""
    if isinstance(speaker, str):
        try:
            speaker = SpeakerRole(speaker)
        except ValueError:
            valid = ", ".join(role.value for role in SpeakerRole)
            raise TranscriptError(
                f"unknown speaker label {speaker!r} (expected one of: {valid})"
            ) from None
    return Turn(speaker=speaker, text=normalize_text(text))


def parse_transcript(source: Union[bytes, str, IO[bytes], IO[str]]) -> list[Conversation]:
    """Parse transcript JSONL into conversations, preserving file order.

    Each line is one conversation:
    ``{"id": str, "turns": [{"speaker": "doctor"|"patient"|"other", "text": str}]}``.
    Blank lines are skipped. Raises :class:`TranscriptError` citing the
    1-based line number on malformed input.
    """
    conversations = []
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TranscriptError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        try:
            conversations.append(conversation_from_json(record))
        except TranscriptError as exc:
            raise TranscriptError(f"line {lineno}: {exc}") from None
    return conversations


def conversation_from_json(record: object) -> Conversation:
    """Build a conversation from one decoded transcript-JSONL record."""
    if not isinstance(record, dict):
        raise TranscriptError("record must be a JSON object")
    conv_id = record.get("id")
    if not isinstance(conv_id, str) or not conv_id:
        raise TranscriptError("missing or empty 'id'")
    raw_turns = record.get("turns")
    if not isinstance(raw_turns, list) or not raw_turns:
        raise TranscriptError(f"conversation {conv_id!r}: 'turns' must be a non-empty list")
    turns = []
    for i, raw in enumerate(raw_turns):
        if not isinstance(raw, dict) or "speaker" not in raw or "text" not in raw:
            raise TranscriptError(
                f"conversation {conv_id!r}: turn {i} must have 'speaker' and 'text'"
            )
        turns.append(make_turn(raw["speaker"], str(raw["text"])))
    return Conversation(id=conv_id, turns=tuple(turns))


def conversation_to_json(conv: Conversation) -> dict:
    """Inverse of :func:`conversation_from_json` (modulo normalization)."""
    return {
        "id": conv.id,
        "turns": [{"speaker": t.speaker.value, "text": t.text} for t in conv.turns],
    }


def write_transcript_jsonl(conversations: Iterable[Conversation], stream: IO[str]) -> None:
    for conv in conversations:
        stream.write(json.dumps(conversation_to_json(conv), ensure_ascii=False) + "\n")


def serialize_with_roles(turns: Iterable[Turn]) -> str:
    """Render turns as ``[role] text`` segments joined by single spaces."""
    return " ".join(f"{turn.speaker.tag} {turn.text}" for turn in turns)


# Trailing-word forms that never terminate a sentence despite ending in ".".
_ABBREVIATIONS = frozenset({"dr.", "mr.", "mrs.", "ms.", "mg.", "p.o."})

_BOUNDARY = re.compile(r"[.!?](?=\s+[A-Z0-9])")


@dataclass(frozen=True)
class SentenceList:
    """Sentences split from one summary paragraph, in order."""

    sentences: tuple[str, ...]

    def __iter__(self) -> Iterator[str]:
        return iter(self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)


def split_sentences(paragraph: str) -> SentenceList:
    """Split a paragraph on sentence-final punctuation.

    A boundary is ``.``, ``!`` or ``?`` followed by whitespace and an
    uppercase letter or digit. A ``.`` that ends a known abbreviation
    (Dr., Mr., Mrs., Ms., mg., p.o.) never terminates a sentence. Joining
    the result with single spaces reproduces the whitespace-collapsed input.
    """
    text = normalize_text(paragraph)
    if not text:
        return SentenceList(sentences=())
    sentences = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        end = match.end()
        if text[end - 1] == "." and _trailing_word(text, end).lower() in _ABBREVIATIONS:
            continue
        sentences.append(text[start:end])
        start = end + 1  # skip the single space following the boundary
    if start < len(text):
        sentences.append(text[start:])
    return SentenceList(sentences=tuple(sentences))


def _trailing_word(text: str, end: int) -> str:
    """The maximal non-space run ending at position ``end`` (exclusive)."""
    begin = end
    while begin > 0 and not text[begin - 1].isspace():
        begin -= 1
    return text[begin:end]


def window_turns(conv: Conversation, width: int, stride: int) -> list[tuple[int, int]]:
    """Sliding windows over turn indices as inclusive ``(start, end)`` pairs.

    Full windows start at 0 and advance by ``stride``. If the last full
    window does not end at the final turn, one trailing (possibly shorter)
    window is appended so the conversation tail is always covered.
    """
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    n = len(conv)
    windows: list[tuple[int, int]] = []
    start = 0
    while start + width <= n:
        windows.append((start, start + width - 1))
        start += stride
    if not windows:
        return [(0, n - 1)]
    if windows[-1][1] != n - 1 and start < n:
        windows.append((start, n - 1))
    return windows


def _iter_lines(source: Union[bytes, str, IO[bytes], IO[str]]) -> Iterator[str]:
    if isinstance(source, bytes):
        yield from source.decode("utf-8").splitlines()
    elif isinstance(source, str):
        yield from source.splitlines()
    else:
        for line in source:
            yield line.decode("utf-8") if isinstance(line, bytes) else line
