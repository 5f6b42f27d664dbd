"""Shared record types and their JSONL wire formats.

TrainingExample is the fine-tuning export unit shared by the chunking and
alignment dataset builders. SummaryRecord holds one generated or reference
summary bound to a conversation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Optional, Union

from .transcript import normalize_text


@dataclass(frozen=True)
class TrainingExample:
    """One (source, target) fine-tuning pair with provenance.

    ``piece_id`` identifies the conversation piece the source came from
    ("full" for single-stage, "chunk-<i>" for chunking, "<annotator>:sent-<i>"
    for alignment pairs). ``method`` is one of "single", "chunking", "sentbert".
    """

    conv_id: str
    piece_id: str
    source: str
    target: str
    method: str

    def to_json(self) -> dict:
        return {
            "conv_id": self.conv_id,
            "piece_id": self.piece_id,
            "source": self.source,
            "target": self.target,
            "method": self.method,
        }

    @classmethod
    def from_json(cls, record: dict) -> "TrainingExample":
        return cls(
            conv_id=record["conv_id"],
            piece_id=record["piece_id"],
            source=record["source"],
            target=record["target"],
            method=record["method"],
        )


@dataclass(frozen=True)
class SummaryRecord:
    """A summary (generated or human reference) for one conversation.

    ``origin`` is the annotator id for references or the run id for
    generated summaries. ``stage1_pieces`` keeps the intermediate partial
    summaries of multistage runs, in piece order.
    """

    conv_id: str
    origin: str
    text: str
    stage1_pieces: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "text", normalize_text(self.text))
        if self.stage1_pieces is not None:
            object.__setattr__(
                self, "stage1_pieces", tuple(normalize_text(p) for p in self.stage1_pieces)
            )

    def to_json(self) -> dict:
        return {
            "conv_id": self.conv_id,
            "origin": self.origin,
            "text": self.text,
            "stage1_pieces": list(self.stage1_pieces) if self.stage1_pieces is not None else None,
        }

    @classmethod
    def from_json(cls, record: dict) -> "SummaryRecord":
        pieces = record.get("stage1_pieces")
        return cls(
            conv_id=record["conv_id"],
            origin=record["origin"],
            text=record["text"],
            stage1_pieces=tuple(pieces) if pieces is not None else None,
        )


def load_references(source: Union[str, Path, IO[str]]) -> dict[str, list[SummaryRecord]]:
    """Read reference-summary JSONL into a conv_id -> references map.

    Each line is ``{"conv_id": str, "annotator_id": str, "summary": str}``.
    References keep file order within a conversation.
    """
    refs: dict[str, list[SummaryRecord]] = {}
    for lineno, record in _iter_jsonl(source):
        for key in ("conv_id", "annotator_id", "summary"):
            if key not in record:
                raise ValueError(f"reference line {lineno}: missing {key!r}")
        rec = SummaryRecord(
            conv_id=record["conv_id"], origin=record["annotator_id"], text=record["summary"]
        )
        refs.setdefault(rec.conv_id, []).append(rec)
    return refs


def write_jsonl(records: Iterable[dict], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as stream:
        for record in records:
            stream.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def read_jsonl(path: Union[str, Path]) -> list[dict]:
    with open(path, "r", encoding="utf-8") as stream:
        return [record for _, record in _iter_jsonl(stream)]


def _iter_jsonl(source: Union[str, Path, IO[str]]):
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as stream:
            yield from _iter_jsonl(stream)
        return
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise ValueError(f"line {lineno}: expected a JSON object")
        yield lineno, record
