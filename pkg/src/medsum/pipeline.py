"""Single-stage and multistage inference orchestration with run persistence.

A run maps conversations to generated summaries through one of three modes:
direct truncation (single), chunk-then-rewrite (multistage-chunking), or
snippet-then-rewrite (multistage-sentbert). Backend failures fail only the
affected conversation; partial stage-1 outputs are persisted for debugging.
A run directory contains config.json, generated.jsonl, failures.jsonl, and
pieces/ with stage-1 outputs, all written without timestamps so identical
configs over deterministic backends reproduce byte-identical artifacts.
"""

from __future__ import annotations

import json
import urllib.parse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .alignment import AlignConfig, build_inference_snippets
from .backends import (
    DEFAULT_TOKEN_LIMIT,
    BackendDescriptor,
    BackendError,
    SummarizeRequest,
    Tokenizer,
    summarize_batch,
    truncate_to_limit,
)
from .chunking import ChunkConfig, build_chunks, render_chunk
from .records import SummaryRecord
from .transcript import Conversation, serialize_with_roles

MODES = ("single", "multistage-chunking", "multistage-sentbert")

GENDER_SENTENCES = {"female": "The patient is a female.", "male": "The patient is a male."}


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one inference run."""

    mode: str
    stage1_backend: BackendDescriptor
    stage2_backend: Optional[BackendDescriptor] = None
    chunk_cfg: ChunkConfig = ChunkConfig()
    align_cfg: AlignConfig = AlignConfig()
    gender_prefix: Optional[str] = None
    output_dir: str = "run"
    seed: int = 0
    max_new_tokens: int = 512

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r} (expected one of {MODES})")
        if self.mode != "single" and self.stage2_backend is None:
            raise ValueError(f"mode {self.mode!r} requires a stage2 backend")
        if self.gender_prefix is not None and self.gender_prefix not in GENDER_SENTENCES:
            raise ValueError(
                f"gender_prefix must be one of {sorted(GENDER_SENTENCES)}, got {self.gender_prefix!r}"
            )
        if self.max_new_tokens < 1:
            raise ValueError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")

    @property
    def run_id(self) -> str:
        return self.mode

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "stage1_backend": self.stage1_backend.to_json(),
            "stage2_backend": self.stage2_backend.to_json() if self.stage2_backend else None,
            "chunk_cfg": {
                "chunk_word_limit": self.chunk_cfg.chunk_word_limit,
                "header_fraction": self.chunk_cfg.header_fraction,
                "ellipsis_token": self.chunk_cfg.ellipsis_token,
            },
            "align_cfg": {
                "window_turns": self.align_cfg.window_turns,
                "train_stride": self.align_cfg.train_stride,
                "infer_stride": self.align_cfg.infer_stride,
                "similarity_threshold": self.align_cfg.similarity_threshold,
            },
            "gender_prefix": self.gender_prefix,
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "max_new_tokens": self.max_new_tokens,
        }


class ConversationFailure(Exception):
    """A backend error scoped to one conversation; carries any stage-1
    pieces produced before the failure so they can be persisted."""

    def __init__(self, conv_id: str, stage: str, cause: Exception, pieces=None):
        super().__init__(f"{conv_id}: {stage} failed: {cause}")
        self.conv_id = conv_id
        self.stage = stage
        self.cause = cause
        self.pieces = list(pieces or [])


def _apply_gender(text: str, gender: Optional[str]) -> str:
    if gender is None:
        return text
    return f"{GENDER_SENTENCES[gender]} {text}"


def _prepare_input(text: str, cfg: RunConfig, backend, tokenizer: Tokenizer) -> str:
    # backend may be a bare summarizer object (tests); descriptors carry the limit
    limit = getattr(backend, "token_limit", DEFAULT_TOKEN_LIMIT)
    return truncate_to_limit(tokenizer, _apply_gender(text, cfg.gender_prefix), limit)


def single_stage(
    conv: Conversation,
    backend: BackendDescriptor,
    cfg: RunConfig,
    tokenizer: Tokenizer,
    *,
    lexicon=None,
) -> SummaryRecord:
    """Summarize the whole role-serialized conversation in one call,
    truncated to the backend's token limit."""
    request = SummarizeRequest(
        id=f"{conv.id}/full",
        input=_prepare_input(serialize_with_roles(conv.turns), cfg, backend, tokenizer),
        max_new_tokens=cfg.max_new_tokens,
    )
    try:
        response = summarize_batch(backend, [request], lexicon=lexicon)[0]
    except BackendError as exc:
        raise ConversationFailure(conv.id, "summarize", exc) from exc
    return SummaryRecord(conv_id=conv.id, origin=cfg.run_id, text=response.summary)


def _run_stage1(
    conv: Conversation,
    piece_ids: Sequence[str],
    piece_texts: Sequence[str],
    backend: BackendDescriptor,
    cfg: RunConfig,
    tokenizer: Tokenizer,
    lexicon,
) -> list[str]:
    requests = [
        SummarizeRequest(
            id=f"{conv.id}/{piece_id}",
            input=_prepare_input(text, cfg, backend, tokenizer),
            max_new_tokens=cfg.max_new_tokens,
        )
        for piece_id, text in zip(piece_ids, piece_texts)
    ]
    try:
        responses = summarize_batch(backend, requests, lexicon=lexicon)
    except BackendError as exc:
        raise ConversationFailure(conv.id, "stage1", exc) from exc
    return [response.summary for response in responses]


def _run_stage2(
    conv: Conversation,
    pieces: Sequence[str],
    backend: BackendDescriptor,
    cfg: RunConfig,
    tokenizer: Tokenizer,
    lexicon,
) -> str:
    request = SummarizeRequest(
        id=f"{conv.id}/final",
        input=_prepare_input(" ".join(pieces), cfg, backend, tokenizer),
        max_new_tokens=cfg.max_new_tokens,
    )
    try:
        return summarize_batch(backend, [request], lexicon=lexicon)[0].summary
    except BackendError as exc:
        raise ConversationFailure(conv.id, "stage2", exc, pieces=pieces) from exc


def multistage_chunking(
    conv: Conversation,
    stage1: BackendDescriptor,
    stage2: BackendDescriptor,
    cfg: RunConfig,
    tokenizer: Tokenizer,
    *,
    lexicon=None,
) -> SummaryRecord:
    """Summarize each chunk, then rewrite the concatenated partial summaries."""
    chunks = build_chunks(conv, cfg.chunk_cfg)
    piece_ids = [f"chunk-{chunk.index}" for chunk in chunks]
    piece_texts = [render_chunk(chunk, conv, cfg.chunk_cfg) for chunk in chunks]
    pieces = _run_stage1(conv, piece_ids, piece_texts, stage1, cfg, tokenizer, lexicon)
    final = _run_stage2(conv, pieces, stage2, cfg, tokenizer, lexicon)
    return SummaryRecord(
        conv_id=conv.id, origin=cfg.run_id, text=final, stage1_pieces=tuple(pieces)
    )


def multistage_sentbert(
    conv: Conversation,
    stage1: BackendDescriptor,
    stage2: BackendDescriptor,
    cfg: RunConfig,
    tokenizer: Tokenizer,
    *,
    lexicon=None,
) -> SummaryRecord:
    """Summarize each overlapping snippet, then rewrite the concatenation.

    Snippet summaries are concatenated unfiltered, in snippet order; the
    stage-2 model is responsible for denoising irrelevant ones.
    """
    snippets = build_inference_snippets(conv, cfg.align_cfg)
    piece_ids = [f"snippet-{i}" for i in range(len(snippets))]
    piece_texts = [snippet.rendered for snippet in snippets]
    pieces = _run_stage1(conv, piece_ids, piece_texts, stage1, cfg, tokenizer, lexicon)
    final = _run_stage2(conv, pieces, stage2, cfg, tokenizer, lexicon)
    return SummaryRecord(
        conv_id=conv.id, origin=cfg.run_id, text=final, stage1_pieces=tuple(pieces)
    )


def summarize_conversation(
    conv: Conversation, cfg: RunConfig, tokenizer: Tokenizer, *, lexicon=None
) -> SummaryRecord:
    """Dispatch one conversation through the configured mode."""
    if cfg.mode == "single":
        return single_stage(conv, cfg.stage1_backend, cfg, tokenizer, lexicon=lexicon)
    if cfg.mode == "multistage-chunking":
        return multistage_chunking(
            conv, cfg.stage1_backend, cfg.stage2_backend, cfg, tokenizer, lexicon=lexicon
        )
    return multistage_sentbert(
        conv, cfg.stage1_backend, cfg.stage2_backend, cfg, tokenizer, lexicon=lexicon
    )


@dataclass
class RunResult:
    """Everything one pipeline run produced."""

    output_dir: Path
    records: list[SummaryRecord] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_pipeline(
    conversations: Sequence[Conversation],
    cfg: RunConfig,
    tokenizer: Tokenizer,
    *,
    lexicon=None,
    workers: int = 1,
) -> RunResult:
    """Run every conversation through the configured mode and persist artifacts.

    Conversations are independent units of work; with ``workers`` > 1 they
    run concurrently, but artifacts are always written in input order. A
    failed conversation is recorded in failures.jsonl and skipped; it never
    aborts the run.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    def process(conv: Conversation):
        try:
            return summarize_conversation(conv, cfg, tokenizer, lexicon=lexicon)
        except ConversationFailure as failure:
            return failure

    if workers == 1 or len(conversations) <= 1:
        outcomes = [process(conv) for conv in conversations]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(process, conversations))

    result = RunResult(output_dir=Path(cfg.output_dir))
    pieces_by_conv: dict[str, list[str]] = {}
    for conv, outcome in zip(conversations, outcomes):
        if isinstance(outcome, ConversationFailure):
            result.failures.append(
                {"conv_id": outcome.conv_id, "stage": outcome.stage, "error": str(outcome.cause)}
            )
            if outcome.pieces:
                pieces_by_conv[conv.id] = outcome.pieces
        else:
            result.records.append(outcome)
            if outcome.stage1_pieces is not None:
                pieces_by_conv[conv.id] = list(outcome.stage1_pieces)

    _persist_run(result, cfg, pieces_by_conv)
    return result


def _persist_run(result: RunResult, cfg: RunConfig, pieces_by_conv: dict[str, list[str]]) -> None:
    out = result.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "pieces").mkdir(exist_ok=True)
    _write_json(out / "config.json", cfg.to_json())
    with open(out / "generated.jsonl", "w", encoding="utf-8") as stream:
        for record in result.records:
            stream.write(json.dumps(record.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
    with open(out / "failures.jsonl", "w", encoding="utf-8") as stream:
        for failure in result.failures:
            stream.write(json.dumps(failure, ensure_ascii=False, sort_keys=True) + "\n")
    piece_prefix = "chunk" if cfg.mode == "multistage-chunking" else "snippet"
    for conv_id, pieces in pieces_by_conv.items():
        path = out / "pieces" / f"{_safe_filename(conv_id)}.jsonl"
        with open(path, "w", encoding="utf-8") as stream:
            for index, piece in enumerate(pieces):
                line = {"piece_id": f"{piece_prefix}-{index}", "summary": piece}
                stream.write(json.dumps(line, ensure_ascii=False, sort_keys=True) + "\n")


def load_run(run_dir: Union[str, Path]) -> tuple[dict, list[SummaryRecord], list[dict]]:
    """Read back a persisted run: (config, generated records, failures)."""
    run_dir = Path(run_dir)
    with open(run_dir / "config.json", "r", encoding="utf-8") as stream:
        config = json.load(stream)
    records = []
    with open(run_dir / "generated.jsonl", "r", encoding="utf-8") as stream:
        for line in stream:
            if line.strip():
                records.append(SummaryRecord.from_json(json.loads(line)))
    failures = []
    failures_path = run_dir / "failures.jsonl"
    if failures_path.exists():
        with open(failures_path, "r", encoding="utf-8") as stream:
            failures = [json.loads(line) for line in stream if line.strip()]
    return config, records, failures


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(payload, stream, ensure_ascii=False, sort_keys=True, indent=2)
        stream.write("\n")


def _safe_filename(name: str) -> str:
    return urllib.parse.quote(name, safe="")
