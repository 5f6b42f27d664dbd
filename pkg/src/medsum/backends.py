"""Summarizer, embedding, and tokenizer protocols plus batch dispatch.

A backend is anything that turns summarize requests into responses: a
builtin mock, a subprocess speaking JSON lines, or an HTTP service.
:func:`summarize_batch` is the single entry point; it resolves a
:class:`BackendDescriptor`, fans requests out up to the descriptor's
concurrency limit, and enforces the id-bijection contract on responses.

Token accounting is deliberately model-free: the builtin tokenizer scales
whitespace word counts by a configurable tokens-per-word ratio, since the
true subword vocabulary lives inside whatever model the backend wraps.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence, runtime_checkable

import numpy as np


class BackendError(RuntimeError):
    """A backend call failed. ``retriable`` distinguishes transport hiccups
    from contract violations that retrying cannot fix."""

    def __init__(self, message: str, *, retriable: bool = True):
        super().__init__(message)
        self.retriable = retriable


class ProtocolViolationError(BackendError):
    """The backend broke the wire contract (missing, extra, or duplicate ids)."""

    def __init__(self, message: str):
        super().__init__(message, retriable=False)


@dataclass(frozen=True)
class SummarizeRequest:
    id: str
    input: str
    max_new_tokens: int = 512
    prefix: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("request id must be non-empty")
        if self.max_new_tokens < 1:
            raise ValueError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")

    def to_json(self) -> dict:
        record = {"id": self.id, "input": self.input, "max_new_tokens": self.max_new_tokens}
        if self.prefix is not None:
            record["prefix"] = self.prefix
        return record


@dataclass(frozen=True)
class SummarizeResponse:
    id: str
    summary: str

    def to_json(self) -> dict:
        return {"id": self.id, "summary": self.summary}


BACKEND_KINDS = ("builtin-mock", "subprocess", "http")

DEFAULT_TOKEN_LIMIT = 1024


@dataclass(frozen=True)
class BackendDescriptor:
    """Where a summarizer (or embedder) lives and how hard to drive it.

    ``endpoint`` is a builtin mock name ("lead1", "echo", ...), a subprocess
    command line, or an HTTP base URL, depending on ``kind``.
    """

    kind: str
    endpoint: str
    token_limit: int = DEFAULT_TOKEN_LIMIT
    max_concurrency: int = 1

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r} (expected one of {BACKEND_KINDS})")
        if self.token_limit < 1:
            raise ValueError(f"token_limit must be >= 1, got {self.token_limit}")
        if self.max_concurrency < 1:
            raise ValueError(f"max_concurrency must be >= 1, got {self.max_concurrency}")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "token_limit": self.token_limit,
            "max_concurrency": self.max_concurrency,
        }

    @classmethod
    def from_json(cls, record: dict) -> "BackendDescriptor":
        return cls(
            kind=record["kind"],
            endpoint=record["endpoint"],
            token_limit=record.get("token_limit", 1024),
            max_concurrency=record.get("max_concurrency", 1),
        )


@runtime_checkable
class Summarizer(Protocol):
    """One-request-at-a-time summarizer (all builtin mocks)."""

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse: ...


@runtime_checkable
class BatchSummarizer(Protocol):
    """Summarizer with a native batch call (subprocess and HTTP transports)."""

    def summarize_many(self, batch: Sequence[SummarizeRequest]) -> list[SummarizeResponse]: ...


@runtime_checkable
class EmbeddingProvider(Protocol):
    """Maps texts to fixed-dimension vectors; must be thread-safe."""

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


@runtime_checkable
class Tokenizer(Protocol):
    """Deterministic token counter; counts must be monotone over word prefixes."""

    def count(self, text: str) -> int: ...


@dataclass(frozen=True)
class WordTokenizer:
    """Counts whitespace words scaled by a tokens-per-word ratio, rounded up.

    The default 1.6 makes a 512-word chunk come out near 800 tokens, leaving
    headroom under a 1024-token model limit.
    """

    tokens_per_word: float = 1.6

    def __post_init__(self) -> None:
        if self.tokens_per_word <= 0:
            raise ValueError(f"tokens_per_word must be positive, got {self.tokens_per_word}")

    def count(self, text: str) -> int:
        words = len(text.split())
        return math.ceil(words * self.tokens_per_word)


def truncate_to_limit(tokenizer: Tokenizer, text: str, limit: int) -> str:
    """Longest word-prefix of ``text`` whose token count fits within ``limit``.

    Never splits a word; an oversized first word yields the empty string.
    The result is single-space joined, so pass normalized text if byte
    identity with the input matters.
    """
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    words = text.split()
    if tokenizer.count(" ".join(words)) <= limit:
        return " ".join(words)
    lo, hi = 0, len(words)  # invariant: prefix of lo fits, prefix of hi does not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tokenizer.count(" ".join(words[:mid])) <= limit:
            lo = mid
        else:
            hi = mid
    return " ".join(words[:lo])


def summarize_batch(
    backend,
    batch: Sequence[SummarizeRequest],
    *,
    lexicon=None,
) -> list[SummarizeResponse]:
    """Run a batch of requests and return responses in request order.

    ``backend`` may be a :class:`BackendDescriptor` or an already-built
    summarizer object. Request ids must be unique; the caller is responsible
    for truncating inputs to the backend's token limit. Raises
    :class:`ProtocolViolationError` if the responses are not a bijection
    over the request ids, :class:`BackendError` on transport failure.
    """
    batch = list(batch)
    if not batch:
        return []
    ids = [request.id for request in batch]
    if len(set(ids)) != len(ids):
        raise ProtocolViolationError(f"duplicate request ids in batch: {sorted(ids)}")

    max_concurrency = 1
    if isinstance(backend, BackendDescriptor):
        max_concurrency = backend.max_concurrency
        backend = resolve_summarizer(backend, lexicon=lexicon)

    if hasattr(backend, "summarize_many"):
        responses = backend.summarize_many(batch)
    elif max_concurrency > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=max_concurrency) as pool:
            responses = list(pool.map(backend.summarize, batch))
    else:
        responses = [backend.summarize(request) for request in batch]

    by_id: dict[str, SummarizeResponse] = {}
    for response in responses:
        if not isinstance(response.summary, str):
            raise ProtocolViolationError(f"response {response.id!r}: summary must be a string")
        if response.id in by_id:
            raise ProtocolViolationError(f"duplicate response id {response.id!r}")
        if response.id not in set(ids):
            raise ProtocolViolationError(f"unexpected response id {response.id!r}")
        by_id[response.id] = response
    missing = [rid for rid in ids if rid not in by_id]
    if missing:
        raise ProtocolViolationError(f"missing responses for ids: {missing}")
    return [by_id[rid] for rid in ids]


_MOCK_ENDPOINT = re.compile(r"(?P<name>[a-z]+)(?P<arg>\d+)?(?:@(?P<cap>\d+))?$")


def resolve_summarizer(descriptor: BackendDescriptor, *, lexicon=None):
    """Build the summarizer object a descriptor points at."""
    if descriptor.kind == "builtin-mock":
        return _resolve_mock(descriptor.endpoint, lexicon=lexicon)
    if descriptor.kind == "subprocess":
        from .remote import SubprocessSummarizer

        return SubprocessSummarizer(descriptor.endpoint)
    from .remote import HttpSummarizer

    return HttpSummarizer(descriptor.endpoint)


def resolve_embedder(descriptor: BackendDescriptor) -> EmbeddingProvider:
    """Build the embedding provider a descriptor points at.

    Builtin endpoint grammar: ``hash`` or ``hash@<dim>``.
    """
    if descriptor.kind == "builtin-mock":
        from .mocks import HashedBagEmbedder

        match = _MOCK_ENDPOINT.match(descriptor.endpoint)
        if match is None or match.group("name") != "hash":
            raise ValueError(f"unknown builtin embedder {descriptor.endpoint!r}")
        dim = int(match.group("cap")) if match.group("cap") else 256
        return HashedBagEmbedder(dim=dim)
    if descriptor.kind == "http":
        from .remote import HttpEmbedder

        return HttpEmbedder(descriptor.endpoint)
    raise ValueError(f"embedding backend kind {descriptor.kind!r} not supported")


def _resolve_mock(endpoint: str, *, lexicon=None):
    from .mocks import EchoMock, KeywordMock, LeadMock

    match = _MOCK_ENDPOINT.match(endpoint)
    if match is None:
        raise ValueError(f"unknown builtin mock {endpoint!r}")
    name = match.group("name")
    arg = match.group("arg")
    cap = int(match.group("cap")) if match.group("cap") else None
    if name == "lead":
        return LeadMock(sentences=int(arg) if arg else 1, max_words=cap)
    if name == "echo" and arg is None:
        return EchoMock(max_words=cap)
    if name == "keyword" and arg is None:
        if lexicon is None:
            raise ValueError("keyword mock requires a lexicon")
        return KeywordMock(lexicon=lexicon, max_words=cap)
    raise ValueError(f"unknown builtin mock {endpoint!r}")
