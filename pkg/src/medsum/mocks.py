"""Deterministic builtin backends for tests and desk-scale runs.

Three summarizer mocks (extractive lead-k, echo, lexicon-keyword) and a
feature-hashed bag-of-words embedder. All are pure functions of their
request, so runs using them are byte-reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .backends import SummarizeRequest, SummarizeResponse
from .concepts import Lexicon, extract_concepts
from .rouge import tokenize
from .transcript import split_sentences

_ROLE_TAGS = frozenset({"[doctor]", "[patient]", "[other]"})


def strip_markup(text: str, ellipsis_token: str = "...") -> str:
    """Drop role tags and ellipsis tokens, keeping the spoken words."""
    kept = [w for w in text.split() if w not in _ROLE_TAGS and w != ellipsis_token]
    return " ".join(kept)


def _cap_words(text: str, max_words: Optional[int]) -> str:
    if max_words is None:
        return text
    return " ".join(text.split()[:max_words])


def _finish(request: SummarizeRequest, summary: str, max_words: Optional[int]) -> SummarizeResponse:
    if request.prefix:
        summary = f"{request.prefix} {summary}".strip()
    return SummarizeResponse(id=request.id, summary=_cap_words(summary, max_words))


@dataclass(frozen=True)
class LeadMock:
    """Extractive lead-k: the first ``sentences`` sentences of the input body,
    optionally capped at ``max_words`` words."""

    sentences: int = 1
    max_words: Optional[int] = None

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse:
        body = strip_markup(request.input)
        lead = " ".join(list(split_sentences(body))[: self.sentences])
        return _finish(request, lead, self.max_words)


@dataclass(frozen=True)
class EchoMock:
    """Returns the input unchanged (optionally word-capped)."""

    max_words: Optional[int] = None

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse:
        return _finish(request, request.input, self.max_words)


@dataclass(frozen=True)
class KeywordMock:
    """Copies the input sentences that contain at least one lexicon hit,
    making concept-metric tests meaningful without a neural model."""

    lexicon: Lexicon
    max_words: Optional[int] = None

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse:
        body = strip_markup(request.input)
        hits = [s for s in split_sentences(body) if extract_concepts(s, self.lexicon)]
        return _finish(request, " ".join(hits), self.max_words)


@dataclass(frozen=True)
class HashedBagEmbedder:
    """Feature-hashed bag-of-words vectors with a fixed, salt-free hash.

    Tokens hash to a bucket and a sign via blake2b, so identical texts embed
    identically across processes and platforms. Not a semantic model; a
    deterministic stand-in for a neural sentence encoder.
    """

    dim: int = 256

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        vectors = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in tokenize(text):
                digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
                value = int.from_bytes(digest, "big")
                sign = 1.0 if value & 1 else -1.0
                vectors[row, (value >> 1) % self.dim] += sign
        return vectors
