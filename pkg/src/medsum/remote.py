"""Subprocess and HTTP transports for external summarizer/embedding backends.

Subprocess wire format: one JSON request object per stdin line, one JSON
response object per stdout line; closing stdin ends the session. HTTP wire
format: POST /v1/summarize with a batched request body, POST /v1/embed for
vectors. Transport failures surface as retriable :class:`BackendError`;
schema breaches as :class:`ProtocolViolationError`.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import requests

from .backends import (
    BackendError,
    ProtocolViolationError,
    SummarizeRequest,
    SummarizeResponse,
)


@dataclass
class SubprocessSummarizer:
    """Runs a worker command once per batch, streaming JSON lines through it."""

    command: str
    timeout: Optional[float] = 300.0

    def summarize_many(self, batch: Sequence[SummarizeRequest]) -> list[SummarizeResponse]:
        argv = shlex.split(self.command)
        if not argv:
            raise BackendError("subprocess backend has an empty command", retriable=False)
        payload = "".join(json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in batch)
        try:
            completed = subprocess.run(
                argv,
                input=payload,
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except FileNotFoundError as exc:
            raise BackendError(f"worker command not found: {argv[0]!r}", retriable=False) from exc
        except subprocess.TimeoutExpired as exc:
            raise BackendError(f"worker timed out after {self.timeout}s") from exc
        if completed.returncode != 0:
            tail = completed.stderr.strip().splitlines()[-3:]
            raise BackendError(
                f"worker exited with status {completed.returncode}: {' | '.join(tail)}"
            )
        responses = []
        for line in completed.stdout.splitlines():
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolViolationError(f"worker emitted invalid JSON: {line[:120]!r}") from exc
            responses.append(_response_from_json(record))
        return responses


@dataclass
class HttpSummarizer:
    """POSTs request batches to a server implementing /v1/summarize."""

    base_url: str
    timeout: Optional[float] = 300.0
    session: requests.Session = field(default_factory=requests.Session, repr=False)

    def summarize_many(self, batch: Sequence[SummarizeRequest]) -> list[SummarizeResponse]:
        body = {"requests": [r.to_json() for r in batch]}
        payload = _post_json(self.session, self.base_url, "/v1/summarize", body, self.timeout)
        if "responses" not in payload or not isinstance(payload["responses"], list):
            raise ProtocolViolationError("summarize response body missing 'responses' list")
        return [_response_from_json(record) for record in payload["responses"]]


@dataclass
class HttpEmbedder:
    """POSTs texts to a server implementing /v1/embed; vectors must share one dimension."""

    base_url: str
    timeout: Optional[float] = 300.0
    session: requests.Session = field(default_factory=requests.Session, repr=False)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        payload = _post_json(
            self.session, self.base_url, "/v1/embed", {"texts": list(texts)}, self.timeout
        )
        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProtocolViolationError(
                f"embed response must carry {len(texts)} vectors, got "
                f"{len(vectors) if isinstance(vectors, list) else type(vectors).__name__}"
            )
        try:
            matrix = np.asarray(vectors, dtype=np.float64)
        except ValueError as exc:
            raise ProtocolViolationError("embed vectors are ragged or non-numeric") from exc
        if matrix.ndim != 2:
            raise ProtocolViolationError("embed vectors are ragged or non-numeric")
        return matrix


@dataclass
class HttpConceptExtractor:
    """Client for external concept extractors speaking the embed-style
    protocol: POST /v1/extract {"texts": [...]} -> {"concept_sets": [[id, ...], ...]}.

    Callable on a single text, so it plugs in wherever the lexicon-based
    extractor does (target selection, evaluation)."""

    base_url: str
    timeout: Optional[float] = 300.0
    session: requests.Session = field(default_factory=requests.Session, repr=False)

    def extract_many(self, texts: Sequence[str]) -> list[frozenset]:
        payload = _post_json(
            self.session, self.base_url, "/v1/extract", {"texts": list(texts)}, self.timeout
        )
        concept_sets = payload.get("concept_sets")
        if not isinstance(concept_sets, list) or len(concept_sets) != len(texts):
            raise ProtocolViolationError(
                f"extract response must carry {len(texts)} concept sets"
            )
        result = []
        for entry in concept_sets:
            if not isinstance(entry, list) or any(not isinstance(c, str) for c in entry):
                raise ProtocolViolationError("concept sets must be lists of id strings")
            result.append(frozenset(entry))
        return result

    def __call__(self, text: str) -> frozenset:
        return self.extract_many([text])[0]


def _post_json(session, base_url: str, path: str, body: dict, timeout) -> dict:
    url = base_url.rstrip("/") + path
    try:
        response = session.post(url, json=body, timeout=timeout)
    except requests.RequestException as exc:
        raise BackendError(f"POST {url} failed: {exc}") from exc
    if response.status_code != 200:
        detail = ""
        try:
            detail = response.json().get("error", "")
        except ValueError:
            detail = response.text[:200]
        raise BackendError(f"POST {url} returned {response.status_code}: {detail}")
    try:
        payload = response.json()
    except ValueError as exc:
        raise ProtocolViolationError(f"POST {url} returned non-JSON body") from exc
    if not isinstance(payload, dict):
        raise ProtocolViolationError(f"POST {url} returned a non-object body")
    return payload


def _response_from_json(record: object) -> SummarizeResponse:
    if not isinstance(record, dict) or "id" not in record or "summary" not in record:
        raise ProtocolViolationError(f"malformed response record: {record!r}")
    if not isinstance(record["summary"], str):
        raise ProtocolViolationError(f"response {record['id']!r}: summary must be a string")
    return SummarizeResponse(id=str(record["id"]), summary=record["summary"])
