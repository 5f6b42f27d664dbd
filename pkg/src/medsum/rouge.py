"""ROUGE-1/2/L with a fully pinned, in-repo tokenization.

Tokenization: lowercase, split on any non-alphanumeric run, no stemming,
no stopword removal. ROUGE-N uses clipped multiset n-gram overlap;
ROUGE-L uses the longest common subsequence over the whole summary as one
token sequence. These settings are recorded in every evaluation report
header so scores are comparable across runs.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class PRF:
    """A precision/recall/F1 triple; F1 is 0 when precision + recall is 0."""

    precision: float
    recall: float
    f1: float

    def to_json(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def prf_from_counts(overlap: float, candidate_total: float, reference_total: float) -> PRF:
    precision = overlap / candidate_total if candidate_total > 0 else 0.0
    recall = overlap / reference_total if reference_total > 0 else 0.0
    return PRF(precision=precision, recall=recall, f1=harmonic_f1(precision, recall))


def harmonic_f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int) -> PRF:
    """Clipped n-gram overlap precision/recall/F1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    candidate_counts = ngrams(tokenize(candidate), n)
    reference_counts = ngrams(tokenize(reference), n)
    overlap = sum((candidate_counts & reference_counts).values())
    return prf_from_counts(
        overlap, sum(candidate_counts.values()), sum(reference_counts.values())
    )


def rouge_l(candidate: str, reference: str) -> PRF:
    """LCS-based precision/recall/F1 over whole-summary token sequences."""
    candidate_tokens = tokenize(candidate)
    reference_tokens = tokenize(reference)
    length = lcs_length(candidate_tokens, reference_tokens)
    return prf_from_counts(length, len(candidate_tokens), len(reference_tokens))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length, O(len(a) * len(b)) with two rows."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    for item in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if item == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


@dataclass(frozen=True)
class RougeScores:
    """ROUGE-1/2/L score triples for one candidate/reference comparison
    (or an average of several)."""

    rouge1: PRF
    rouge2: PRF
    rougeL: PRF

    def to_json(self) -> dict:
        return {
            "rouge1": self.rouge1.to_json(),
            "rouge2": self.rouge2.to_json(),
            "rougeL": self.rougeL.to_json(),
        }


def score_pair(candidate: str, reference: str) -> RougeScores:
    return RougeScores(
        rouge1=rouge_n(candidate, reference, 1),
        rouge2=rouge_n(candidate, reference, 2),
        rougeL=rouge_l(candidate, reference),
    )


def mean_prf(values: Sequence[PRF]) -> PRF:
    if not values:
        raise ValueError("cannot average an empty list of scores")
    n = len(values)
    return PRF(
        precision=sum(v.precision for v in values) / n,
        recall=sum(v.recall for v in values) / n,
        f1=sum(v.f1 for v in values) / n,
    )


def mean_scores(values: Sequence[RougeScores]) -> RougeScores:
    if not values:
        raise ValueError("cannot average an empty list of scores")
    return RougeScores(
        rouge1=mean_prf([v.rouge1 for v in values]),
        rouge2=mean_prf([v.rouge2 for v in values]),
        rougeL=mean_prf([v.rougeL for v in values]),
    )
