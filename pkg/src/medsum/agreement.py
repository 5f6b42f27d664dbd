"""Inter-rater agreement statistics: Pearson, Kendall tau-b, Cohen's kappa.

Pearson and Kendall treat the paired scores as numeric; kappa treats them
as categorical labels. Degenerate inputs (zero variance, all-tied lists)
yield NaN with an explicit flag rather than raising.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class AgreementStats:
    pearson: float
    kendall_tau: float
    cohens_kappa: float
    pearson_defined: bool = True
    kendall_defined: bool = True

    def to_json(self) -> dict:
        return {
            "pearson": self.pearson if self.pearson_defined else None,
            "kendall_tau": self.kendall_tau if self.kendall_defined else None,
            "cohens_kappa": self.cohens_kappa,
            "pearson_defined": self.pearson_defined,
            "kendall_defined": self.kendall_defined,
        }


def rater_agreement(scores_a: Sequence[float], scores_b: Sequence[float]) -> AgreementStats:
    """All three agreement statistics for two equal-length score lists."""
    _validate(scores_a, scores_b)
    rho, rho_defined = pearson_rho(scores_a, scores_b)
    tau, tau_defined = kendall_tau_b(scores_a, scores_b)
    return AgreementStats(
        pearson=rho,
        kendall_tau=tau,
        cohens_kappa=cohens_kappa(scores_a, scores_b),
        pearson_defined=rho_defined,
        kendall_defined=tau_defined,
    )


def pearson_rho(scores_a: Sequence[float], scores_b: Sequence[float]) -> tuple[float, bool]:
    """Pearson correlation; (nan, False) when either list has zero variance."""
    _validate(scores_a, scores_b)
    n = len(scores_a)
    mean_a = sum(scores_a) / n
    mean_b = sum(scores_b) / n
    dev_a = [x - mean_a for x in scores_a]
    dev_b = [y - mean_b for y in scores_b]
    var_a = sum(d * d for d in dev_a)
    var_b = sum(d * d for d in dev_b)
    if var_a == 0.0 or var_b == 0.0:
        return math.nan, False
    cov = sum(da * db for da, db in zip(dev_a, dev_b))
    return cov / math.sqrt(var_a * var_b), True


def kendall_tau_b(scores_a: Sequence[float], scores_b: Sequence[float]) -> tuple[float, bool]:
    """Tie-corrected Kendall rank correlation; (nan, False) when a list is all ties."""
    _validate(scores_a, scores_b)
    n = len(scores_a)
    concordant = 0
    discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            sign = (scores_a[i] - scores_a[j]) * (scores_b[i] - scores_b[j])
            if sign > 0:
                concordant += 1
            elif sign < 0:
                discordant += 1
    n0 = n * (n - 1) // 2
    ties_a = sum(t * (t - 1) // 2 for t in Counter(scores_a).values())
    ties_b = sum(t * (t - 1) // 2 for t in Counter(scores_b).values())
    denominator = math.sqrt((n0 - ties_a) * (n0 - ties_b))
    if denominator == 0.0:
        return math.nan, False
    return (concordant - discordant) / denominator, True


def cohens_kappa(scores_a: Sequence[float], scores_b: Sequence[float]) -> float:
    """Cohen's kappa over the scores treated as categorical labels.

    When expected agreement is 1 (both raters locked on the same single
    label) observed agreement is necessarily 1 too, and kappa is 1.
    """
    _validate(scores_a, scores_b)
    n = len(scores_a)
    observed = sum(1 for x, y in zip(scores_a, scores_b) if x == y) / n
    marginal_a = Counter(scores_a)
    marginal_b = Counter(scores_b)
    expected = sum(
        (marginal_a[label] / n) * (marginal_b[label] / n) for label in marginal_a
    )
    if math.isclose(expected, 1.0):
        return 1.0
    return (observed - expected) / (1.0 - expected)


def _validate(scores_a: Sequence[float], scores_b: Sequence[float]) -> None:
    if len(scores_a) != len(scores_b):
        raise ValueError(f"score lists differ in length: {len(scores_a)} vs {len(scores_b)}")
    if len(scores_a) < 2:
        raise ValueError("need at least 2 paired scores")
