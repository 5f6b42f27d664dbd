"""Independent brute-force oracles for the test suite.

Each oracle re-derives an expected result by a different construction than
the implementation under test (boolean marking instead of sort-and-sweep,
full DP tables instead of rolling rows, clip-and-drop window enumeration,
direct formula evaluation) so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter


def window_oracle(n_turns: int, width: int, stride: int) -> list[tuple[int, int]]:
    """Sliding windows by clipping every start and dropping dominated windows."""
    if n_turns <= 0:
        return []
    windows = []
    for start in range(0, n_turns, stride):
        end = min(start + width, n_turns) - 1
        if windows and windows[-1][1] == end:
            continue  # fully contained in the previous window
        windows.append((start, end))
    return windows


def merge_oracle(ranges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Coalesce inclusive ranges by marking indices and reading maximal runs.

    Adjacent ranges (end + 1 == next start) produce contiguous marks, so
    they merge, matching the share-a-boundary rule.
    """
    if not ranges:
        return []
    low = min(start for start, _ in ranges)
    high = max(end for _, end in ranges)
    marked = [False] * (high - low + 1)
    for start, end in ranges:
        for i in range(start, end + 1):
            marked[i - low] = True
    merged = []
    i = 0
    while i < len(marked):
        if marked[i]:
            j = i
            while j + 1 < len(marked) and marked[j + 1]:
                j += 1
            merged.append((i + low, j + low))
            i = j + 1
        else:
            i += 1
    return merged


def ngram_list(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n_oracle(cand_tokens: list[str], ref_tokens: list[str], n: int) -> tuple[float, float, float]:
    """Clipped n-gram overlap computed with explicit per-gram min counts."""
    cand_grams = ngram_list(cand_tokens, n)
    ref_grams = ngram_list(ref_tokens, n)
    overlap = 0
    for gram in set(cand_grams):
        overlap += min(cand_grams.count(gram), ref_grams.count(gram))
    precision = overlap / len(cand_grams) if cand_grams else 0.0
    recall = overlap / len(ref_grams) if ref_grams else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def lcs_oracle(a: list[str], b: list[str]) -> int:
    """LCS length via the full (len(a)+1) x (len(b)+1) table."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def majority_oracle(reference_sets: list[frozenset]) -> frozenset:
    """Direct per-concept membership count."""
    threshold = 3 if len(reference_sets) >= 3 else len(reference_sets)
    union = set().union(*reference_sets) if reference_sets else set()
    kept = set()
    for concept in union:
        appearances = sum(1 for ref_set in reference_sets if concept in ref_set)
        if appearances >= threshold:
            kept.add(concept)
    return frozenset(kept)


def header_oracle(turn_word_counts: list[int], budget: int) -> int:
    """Smallest whole-turn prefix reaching the budget, via accumulate."""
    if budget == 0:
        return 0
    for count, total in enumerate(itertools.accumulate(turn_word_counts), start=1):
        if total >= budget:
            return count
    return len(turn_word_counts)


def pearson_oracle(a: list[float], b: list[float]) -> float:
    n = len(a)
    sum_a, sum_b = sum(a), sum(b)
    sum_aa = sum(x * x for x in a)
    sum_bb = sum(y * y for y in b)
    sum_ab = sum(x * y for x, y in zip(a, b))
    numerator = n * sum_ab - sum_a * sum_b
    denominator = math.sqrt(n * sum_aa - sum_a**2) * math.sqrt(n * sum_bb - sum_b**2)
    return numerator / denominator


def tau_b_oracle(a: list[float], b: list[float]) -> float:
    """Tau-b by explicit pair classification into C/D/tie-x/tie-y/tie-both."""
    concordant = discordant = ties_only_a = ties_only_b = 0
    n = len(a)
    for i, j in itertools.combinations(range(n), 2):
        if a[i] == a[j] and b[i] == b[j]:
            continue
        if a[i] == a[j]:
            ties_only_a += 1
        elif b[i] == b[j]:
            ties_only_b += 1
        elif (a[i] < a[j]) == (b[i] < b[j]):
            concordant += 1
        else:
            discordant += 1
    # denominator counts pairs untied in each variable separately
    untied_a = concordant + discordant + ties_only_b
    untied_b = concordant + discordant + ties_only_a
    return (concordant - discordant) / math.sqrt(untied_a * untied_b)


def kappa_oracle(a: list, b: list) -> float:
    """Cohen's kappa straight from the confusion matrix."""
    n = len(a)
    labels = sorted(set(a) | set(b), key=repr)
    confusion = {(x, y): 0 for x in labels for y in labels}
    for x, y in zip(a, b):
        confusion[(x, y)] += 1
    observed = sum(confusion[(label, label)] for label in labels) / n
    expected = 0.0
    for label in labels:
        row = sum(confusion[(label, y)] for y in labels)
        col = sum(confusion[(x, label)] for x in labels)
        expected += (row / n) * (col / n)
    if expected == 1.0:
        return 1.0
    return (observed - expected) / (1 - expected)


def clipped_count_overlap(candidate: Counter, reference: Counter) -> int:
    return sum(min(count, reference[key]) for key, count in candidate.items())
