"""Lexicon-based medical concept extraction and reference-set voting.

The extractor is a deterministic stand-in for external concept systems:
a case-insensitive, punctuation-normalized longest-match scan over a
surface-form lexicon. Reference concept sets are filtered by majority
vote before scoring, so that a finding only counts when enough human
summaries mention it.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .rouge import PRF, harmonic_f1, tokenize


class LexiconError(ValueError):
    """Invalid lexicon definition (empty or ambiguous surface forms)."""


@dataclass(frozen=True)
class Concept:
    id: str
    canonical: str
    surfaces: tuple[str, ...]
    category: Optional[str] = None


class Lexicon:
    """A surface-form dictionary mapping normalized phrases to concept ids.

    Surfaces are normalized the way summaries are scanned (lowercase,
    non-alphanumeric runs as separators). A surface may belong to at most
    one concept; ambiguity is rejected at load time.
    """

    def __init__(self, concepts: Iterable[Concept]):
        self.concepts = tuple(concepts)
        self._index: dict[tuple[str, ...], str] = {}
        self._max_surface_tokens = 0
        for concept in self.concepts:
            if not concept.surfaces:
                raise LexiconError(f"concept {concept.id!r} has no surface forms")
            seen_here = set()
            for surface in concept.surfaces:
                key = tuple(tokenize(surface))
                if not key:
                    raise LexiconError(f"concept {concept.id!r}: empty surface {surface!r}")
                if key in seen_here:
                    raise LexiconError(
                        f"concept {concept.id!r}: duplicate surface {surface!r} after normalization"
                    )
                seen_here.add(key)
                owner = self._index.get(key)
                if owner is not None and owner != concept.id:
                    raise LexiconError(
                        f"surface {surface!r} is claimed by both {owner!r} and {concept.id!r}"
                    )
                self._index[key] = concept.id
                self._max_surface_tokens = max(self._max_surface_tokens, len(key))

    def __len__(self) -> int:
        return len(self.concepts)

    def lookup(self, token_key: tuple[str, ...]) -> Optional[str]:
        return self._index.get(token_key)

    @property
    def max_surface_tokens(self) -> int:
        return self._max_surface_tokens

    def filter_categories(self, categories: Optional[Sequence[str]]) -> "Lexicon":
        """Restrict to concepts whose category is in ``categories`` (None keeps all)."""
        if categories is None:
            return self
        wanted = set(categories)
        return Lexicon(c for c in self.concepts if c.category in wanted)

    def to_json(self) -> dict:
        return {
            "concepts": [
                {
                    "id": c.id,
                    "canonical": c.canonical,
                    "surfaces": list(c.surfaces),
                    **({"category": c.category} if c.category is not None else {}),
                }
                for c in self.concepts
            ]
        }

    @classmethod
    def from_json(cls, record: dict) -> "Lexicon":
        if "concepts" not in record or not isinstance(record["concepts"], list):
            raise LexiconError("lexicon JSON must have a 'concepts' list")
        concepts = []
        for entry in record["concepts"]:
            concepts.append(
                Concept(
                    id=entry["id"],
                    canonical=entry.get("canonical", entry["id"]),
                    surfaces=tuple(entry["surfaces"]),
                    category=entry.get("category"),
                )
            )
        return cls(concepts)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Lexicon":
        with open(path, "r", encoding="utf-8") as stream:
            return cls.from_json(json.load(stream))


def extract_concepts(text: str, lexicon: Lexicon) -> frozenset[str]:
    """Concept ids found by a longest-match scan over the normalized text.

    At each position the longest matching surface wins (scanning is
    left-to-right, so equal-length overlaps resolve leftmost); matched
    tokens are consumed, preventing nested rematches.
    """
    tokens = tokenize(text)
    found = set()
    i = 0
    n = len(tokens)
    while i < n:
        matched_len = 0
        for length in range(min(lexicon.max_surface_tokens, n - i), 0, -1):
            concept_id = lexicon.lookup(tuple(tokens[i : i + length]))
            if concept_id is not None:
                found.add(concept_id)
                matched_len = length
                break
        i += matched_len if matched_len else 1
    return frozenset(found)


def majority_vote_filter(reference_sets: Sequence[frozenset[str]]) -> frozenset[str]:
    """Concepts backed by enough references to be trusted.

    With three or more reference sets a concept must appear in at least
    three; with fewer it must appear in all of them.
    """
    if not reference_sets:
        raise ValueError("reference_sets must be non-empty")
    required = 3 if len(reference_sets) >= 3 else len(reference_sets)
    counts = Counter()
    for ref_set in reference_sets:
        counts.update(ref_set)
    return frozenset(cid for cid, count in counts.items() if count >= required)


def concept_prf(gen_set: frozenset[str], filtered_ref: frozenset[str]) -> PRF:
    """Set-overlap precision/recall/F1 between generated and reference concepts.

    Two empty sets agree perfectly and score 1 across the board (callers
    that prefer to skip vacuous conversations do so upstream).
    """
    if not gen_set and not filtered_ref:
        return PRF(precision=1.0, recall=1.0, f1=1.0)
    overlap = len(gen_set & filtered_ref)
    precision = overlap / len(gen_set) if gen_set else 0.0
    recall = overlap / len(filtered_ref) if filtered_ref else 0.0
    return PRF(precision=precision, recall=recall, f1=harmonic_f1(precision, recall))
