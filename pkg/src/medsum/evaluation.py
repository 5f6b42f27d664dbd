"""Multi-reference evaluation: aggregation, buckets, baselines, reports.

Generated summaries are scored against every reference of their
conversation two ways: "mean-of-mean" averages scores over all references;
"mean-of-best" scores every measure against the single reference with the
highest ROUGE-1 F1. Concept scores compare extracted findings against the
majority-voted union of the references' findings. Reports also support
token-count bucket breakdowns and two context baselines: random training
targets and leave-one-out scoring among the references themselves.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .concepts import Lexicon, concept_prf, extract_concepts, majority_vote_filter
from .records import SummaryRecord
from .rouge import PRF, RougeScores, mean_prf, mean_scores, score_pair
from .transcript import Conversation, serialize_with_roles

BUCKET_EDGES = (512, 1024, 2048, 4096)


def bucket_index(token_count: int) -> int:
    """Index of the token bucket: [0,512], (512,1024], (1024,2048], (2048,4096], (4096,inf)."""
    for index, edge in enumerate(BUCKET_EDGES):
        if token_count <= edge:
            return index
    return len(BUCKET_EDGES)


def bucket_label(index: int) -> str:
    if index == 0:
        return f"[0, {BUCKET_EDGES[0]}]"
    if index == len(BUCKET_EDGES):
        return f"({BUCKET_EDGES[-1]}, inf)"
    return f"({BUCKET_EDGES[index - 1]}, {BUCKET_EDGES[index]}]"


def aggregate_multi_reference(
    gen: SummaryRecord, refs: Sequence[SummaryRecord]
) -> tuple[RougeScores, RougeScores]:
    """(mean-of-mean, mean-of-best) ROUGE for one generated summary.

    Mean-of-best reports every measure against the reference that maximizes
    ROUGE-1 F1; ties keep the first reference in input order.
    """
    if not refs:
        raise ValueError(f"no references for conversation {gen.conv_id!r}")
    scored = [score_pair(gen.text, ref.text) for ref in refs]
    best = scored[0]
    for scores in scored[1:]:
        if scores.rouge1.f1 > best.rouge1.f1:
            best = scores
    return mean_scores(scored), best


@dataclass(frozen=True)
class ConversationEval:
    """Per-conversation evaluation entry."""

    conv_id: str
    n_refs: int
    mean_of_mean: RougeScores
    mean_of_best: RougeScores
    concept: Optional[PRF]
    token_count: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "conv_id": self.conv_id,
            "n_refs": self.n_refs,
            "rouge_mean_of_mean": self.mean_of_mean.to_json(),
            "rouge_mean_of_best": self.mean_of_best.to_json(),
            "concept": self.concept.to_json() if self.concept else None,
            "token_count": self.token_count,
        }


@dataclass(frozen=True)
class BucketRow:
    label: str
    count: int
    mean_of_mean: Optional[RougeScores]
    concept: Optional[PRF]

    def to_json(self) -> dict:
        return {
            "bucket": self.label,
            "count": self.count,
            "rouge_mean_of_mean": self.mean_of_mean.to_json() if self.mean_of_mean else None,
            "concept": self.concept.to_json() if self.concept else None,
        }


@dataclass(frozen=True)
class BaselineResult:
    mean_of_mean: RougeScores
    mean_of_best: RougeScores
    pairs: int
    skipped: int = 0

    def to_json(self) -> dict:
        return {
            "rouge_mean_of_mean": self.mean_of_mean.to_json(),
            "rouge_mean_of_best": self.mean_of_best.to_json(),
            "pairs": self.pairs,
            "skipped": self.skipped,
        }


def draw_training_indices(count: int, n_targets: int, seed: int) -> list[int]:
    """Seeded uniform draw of one training-target index per generated summary."""
    if n_targets < 1:
        raise ValueError("need at least one training target")
    rng = random.Random(seed)
    return [rng.randrange(n_targets) for _ in range(count)]


def baseline_training_random(
    gen_texts: Sequence[str], training_targets: Sequence[str], seed: int
) -> BaselineResult:
    """Score each generated summary against one random training target.

    With a single target per summary the mean and best aggregations
    coincide; both are reported for table symmetry.
    """
    if not training_targets:
        raise ValueError("training_targets must be non-empty")
    if not gen_texts:
        raise ValueError("gen_texts must be non-empty")
    indices = draw_training_indices(len(gen_texts), len(training_targets), seed)
    scored = [score_pair(text, training_targets[i]) for text, i in zip(gen_texts, indices)]
    mean = mean_scores(scored)
    return BaselineResult(mean_of_mean=mean, mean_of_best=mean, pairs=len(scored))


def baseline_reference_loo(
    refs_by_conv: Mapping[str, Sequence[SummaryRecord]]
) -> BaselineResult:
    """Treat each reference as generated and score it against the rest.

    Per conversation the leave-one-out scores are averaged over references;
    the result averages those across conversations. Conversations with a
    single reference are skipped and counted.
    """
    per_conv_mean: list[RougeScores] = []
    per_conv_best: list[RougeScores] = []
    pairs = 0
    skipped = 0
    for conv_id in refs_by_conv:
        refs = list(refs_by_conv[conv_id])
        if len(refs) < 2:
            skipped += 1
            continue
        means = []
        bests = []
        for held_out_index, held_out in enumerate(refs):
            rest = refs[:held_out_index] + refs[held_out_index + 1 :]
            mean, best = aggregate_multi_reference(held_out, rest)
            means.append(mean)
            bests.append(best)
            pairs += 1
        per_conv_mean.append(mean_scores(means))
        per_conv_best.append(mean_scores(bests))
    if not per_conv_mean:
        raise ValueError("reference baseline needs at least one conversation with >= 2 references")
    return BaselineResult(
        mean_of_mean=mean_scores(per_conv_mean),
        mean_of_best=mean_scores(per_conv_best),
        pairs=pairs,
        skipped=skipped,
    )


@dataclass
class EvalReport:
    """Per-conversation scores plus every requested aggregate view."""

    settings: dict
    per_conversation: list[ConversationEval]
    aggregate_mean_of_mean: RougeScores
    aggregate_mean_of_best: RougeScores
    aggregate_concept: Optional[PRF]
    concept_skipped: int = 0
    buckets: list[BucketRow] = field(default_factory=list)
    baselines: dict[str, BaselineResult] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "settings": self.settings,
            "aggregates": {
                "conversations": len(self.per_conversation),
                "rouge_mean_of_mean": self.aggregate_mean_of_mean.to_json(),
                "rouge_mean_of_best": self.aggregate_mean_of_best.to_json(),
                "concept": self.aggregate_concept.to_json() if self.aggregate_concept else None,
                "concept_skipped": self.concept_skipped,
            },
            "buckets": [row.to_json() for row in self.buckets],
            "baselines": {name: result.to_json() for name, result in self.baselines.items()},
            "per_conversation": [entry.to_json() for entry in self.per_conversation],
        }


def evaluate_run(
    generated: Sequence[SummaryRecord],
    references: Mapping[str, Sequence[SummaryRecord]],
    lexicon: Lexicon,
    tokenizer=None,
    conversations: Optional[Mapping[str, Conversation]] = None,
    *,
    buckets: bool = False,
    baselines: Sequence[str] = (),
    training_targets: Optional[Sequence[str]] = None,
    seed: int = 0,
    vacuous_policy: str = "one",
    categories: Optional[Sequence[str]] = None,
    extractor=None,
) -> EvalReport:
    """Score a run's generated summaries against multi-reference ground truth.

    ``vacuous_policy`` controls conversations where neither side has any
    extracted concept: "one" scores them 1.0, "skip" drops them from the
    concept aggregate. Buckets require ``conversations`` and ``tokenizer``
    for token counts; the "training" baseline requires ``training_targets``.
    ``extractor`` (text -> concept-id set) replaces the lexicon scan when an
    external concept system is attached; ``categories`` then has no effect.
    """
    if not generated:
        raise ValueError("no generated summaries to evaluate")
    if vacuous_policy not in ("one", "skip"):
        raise ValueError(f"vacuous_policy must be 'one' or 'skip', got {vacuous_policy!r}")
    if buckets and (conversations is None or tokenizer is None):
        raise ValueError("bucket breakdown requires conversations and a tokenizer")

    if extractor is None:
        effective_lexicon = lexicon.filter_categories(categories)
        extractor = lambda text: extract_concepts(text, effective_lexicon)
    entries: list[ConversationEval] = []
    for record in generated:
        refs = list(references.get(record.conv_id, ()))
        if not refs:
            raise ValueError(f"no references for conversation {record.conv_id!r}")
        mean, best = aggregate_multi_reference(record, refs)
        gen_set = extractor(record.text)
        filtered = majority_vote_filter([extractor(r.text) for r in refs])
        concept: Optional[PRF]
        if vacuous_policy == "skip" and not gen_set and not filtered:
            concept = None
        else:
            concept = concept_prf(gen_set, filtered)
        token_count = None
        if conversations is not None and tokenizer is not None:
            conv = conversations.get(record.conv_id)
            if conv is not None:
                token_count = tokenizer.count(serialize_with_roles(conv.turns))
        entries.append(
            ConversationEval(
                conv_id=record.conv_id,
                n_refs=len(refs),
                mean_of_mean=mean,
                mean_of_best=best,
                concept=concept,
                token_count=token_count,
            )
        )

    concept_values = [e.concept for e in entries if e.concept is not None]
    report = EvalReport(
        settings=_settings(tokenizer, vacuous_policy, categories),
        per_conversation=entries,
        aggregate_mean_of_mean=mean_scores([e.mean_of_mean for e in entries]),
        aggregate_mean_of_best=mean_scores([e.mean_of_best for e in entries]),
        aggregate_concept=mean_prf(concept_values) if concept_values else None,
        concept_skipped=len(entries) - len(concept_values),
    )

    if buckets:
        report.buckets = _bucket_rows(entries)
    for name in baselines:
        if name == "training":
            if not training_targets:
                raise ValueError("training baseline requires training_targets")
            report.baselines["training"] = baseline_training_random(
                [e.text for e in generated], training_targets, seed
            )
        elif name == "reference":
            report.baselines["reference"] = baseline_reference_loo(
                {record.conv_id: references[record.conv_id] for record in generated}
            )
        else:
            raise ValueError(f"unknown baseline {name!r} (expected 'training' or 'reference')")
    return report


def _bucket_rows(entries: Sequence[ConversationEval]) -> list[BucketRow]:
    rows = []
    for index in range(len(BUCKET_EDGES) + 1):
        members = [e for e in entries if e.token_count is not None and bucket_index(e.token_count) == index]
        concepts = [e.concept for e in members if e.concept is not None]
        rows.append(
            BucketRow(
                label=bucket_label(index),
                count=len(members),
                mean_of_mean=mean_scores([e.mean_of_mean for e in members]) if members else None,
                concept=mean_prf(concepts) if concepts else None,
            )
        )
    return rows


def _settings(tokenizer, vacuous_policy: str, categories) -> dict:
    return {
        "rouge_tokenization": "lowercase; split on non-alphanumeric runs; no stemming or stopwords",
        "rouge_l_variant": "whole-summary token LCS",
        "bucket_edges": list(BUCKET_EDGES),
        "majority_vote": "concept kept if in >= 3 references, or in all when fewer than 3",
        "vacuous_concept_policy": vacuous_policy,
        "concept_categories": list(categories) if categories is not None else None,
        "tokens_per_word": getattr(tokenizer, "tokens_per_word", None),
    }


def render_report_tables(report: EvalReport, *, generated_label: str = "generated") -> str:
    """Plain-text tables: ROUGE rows with baselines, concept row, bucket rows."""

    def rouge_row(label: str, mean: RougeScores, best: RougeScores) -> str:
        cells = [
            f"{mean.rouge1.f1:.4f} ({best.rouge1.f1:.4f})",
            f"{mean.rouge2.f1:.4f} ({best.rouge2.f1:.4f})",
            f"{mean.rougeL.f1:.4f} ({best.rougeL.f1:.4f})",
        ]
        return f"{label:<24}" + "".join(f"{cell:<18}" for cell in cells)

    lines = ["ROUGE F1, mean-of-mean (mean-of-best)"]
    header = f"{'':<24}" + "".join(f"{h:<18}" for h in ("ROUGE-1 F1", "ROUGE-2 F1", "ROUGE-L F1"))
    lines.append(header)
    lines.append(rouge_row(generated_label, report.aggregate_mean_of_mean, report.aggregate_mean_of_best))
    for name, baseline in report.baselines.items():
        lines.append(rouge_row(name, baseline.mean_of_mean, baseline.mean_of_best))

    lines.append("")
    lines.append("Concept metrics (majority-voted references)")
    lines.append(f"{'':<24}{'F1':<12}{'Precision':<12}{'Recall':<12}")
    if report.aggregate_concept is not None:
        c = report.aggregate_concept
        lines.append(f"{generated_label:<24}{c.f1:<12.4f}{c.precision:<12.4f}{c.recall:<12.4f}")
    else:
        lines.append(f"{generated_label:<24}(all conversations vacuous, skipped)")

    if report.buckets:
        lines.append("")
        lines.append("Breakdown by input token count")
        lines.append(
            f"{'bucket':<16}{'count':<8}{'R1 F1':<10}{'R2 F1':<10}{'RL F1':<10}"
            f"{'C-F1':<10}{'C-P':<10}{'C-R':<10}"
        )
        for row in report.buckets:
            if row.count == 0:
                lines.append(f"{row.label:<16}{0:<8}" + "-" * 8)
                continue
            mean = row.mean_of_mean
            concept = row.concept
            concept_cells = (
                f"{concept.f1:<10.4f}{concept.precision:<10.4f}{concept.recall:<10.4f}"
                if concept is not None
                else f"{'-':<10}{'-':<10}{'-':<10}"
            )
            lines.append(
                f"{row.label:<16}{row.count:<8}"
                f"{mean.rouge1.f1:<10.4f}{mean.rouge2.f1:<10.4f}{mean.rougeL.f1:<10.4f}"
                + concept_cells
            )
    return "\n".join(lines) + "\n"
