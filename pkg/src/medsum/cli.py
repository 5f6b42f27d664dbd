"""Command-line interface binding config files to the pipeline modules.

One JSON config file describes corpus paths, backends, and method settings;
command-line flags override individual values. Commands: build-data, infer,
eval, ablate-header, stats, agreement. The MEDSUM_CONFIG environment
variable supplies the config path when --config is omitted.

Exit codes: 0 success, 1 conversation-level failures (strict mode),
2 configuration or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .agreement import rater_agreement
from .alignment import AlignConfig
from .backends import BackendDescriptor, WordTokenizer, resolve_embedder
from .chunking import ChunkConfig
from .concepts import Lexicon, LexiconError, extract_concepts
from .dataset import (
    Corpus,
    corpus_stats,
    export_finetune_dataset,
    load_corpus,
    select_target_reference,
)
from .evaluation import aggregate_multi_reference, evaluate_run, render_report_tables
from .pipeline import GENDER_SENTENCES, RunConfig, load_run, run_pipeline
from .rouge import mean_scores


class CliError(Exception):
    """Configuration or input problem; reported with exit status 2."""


_CONFIG_SCHEMA = {
    "corpus": {"transcripts", "references", "splits"},
    "lexicon": None,
    "tokenizer": {"tokens_per_word"},
    "backends": {"stage1", "stage2", "embedding"},
    "chunking": {"chunk_word_limit", "header_fraction", "ellipsis_token"},
    "alignment": {"window_turns", "train_stride", "infer_stride", "similarity_threshold"},
    "run": {"mode", "output_dir", "seed", "gender_prefix", "max_new_tokens", "workers"},
    "data": {"output_dir", "token_limit"},
    "eval": {"buckets", "baselines", "categories", "vacuous_policy", "output"},
}

_DESCRIPTOR_KEYS = {"kind", "endpoint", "token_limit", "max_concurrency"}


@dataclass
class CliConfig:
    """Validated, resolved contents of one config file."""

    path: Optional[Path] = None
    raw: dict = field(default_factory=dict)

    @property
    def base_dir(self) -> Path:
        return self.path.parent if self.path else Path.cwd()

    def _resolve_path(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def section(self, name: str) -> dict:
        return self.raw.get(name, {}) or {}

    def tokenizer(self) -> WordTokenizer:
        ratio = self.section("tokenizer").get("tokens_per_word", 1.6)
        return WordTokenizer(tokens_per_word=float(ratio))

    def chunk_cfg(self) -> ChunkConfig:
        return ChunkConfig(**self.section("chunking"))

    def align_cfg(self) -> AlignConfig:
        return AlignConfig(**self.section("alignment"))

    def backend(self, role: str) -> Optional[BackendDescriptor]:
        record = self.section("backends").get(role)
        if record is None:
            return None
        unknown = set(record) - _DESCRIPTOR_KEYS
        if unknown:
            raise CliError(f"backends.{role}: unknown keys {sorted(unknown)}")
        try:
            return BackendDescriptor.from_json(record)
        except (KeyError, ValueError) as exc:
            raise CliError(f"backends.{role}: {exc}") from exc

    def load_corpus(self) -> Corpus:
        section = self.section("corpus")
        if "transcripts" not in section:
            raise CliError("config needs corpus.transcripts")
        references = section.get("references")
        try:
            return load_corpus(
                self._resolve_path(section["transcripts"]),
                self._resolve_path(references) if references else None,
                section.get("splits"),
            )
        except (OSError, ValueError) as exc:
            raise CliError(f"loading corpus: {exc}") from exc

    def load_lexicon(self) -> Lexicon:
        if "lexicon" not in self.raw:
            raise CliError("config needs a lexicon path")
        try:
            return Lexicon.load(self._resolve_path(self.raw["lexicon"]))
        except (OSError, LexiconError, KeyError) as exc:
            raise CliError(f"loading lexicon: {exc}") from exc


def load_config(path: Optional[str], *, required: bool = True) -> CliConfig:
    actual = path or os.environ.get("MEDSUM_CONFIG")
    if actual is None:
        if required:
            raise CliError("a config file is required (--config or MEDSUM_CONFIG)")
        return CliConfig()
    config_path = Path(actual)
    try:
        with open(config_path, "r", encoding="utf-8") as stream:
            raw = json.load(stream)
    except OSError as exc:
        raise CliError(f"cannot read config {actual!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config {actual!r} is not valid JSON: {exc}") from exc
    _validate_config_keys(raw)
    return CliConfig(path=config_path, raw=raw)


def _validate_config_keys(raw: object) -> None:
    if not isinstance(raw, dict):
        raise CliError("config must be a JSON object")
    unknown = set(raw) - set(_CONFIG_SCHEMA)
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    for key, allowed in _CONFIG_SCHEMA.items():
        if key not in raw or allowed is None:
            continue
        section = raw[key]
        if not isinstance(section, dict):
            raise CliError(f"config section {key!r} must be an object")
        extra = set(section) - allowed
        if extra:
            raise CliError(f"config section {key!r}: unknown keys {sorted(extra)}")


def _parse_backend_flag(value: str) -> BackendDescriptor:
    """Compact backend strings: mock:lead1, subprocess:<command>, http:<url>."""
    kind, _, endpoint = value.partition(":")
    kinds = {"mock": "builtin-mock", "builtin-mock": "builtin-mock", "subprocess": "subprocess", "http": "http"}
    if kind not in kinds or not endpoint:
        raise CliError(f"bad backend spec {value!r} (use mock:<name>, subprocess:<command>, http:<url>)")
    return BackendDescriptor(kind=kinds[kind], endpoint=endpoint)


def _select_conversations(corpus: Corpus, split: str) -> list:
    if split == "all" or not corpus.splits:
        ids = list(corpus.conversations)
    else:
        ids = corpus.ids_in(split)
    if not ids:
        raise CliError(f"no conversations in split {split!r}")
    return [corpus.conversations[cid] for cid in ids]


def _training_targets(corpus: Corpus, lexicon: Lexicon) -> list[str]:
    extractor = lambda text: extract_concepts(text, lexicon)
    targets = []
    for conv_id in corpus.ids_in("train"):
        refs = corpus.references.get(conv_id)
        if refs:
            targets.append(select_target_reference(refs, extractor).text)
    if not targets:
        raise CliError("training baseline needs train-split conversations with references")
    return targets


def cmd_build_data(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    corpus = config.load_corpus()
    out_dir = Path(args.out or config.section("data").get("output_dir", "data-out")) / args.method
    token_limit = int(config.section("data").get("token_limit", 1024))

    extractor = None
    embedder = None
    if args.method in ("single", "chunking"):
        lexicon = config.load_lexicon()
        extractor = lambda text: extract_concepts(text, lexicon)
    else:
        descriptor = config.backend("embedding")
        if descriptor is None:
            raise CliError("embedding backend required for sentbert (config backends.embedding)")
        embedder = resolve_embedder(descriptor)

    try:
        manifest = export_finetune_dataset(
            corpus,
            args.method,
            out_dir,
            extractor=extractor,
            chunk_cfg=config.chunk_cfg(),
            align_cfg=config.align_cfg(),
            embedder=embedder,
            tokenizer=config.tokenizer(),
            token_limit=token_limit,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    print(f"method: {manifest.method}")
    for split in ("train", "dev"):
        print(f"{split}: {manifest.counts.get(split, 0)} examples")
    if manifest.skipped_no_references:
        print(f"skipped (no references): {len(manifest.skipped_no_references)}")
    if args.method == "sentbert" and manifest.sentences_total:
        matched = manifest.sentences_matched / manifest.sentences_total
        print(f"sentences matched: {manifest.sentences_matched}/{manifest.sentences_total} ({matched:.1%})")
    print(f"config hash: {manifest.config_hash}")
    print(f"wrote {out_dir}")
    return 0


def _run_config_from_args(args: argparse.Namespace, config: CliConfig) -> tuple[RunConfig, int]:
    run_section = config.section("run")
    mode = args.mode or run_section.get("mode")
    if mode is None:
        raise CliError("a mode is required (--mode or config run.mode)")
    stage1 = _parse_backend_flag(args.stage1_backend or args.backend) if (args.stage1_backend or args.backend) else config.backend("stage1")
    stage2 = _parse_backend_flag(args.stage2_backend or args.backend) if (args.stage2_backend or args.backend) else config.backend("stage2")
    if stage1 is None:
        raise CliError("a stage1 backend is required (--backend/--stage1-backend or config backends.stage1)")
    gender = args.gender if args.gender is not None else run_section.get("gender_prefix")
    output_dir = args.out or run_section.get("output_dir")
    if output_dir is None:
        raise CliError("an output directory is required (--out or config run.output_dir)")
    seed = args.seed if args.seed is not None else int(run_section.get("seed", 0))
    workers = args.workers if args.workers is not None else int(run_section.get("workers", 1))
    try:
        run_cfg = RunConfig(
            mode=mode,
            stage1_backend=stage1,
            stage2_backend=stage2,
            chunk_cfg=config.chunk_cfg(),
            align_cfg=config.align_cfg(),
            gender_prefix=gender,
            output_dir=str(output_dir),
            seed=seed,
            max_new_tokens=int(run_section.get("max_new_tokens", 512)),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return run_cfg, workers


def cmd_infer(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    corpus = config.load_corpus()
    conversations = _select_conversations(corpus, args.split)
    run_cfg, workers = _run_config_from_args(args, config)
    lexicon = config.load_lexicon() if "lexicon" in config.raw else None

    result = run_pipeline(conversations, run_cfg, config.tokenizer(), lexicon=lexicon, workers=workers)
    print(f"run directory: {result.output_dir}")
    print(f"generated: {len(result.records)} summaries")
    if result.failures:
        print(f"failed: {len(result.failures)} conversations (see failures.jsonl)")
        return 0 if args.lenient else 1
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    corpus = config.load_corpus()
    lexicon = config.load_lexicon()
    tokenizer = config.tokenizer()
    eval_section = config.section("eval")

    _, records, _ = load_run(args.run_dir)
    if not records:
        raise CliError(f"run directory {args.run_dir!r} has no generated summaries")

    baselines = eval_section.get("baselines", [])
    if args.baselines is not None:
        baselines = [b for b in args.baselines.split(",") if b and b != "none"]
    buckets = eval_section.get("buckets", True) if args.buckets is None else args.buckets
    training_targets = _training_targets(corpus, lexicon) if "training" in baselines else None

    try:
        report = evaluate_run(
            records,
            corpus.references,
            lexicon,
            tokenizer,
            corpus.conversations,
            buckets=buckets,
            baselines=baselines,
            training_targets=training_targets,
            seed=args.seed if args.seed is not None else 0,
            vacuous_policy=eval_section.get("vacuous_policy", "one"),
            categories=eval_section.get("categories"),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    out = Path(args.out or eval_section.get("output") or Path(args.run_dir) / "eval_report.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as stream:
        json.dump(report.to_json(), stream, ensure_ascii=False, sort_keys=True, indent=2)
        stream.write("\n")
    print(render_report_tables(report))
    print(f"report: {out}")
    return 0


def cmd_ablate_header(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    corpus = config.load_corpus()
    lexicon = config.load_lexicon() if "lexicon" in config.raw else None
    tokenizer = config.tokenizer()
    conversations = _select_conversations(corpus, args.split)

    try:
        fractions = [float(f) for f in args.fractions.split(",") if f.strip()]
    except ValueError as exc:
        raise CliError(f"bad --fractions value: {exc}") from exc
    if not fractions:
        raise CliError("--fractions must list at least one value")

    out_dir = Path(args.out or "ablation-out")
    base_cfg, workers = _run_config_from_args(args, config)
    if base_cfg.mode != "multistage-chunking":
        raise CliError("header ablation runs in multistage-chunking mode")
    stage2_limit = base_cfg.stage2_backend.token_limit

    rows = []
    for fraction in fractions:
        label = f"{int(round(fraction * 100))}%"
        run_dir = out_dir / f"header-{int(round(fraction * 100))}pct"
        try:
            chunk_cfg = replace(base_cfg.chunk_cfg, header_fraction=fraction)
        except ValueError as exc:
            raise CliError(f"fraction {fraction}: {exc}") from exc
        run_cfg = replace(base_cfg, chunk_cfg=chunk_cfg, output_dir=str(run_dir))
        result = run_pipeline(conversations, run_cfg, tokenizer, lexicon=lexicon, workers=workers)
        if result.failures:
            raise CliError(f"fraction {fraction}: {len(result.failures)} conversations failed")

        stage2_tokens = []
        total_chunks = 0
        for record in result.records:
            pieces = record.stage1_pieces or ()
            total_chunks += len(pieces)
            stage2_input = " ".join(pieces)
            if base_cfg.gender_prefix:
                stage2_input = f"{GENDER_SENTENCES[base_cfg.gender_prefix]} {stage2_input}"
            stage2_tokens.append(tokenizer.count(stage2_input))
        n = len(stage2_tokens)
        truncated = 100.0 * sum(1 for t in stage2_tokens if t > stage2_limit) / n
        truncated_2x = 100.0 * sum(1 for t in stage2_tokens if t > 2 * stage2_limit) / n

        means, bests = [], []
        for record in result.records:
            refs = corpus.references.get(record.conv_id)
            if refs:
                mean, best = aggregate_multi_reference(record, refs)
                means.append(mean)
                bests.append(best)
        rows.append(
            {
                "header": label,
                "header_fraction": fraction,
                "chunks": total_chunks,
                "stage2_pieces": total_chunks,
                "truncated_pct": truncated,
                "truncated_2x_pct": truncated_2x,
                "rouge_mean_of_mean": mean_scores(means).to_json() if means else None,
                "rouge_mean_of_best": mean_scores(bests).to_json() if bests else None,
            }
        )

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "ablation.json", "w", encoding="utf-8") as stream:
        json.dump({"rows": rows}, stream, ensure_ascii=False, sort_keys=True, indent=2)
        stream.write("\n")
    print(_render_ablation_table(rows))
    print(f"wrote {out_dir / 'ablation.json'}")
    return 0


def _render_ablation_table(rows: list[dict]) -> str:
    lines = [
        f"{'header':<10}{'chunks':<8}{'Truncated (%)':<16}"
        f"{'ROUGE-1 F1':<18}{'ROUGE-2 F1':<18}{'ROUGE-L F1':<18}"
    ]
    for row in rows:
        trunc = f"{row['truncated_pct']:.1f} ({row['truncated_2x_pct']:.1f})"
        mean = row["rouge_mean_of_mean"]
        best = row["rouge_mean_of_best"]
        if mean is None:
            cells = ["-"] * 3
        else:
            cells = [
                f"{mean[k]['f1']:.4f} ({best[k]['f1']:.4f})" for k in ("rouge1", "rouge2", "rougeL")
            ]
        lines.append(
            f"{row['header']:<10}{row['chunks']:<8}{trunc:<16}"
            + "".join(f"{cell:<18}" for cell in cells)
        )
    return "\n".join(lines)


def cmd_stats(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    corpus = config.load_corpus()
    stats = corpus_stats(corpus, config.tokenizer())
    payload = stats.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as stream:
            json.dump(payload, stream, ensure_ascii=False, sort_keys=True, indent=2)
            stream.write("\n")
        print(f"wrote {args.out}")
    print(f"conversations: {stats.conversations}")
    print(f"references: {stats.references}")
    print(f"over 1024 tokens: {stats.over_1024_tokens:.1%}")
    print(f"over 2048 tokens: {stats.over_2048_tokens:.1%}")
    return 0


def cmd_agreement(args: argparse.Namespace) -> int:
    try:
        with open(args.scores, "r", encoding="utf-8") as stream:
            payload = json.load(stream)
        stats = rater_agreement(payload["a"], payload["b"])
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CliError(f"agreement: {exc}") from exc
    rho = f"{stats.pearson:.4f}" if stats.pearson_defined else "undefined (zero variance)"
    tau = f"{stats.kendall_tau:.4f}" if stats.kendall_defined else "undefined (all ties)"
    print(f"pearson rho:   {rho}")
    print(f"kendall tau-b: {tau}")
    print(f"cohens kappa:  {stats.cohens_kappa:.4f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as stream:
            json.dump(stats.to_json(), stream, sort_keys=True, indent=2)
            stream.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="medsum",
        description="Multistage doctor-patient conversation summarization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", "-c", default=None, help="config JSON (or MEDSUM_CONFIG)")

    p = sub.add_parser("build-data", help="export a fine-tuning dataset")
    add_config(p)
    p.add_argument("--method", required=True, choices=["single", "chunking", "sentbert"])
    p.add_argument("--out", default=None, help="output directory (default: config data.output_dir)")
    p.set_defaults(func=cmd_build_data)

    def add_run_flags(p):
        p.add_argument("--mode", default=None, choices=["single", "multistage-chunking", "multistage-sentbert"])
        p.add_argument("--split", default="test", help="corpus split to run (train/dev/test/all)")
        p.add_argument("--out", default=None, help="run directory")
        p.add_argument("--gender", default=None, choices=sorted(GENDER_SENTENCES))
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--backend", default=None, help="backend for all stages, e.g. mock:lead1")
        p.add_argument("--stage1-backend", default=None)
        p.add_argument("--stage2-backend", default=None)

    p = sub.add_parser("infer", help="run inference over a split")
    add_config(p)
    add_run_flags(p)
    p.add_argument("--lenient", action="store_true", help="exit 0 even with failed conversations")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="evaluate a run directory against references")
    add_config(p)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--baselines", default=None, help="comma list: training,reference (or none)")
    p.add_argument("--buckets", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--seed", type=int, default=None, help="seed for the training baseline")
    p.add_argument("--out", default=None, help="report JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate-header", help="header-length ablation over chunking runs")
    add_config(p)
    add_run_flags(p)
    p.add_argument("--fractions", default="0,0.25,0.5,0.75")
    p.set_defaults(func=cmd_ablate_header, mode="multistage-chunking", split="dev")

    p = sub.add_parser("stats", help="corpus statistics")
    add_config(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("agreement", help="inter-rater agreement statistics")
    p.add_argument("--scores", required=True, help='JSON file {"a": [...], "b": [...]}')
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_agreement)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
