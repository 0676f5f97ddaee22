"""Command-line interface: scan, ingest, split, train, eval, analyze, bench, compare.

Exit codes follow the CI contract: 0 = success (scan: clean tree),
1 = scan found candidate credentials, 2 = operational error or bad usage.
Configuration precedence is flags > environment > config file > defaults;
the resolved settings are printable with --show-config.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import analysis, bench, mlp, scanner, synthetic
from .dataset import LabeledDataset, SplitSpec, load_csv, load_jsonl, save_jsonl, split_dataset
from .embedding import EmbeddingCache, ProviderSpec, embed_batch
from .errors import CredsiftError, DomainError
from .metrics import build_report, confusion
from .taxonomy import CredentialCategory, default_rules, load_rules

ENV_ENDPOINT = "CREDSIFT_ENDPOINT"
ENV_PROVIDER = "CREDSIFT_PROVIDER"
ENV_SEED = "CREDSIFT_SEED"

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2

_CONFIG_DEFAULTS = {
    "seed": 0,
    "provider": "fallback",
    "endpoint": None,
    "model": "gpt2",
    "dimension": 768,
    "batch_size": 32,
    "output": "text",
    "mask": True,
    "cache": None,
}


def _resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < environment < explicit flags."""
    effective = dict(_CONFIG_DEFAULTS)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as handle:
            loaded = json.load(handle)
        for key in effective:
            if key in loaded:
                effective[key] = loaded[key]
    if os.environ.get(ENV_ENDPOINT):
        effective["endpoint"] = os.environ[ENV_ENDPOINT]
    if os.environ.get(ENV_PROVIDER):
        effective["provider"] = os.environ[ENV_PROVIDER]
    if os.environ.get(ENV_SEED):
        effective["seed"] = int(os.environ[ENV_SEED])
    for key in ("seed", "provider", "endpoint", "model", "dimension",
                "batch_size", "output", "cache"):
        value = getattr(args, key, None)
        if value is not None:
            effective[key] = value
    if getattr(args, "no_mask", False):
        effective["mask"] = False
    return effective


def _provider_spec(cfg: dict) -> ProviderSpec:
    if cfg["provider"] == "fallback":
        return ProviderSpec(kind="fallback", model_name="hashed-ngram",
                            dimension=cfg["dimension"], batch_size=cfg["batch_size"])
    return ProviderSpec(kind="remote", model_name=cfg["model"],
                        dimension=cfg["dimension"], batch_size=cfg["batch_size"],
                        endpoint_url=cfg["endpoint"])


def _open_cache(cfg: dict) -> EmbeddingCache | None:
    return EmbeddingCache(cfg["cache"]) if cfg["cache"] else None


def _load_dataset(path: str, fmt: str | None, csv_map: str | None) -> LabeledDataset:
    fmt = fmt or ("csv" if path.endswith(".csv") else "jsonl")
    if fmt == "csv":
        mapping = None
        if csv_map:
            mapping = dict(pair.split("=", 1) for pair in csv_map.split(","))
        return load_csv(path, mapping)
    return load_jsonl(path)


def _dataset_vectors(dataset: LabeledDataset, spec: ProviderSpec,
                     cache: EmbeddingCache | None):
    import numpy as np

    vectors = embed_batch([r.text for r in dataset.records], spec, cache=cache)
    labels = np.asarray([r.category.id for r in dataset.records], dtype=np.int64)
    return np.stack(vectors) if vectors else np.zeros((0, spec.dimension)), labels


def _emit(payload: dict, cfg: dict, *, text: str | None = None) -> None:
    if cfg["output"] == "text" and text is not None:
        print(text)
    else:
        print(json.dumps(payload, indent=2))


# ---------------------------------------------------------------- subcommands

def _cmd_scan(args, cfg) -> int:
    config = scanner.ScanConfig(
        root=args.root,
        include_globs=tuple(args.include) if args.include else ("*",),
        exclude_globs=tuple(args.exclude) if args.exclude else (),
        max_file_bytes=args.max_file_bytes,
        entropy_floor_default=args.entropy_floor,
        mask=cfg["mask"],
    )
    rules = load_rules(args.rules) if args.rules else default_rules()
    classifier = None
    provider = None
    if args.checkpoint:
        params, arch, _ = mlp.load_checkpoint(args.checkpoint)
        classifier = params
        provider = _provider_spec(cfg)
        if arch.input_dim != provider.dimension:
            raise DomainError(
                f"checkpoint input dim {arch.input_dim} != provider dimension "
                f"{provider.dimension}")
    result = scanner.scan_and_classify(config, rules, classifier=classifier,
                                       provider=provider, cache=_open_cache(cfg))
    if cfg["output"] == "jsonl":
        out = scanner.findings_to_jsonl(result.findings)
        if out:
            print(out)
    elif cfg["output"] == "json":
        print(json.dumps({
            "findings": [f.to_json_dict() for f in result.findings],
            "summary": result.stats.to_json_dict(),
        }, indent=2))
    else:
        print(scanner.findings_to_text(result.findings))
    print(f"scanned {result.stats.files_scanned} files, "
          f"{len(result.findings)} findings, "
          f"{result.stats.embed_errors} embed errors", file=sys.stderr)
    return EXIT_FINDINGS if result.findings else EXIT_OK


def _cmd_ingest(args, cfg) -> int:
    dataset = _load_dataset(args.dataset, args.format, args.csv_map)
    if args.out:
        save_jsonl(dataset, args.out)
    counts = {cat.label: n for cat, n in dataset.category_counts().items()}
    true_count = sum(1 for r in dataset.records if r.is_true)
    payload = {"name": dataset.name, "records": len(dataset),
               "true_records": true_count, "categories": counts}
    text = "\n".join([f"dataset: {dataset.name}",
                      f"records: {len(dataset)} ({true_count} true)"]
                     + [f"  {label:<20}{n}" for label, n in counts.items()])
    _emit(payload, cfg, text=text)
    return EXIT_OK


def _cmd_split(args, cfg) -> int:
    dataset = _load_dataset(args.dataset, args.format, args.csv_map)
    fractions = [float(f) for f in args.fractions.split(",")]
    if len(fractions) != 3:
        raise DomainError("--fractions must be three comma-separated numbers")
    spec = SplitSpec(train_fraction=fractions[0], valid_fraction=fractions[1],
                     test_fraction=fractions[2], seed=cfg["seed"],
                     stratified=not args.no_stratify)
    train, valid, test = split_dataset(dataset, spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("valid", valid), ("test", test)):
        save_jsonl(part, out_dir / f"{name}.jsonl")
    payload = {"train": len(train), "valid": len(valid), "test": len(test),
               "out_dir": str(out_dir)}
    _emit(payload, cfg,
          text=f"train={len(train)} valid={len(valid)} test={len(test)} -> {out_dir}")
    return EXIT_OK


def _split_and_embed(dataset, cfg, spec_provider, cache, *, seed):
    split_spec = SplitSpec(seed=seed, stratified=True)
    train_ds, valid_ds, test_ds = split_dataset(dataset, split_spec)
    return tuple(_dataset_vectors(ds, spec_provider, cache)
                 for ds in (train_ds, valid_ds, test_ds))


def _cmd_train(args, cfg) -> int:
    dataset = _load_dataset(args.dataset, args.format, args.csv_map)
    dataset = dataset.filtered(true_only=args.records == "true")
    if not dataset.records:
        raise DomainError("no records to train on after filtering")
    provider = _provider_spec(cfg)
    cache = _open_cache(cfg)
    (train_xy, valid_xy, _) = _split_and_embed(dataset, cfg, provider, cache,
                                               seed=cfg["seed"])
    preset = mlp.PRESETS[args.preset]
    config = dataclasses.replace(preset, seed=cfg["seed"])
    arch = mlp.MlpArchitecture(input_dim=provider.dimension, hidden1=args.hidden1,
                               hidden2=args.hidden2, dropout_rate=args.dropout)
    params, history = mlp.train(train_xy, valid_xy, arch, config)
    mlp.save_checkpoint(args.checkpoint, params, arch, seed=cfg["seed"],
                        preset=args.preset)
    if args.history:
        Path(args.history).write_text(json.dumps(history, indent=2), encoding="utf-8")
    last = history[-1] if history else {}
    payload = {"checkpoint": args.checkpoint, "preset": args.preset,
               "epochs": config.epochs, "final": last}
    _emit(payload, cfg,
          text=f"wrote {args.checkpoint} (preset {args.preset}, "
               f"{config.epochs} epochs, final {json.dumps(last)})")
    return EXIT_OK


def _evaluate_split(dataset, cfg, provider, cache, *, seed, preset_name,
                    hidden1, hidden2, dropout):
    """Train on the seed's train partition and report metrics on its test partition."""
    train_xy, valid_xy, test_xy = _split_and_embed(dataset, cfg, provider, cache,
                                                   seed=seed)
    preset = mlp.PRESETS[preset_name]
    config = dataclasses.replace(preset, seed=seed)
    arch = mlp.MlpArchitecture(input_dim=provider.dimension, hidden1=hidden1,
                               hidden2=hidden2, dropout_rate=dropout)
    params, _ = mlp.train(train_xy, valid_xy, arch, config)
    predicted, _ = mlp.predict_batch(test_xy[0], params)
    cm = confusion(list(test_xy[1]), list(predicted), arch.num_classes)
    return build_report(cm)


def _cmd_eval(args, cfg) -> int:
    dataset = _load_dataset(args.dataset, args.format, args.csv_map)
    dataset = dataset.filtered(true_only=args.records == "true")
    if not dataset.records:
        raise DomainError("no records to evaluate after filtering")
    provider = _provider_spec(cfg)
    cache = _open_cache(cfg)
    labels = [cat.label for cat in CredentialCategory]

    if args.splits > 1:
        preset_name = args.preset or "gpt2-mlp"
        reports = []
        for i in range(args.splits):
            report = _evaluate_split(dataset, cfg, provider, cache,
                                     seed=cfg["seed"] + i, preset_name=preset_name,
                                     hidden1=args.hidden1, hidden2=args.hidden2,
                                     dropout=args.dropout)
            reports.append(report.scalar_metrics())
        stats = bench.aggregate_runs(reports)
        _emit(stats.to_json_dict(), cfg, text=stats.to_text())
        return EXIT_OK

    params, arch, meta = mlp.load_checkpoint(args.checkpoint)
    if arch.input_dim != provider.dimension:
        raise DomainError(f"checkpoint input dim {arch.input_dim} != provider "
                          f"dimension {provider.dimension}")
    _, _, test_ds = split_dataset(dataset, SplitSpec(seed=cfg["seed"], stratified=True))
    X, y = _dataset_vectors(test_ds, provider, cache)
    predicted, _ = mlp.predict_batch(X, params)
    cm = confusion(list(y), list(predicted), arch.num_classes)
    report = build_report(cm)
    _emit(report.to_json_dict(), cfg, text=report.to_text(labels))
    return EXIT_OK


def _cmd_analyze(args, cfg) -> int:
    dataset = _load_dataset(args.dataset, args.format, args.csv_map)
    if len(dataset.records) < 2:
        raise DomainError("analyze needs at least 2 records")
    provider = _provider_spec(cfg)
    cache = _open_cache(cfg)
    vectors = embed_batch([r.text for r in dataset.records], provider, cache=cache)
    pairs = [(vec, rec.category) for vec, rec in zip(vectors, dataset.records)]
    report = analysis.separation(pairs, seed=cfg["seed"])
    if args.csv:
        coords = analysis.project_2d(vectors, seed=cfg["seed"])
        with open(args.csv, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["x", "y", "category_id"])
            for (x, y), rec in zip(coords, dataset.records):
                writer.writerow([repr(x), repr(y), rec.category.id])
    print(report.to_json())
    return EXIT_OK


def _cmd_bench(args, cfg) -> int:
    dataset = _load_dataset(args.dataset, args.format, args.csv_map)
    provider = _provider_spec(cfg)
    by_category: dict[CredentialCategory, list[str]] = {}
    for rec in dataset.records:
        by_category.setdefault(rec.category, []).append(rec.text)

    representation = {}
    for category in CredentialCategory:
        texts = by_category.get(category)
        if not texts:
            continue
        stats = bench.time_op(lambda t=texts: embed_batch(t, provider),
                              repeats=args.repeats, warmup=args.warmup)
        representation[category.label] = {
            "batch": stats.to_json_dict(),
            "per_item": stats.scaled(len(texts)).to_json_dict(),
            "items": len(texts),
        }
    payload = {"representation": representation}

    if args.checkpoint:
        params, arch, _ = mlp.load_checkpoint(args.checkpoint)
        texts = [r.text for r in dataset.records]
        import numpy as np

        X = np.stack(embed_batch(texts, provider))
        stats = bench.time_op(lambda: mlp.predict_batch(X, params),
                              repeats=args.repeats, warmup=args.warmup)
        payload["detection"] = {
            "batch": stats.to_json_dict(),
            "per_item": stats.scaled(len(texts)).to_json_dict(),
            "items": len(texts),
        }
    lines = [f"{'Category':<22}{'Mean (s)':>10}{'Std':>10}{'CI95':>10}"]
    for label, entry in representation.items():
        b = entry["batch"]
        lines.append(f"{label:<22}{b['mean_seconds']:>10.4f}{b['std_seconds']:>10.4f}"
                     f"{b['ci95_seconds']:>10.4f}")
    _emit(payload, cfg, text="\n".join(lines))
    return EXIT_OK


def _cmd_compare(args, cfg) -> int:
    imported = bench.load_imported_rows(args.imported)
    measured = None
    if args.report:
        with open(args.report, "r", encoding="utf-8") as handle:
            report = json.load(handle)
        measured = bench.ComparisonRow(
            tool_name=args.name,
            accuracy=report["accuracy"],
            precision=report["macro_precision"],
            recall=report["macro_recall"],
            f1=report["macro_f1"],
            source="measured",
        )
    rows = bench.comparison_report(measured, imported)
    payload = {"rows": [dict(row.to_json_dict(), rank=i + 1)
                        for i, row in enumerate(rows)]}
    _emit(payload, cfg, text=bench.comparison_to_text(rows))
    return EXIT_OK


def _cmd_synth(args, cfg) -> int:
    dataset = synthetic.generate_corpus(per_category=args.per_category,
                                        seed=cfg["seed"])
    save_jsonl(dataset, args.out)
    _emit({"out": args.out, "records": len(dataset)}, cfg,
          text=f"wrote {len(dataset)} records to {args.out}")
    return EXIT_OK


# -------------------------------------------------------------------- parser

def _add_dataset_args(sub):
    sub.add_argument("dataset", help="dataset path (.jsonl or .csv)")
    sub.add_argument("--format", choices=("jsonl", "csv"), default=None)
    sub.add_argument("--csv-map", default=None,
                     help="CSV column mapping, e.g. text=line,category=kind")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="credsift",
        description="Detect and classify hard-coded credentials in source trees.")
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--output", choices=("text", "json", "jsonl"), default=None)
    parser.add_argument("--provider", choices=("fallback", "remote"), default=None)
    parser.add_argument("--endpoint", default=None,
                        help=f"embedding endpoint URL (or ${ENV_ENDPOINT})")
    parser.add_argument("--model", default=None, choices=("bert-base", "gpt2"),
                        help="remote embedding model")
    parser.add_argument("--dimension", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    parser.add_argument("--cache", default=None, help="embedding cache file")
    parser.add_argument("--no-mask", action="store_true",
                        help="disable snippet masking in scan output")
    parser.add_argument("--show-config", action="store_true",
                        help="print the effective configuration and exit")
    sub = parser.add_subparsers(dest="command")

    scan = sub.add_parser("scan", help="scan a directory tree for credentials")
    scan.add_argument("root")
    scan.add_argument("--rules", default=None, help="rule set JSON file")
    scan.add_argument("--checkpoint", default=None,
                      help="classify findings with this model checkpoint")
    scan.add_argument("--include", action="append", default=None, metavar="GLOB")
    scan.add_argument("--exclude", action="append", default=None, metavar="GLOB")
    scan.add_argument("--max-file-bytes", type=int, default=1_048_576)
    scan.add_argument("--entropy-floor", type=float, default=3.5)
    scan.set_defaults(func=_cmd_scan)

    ingest = sub.add_parser("ingest", help="load a dataset and print its distribution")
    _add_dataset_args(ingest)
    ingest.add_argument("--out", default=None, help="write normalized JSONL here")
    ingest.set_defaults(func=_cmd_ingest)

    split = sub.add_parser("split", help="write train/valid/test JSONL partitions")
    _add_dataset_args(split)
    split.add_argument("--out-dir", required=True)
    split.add_argument("--fractions", default="0.8,0.1,0.1")
    split.add_argument("--no-stratify", action="store_true")
    split.set_defaults(func=_cmd_split)

    train = sub.add_parser("train", help="embed, split, and train a classifier")
    _add_dataset_args(train)
    train.add_argument("--preset", required=True, choices=sorted(mlp.PRESETS))
    train.add_argument("--checkpoint", required=True, help="output checkpoint path")
    train.add_argument("--history", default=None, help="write epoch history JSON here")
    train.add_argument("--records", choices=("true", "all"), default="true",
                       help="train on true credentials only, or all candidates")
    train.add_argument("--hidden1", type=int, default=256)
    train.add_argument("--hidden2", type=int, default=64)
    train.add_argument("--dropout", type=float, default=0.2)
    train.set_defaults(func=_cmd_train)

    evaluate = sub.add_parser("eval", help="evaluate a checkpoint on the test partition")
    _add_dataset_args(evaluate)
    evaluate.add_argument("--checkpoint", default=None)
    evaluate.add_argument("--splits", type=int, default=1,
                          help="k>1 retrains on k seeded splits and aggregates")
    evaluate.add_argument("--preset", default=None, choices=sorted(mlp.PRESETS))
    evaluate.add_argument("--records", choices=("true", "all"), default="true")
    evaluate.add_argument("--hidden1", type=int, default=256)
    evaluate.add_argument("--hidden2", type=int, default=64)
    evaluate.add_argument("--dropout", type=float, default=0.2)
    evaluate.set_defaults(func=_cmd_eval)

    analyze = sub.add_parser("analyze", help="embedding separation statistics")
    _add_dataset_args(analyze)
    analyze.add_argument("--csv", default=None,
                         help="write 2-D projection CSV (x,y,category_id)")
    analyze.set_defaults(func=_cmd_analyze)

    bench_cmd = sub.add_parser("bench", help="time embedding per credential category")
    _add_dataset_args(bench_cmd)
    bench_cmd.add_argument("--repeats", type=int, default=10)
    bench_cmd.add_argument("--warmup", type=int, default=1)
    bench_cmd.add_argument("--checkpoint", default=None,
                           help="also time classification with this checkpoint")
    bench_cmd.set_defaults(func=_cmd_bench)

    compare = sub.add_parser("compare", help="rank this run against published tools")
    compare.add_argument("report", nargs="?", default=None,
                         help="metric report JSON from `credsift eval`")
    compare.add_argument("--imported", default=None,
                         help="comparison rows JSON (default: packaged table)")
    compare.add_argument("--name", default="this-run")
    compare.set_defaults(func=_cmd_compare)

    synth = sub.add_parser("synth", help="write a synthetic labeled corpus")
    synth.add_argument("--per-category", type=int, default=400)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except (OSError, ValueError) as exc:
        print(f"credsift: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.show_config:
        print(json.dumps(cfg, indent=2))
        return EXIT_OK
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_ERROR
    try:
        return args.func(args, cfg)
    except (CredsiftError, OSError) as exc:
        print(f"credsift: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
