"""Command-line front end: prep, run, benchmark, stats, report.

Configuration comes from a YAML document with sections dataset,
preprocessing, bqabc, gp, fitness and output; command-line flags override
config values, which override defaults. Unknown keys are rejected by name.
Exit codes: 0 success, 1 usage/config error, 2 data error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import bqabc, gp, stats
from .dataset import (DataError, apply_minmax, category_maps, fit_minmax,
                      load_csv, save_norm_params)
from .pipeline import PipelineConfig, run_pipeline, run_repeated, save_report


class ConfigError(Exception):
    pass


_SCHEMA = {
    "dataset": {"train", "test", "label_column", "categorical_columns", "positive_class"},
    "preprocessing": {"normalization", "subsample"},
    "bqabc": {"population", "max_iterations", "theta_min_pi", "theta_max_pi",
              "abandonment_limit"},
    "gp": {"population", "max_generations", "crossover_rate", "mutation_rate",
           "tournament_size", "init_depth_min", "init_depth_max", "max_depth",
           "elitism_count"},
    "fitness": {"k", "validation", "holdout_fraction", "kfold_folds", "gp_mode"},
    "output": {"dir"},
}
_TOP_LEVEL = set(_SCHEMA) | {"seed", "workers"}


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    for key, value in doc.items():
        if key not in _TOP_LEVEL:
            raise ConfigError(f"{path}: unknown config key {key!r}")
        if key in _SCHEMA:
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: section {key!r} must be a mapping")
            for sub in value:
                if sub not in _SCHEMA[key]:
                    raise ConfigError(f"{path}: unknown config key {key}.{sub}")
    return doc


def build_pipeline_config(doc: dict, args) -> PipelineConfig:
    ds = doc.get("dataset", {})
    pre = doc.get("preprocessing", {})
    bq = doc.get("bqabc", {})
    g = doc.get("gp", {})
    fit = doc.get("fitness", {})
    out = doc.get("output", {})

    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    subsample = args.subsample if args.subsample is not None else pre.get("subsample")
    workers = args.workers if args.workers is not None else doc.get("workers")
    out_dir = args.out if args.out is not None else out.get("dir", "out")

    bq_config = bqabc.BqabcConfig(
        population=bq.get("population", 50),
        max_iterations=bq.get("max_iterations", 100),
        theta_min=bq.get("theta_min_pi", 0.001) * np.pi,
        theta_max=bq.get("theta_max_pi", 0.05) * np.pi,
        abandonment_limit=bq.get("abandonment_limit"),
        master_seed=0)  # overwritten by the pipeline's derived seed
    gp_config = gp.GpConfig(
        population=g.get("population", 50),
        max_generations=g.get("max_generations", 100),
        crossover_rate=g.get("crossover_rate", 0.9),
        mutation_rate=g.get("mutation_rate", 0.1),
        tournament_size=g.get("tournament_size", 3),
        init_depth_range=(g.get("init_depth_min", 2), g.get("init_depth_max", 6)),
        max_depth=g.get("max_depth", 8),
        elitism_count=g.get("elitism_count", 1),
        master_seed=0)
    return PipelineConfig(
        train_path=ds.get("train"),
        test_path=ds.get("test"),
        label_column=ds.get("label_column", "label"),
        categorical_columns=tuple(ds.get("categorical_columns", [])),
        normalization=pre.get("normalization", "minmax"),
        subsample=subsample,
        positive_class=ds.get("positive_class"),
        knn_k=fit.get("k", 5),
        holdout_fraction=fit.get("holdout_fraction", 0.7),
        validation=fit.get("validation", "holdout"),
        kfold_folds=fit.get("kfold_folds", 3),
        gp_fitness_mode=fit.get("gp_mode", "augmented"),
        bqabc=bq_config,
        gp=gp_config,
        master_seed=seed,
        workers=workers,
        output_dir=str(out_dir),
    )


def _log(args, message: str, **fields) -> None:
    if args.log_json:
        print(json.dumps({"message": message, **fields}), file=sys.stderr)
    else:
        print(message, file=sys.stderr)


def _guard_overwrite(paths: list[Path], force: bool) -> None:
    existing = [p for p in paths if p.exists()]
    if existing and not force:
        raise ConfigError(
            f"refusing to overwrite {existing[0]} (pass --force to allow)")


def _write_processed_csv(data, path: Path) -> None:
    names = data.feature_names + [data.schema[-1].name]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row, label in zip(data.values, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def cmd_prep(args) -> int:
    doc = load_config(args.config)
    config = build_pipeline_config(doc, args)
    if config.train_path is None or config.test_path is None:
        raise ConfigError("prep needs dataset.train and dataset.test in the config")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    targets = [out_dir / "train_processed.csv", out_dir / "test_processed.csv",
               out_dir / "norm-params.json"]
    _guard_overwrite(targets, args.force)

    train = load_csv(config.train_path, config.label_column,
                     set(config.categorical_columns))
    test = load_csv(config.test_path, config.label_column,
                    set(config.categorical_columns),
                    category_maps=category_maps(train))
    params = fit_minmax(train)
    train_n, test_n = apply_minmax(train, params), apply_minmax(test, params)
    _write_processed_csv(train_n, targets[0])
    _write_processed_csv(test_n, targets[1])
    save_norm_params(params, train.feature_names, targets[2])
    _log(args, f"wrote {targets[0]}, {targets[1]}, {targets[2]}",
         rows_train=train.n_rows, rows_test=test.n_rows, features=train.n_features)
    return 0


def _run_outputs(out_dir: Path) -> list[Path]:
    return [out_dir / "report.json", out_dir / "mask.txt", out_dir / "feature.sexp"]


def _write_run_outputs(report: dict, out_dir: Path) -> None:
    save_report(report, out_dir / "report.json")
    (out_dir / "mask.txt").write_text(report["mask"] + "\n", encoding="utf-8")
    (out_dir / "feature.sexp").write_text(report["expression"] + "\n", encoding="utf-8")


def cmd_run(args) -> int:
    doc = load_config(args.config)
    config = build_pipeline_config(doc, args)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _guard_overwrite(_run_outputs(out_dir), args.force)
    _log(args, "starting pipeline", seed=config.master_seed)
    report = run_pipeline(config)
    _write_run_outputs(report, out_dir)
    _log(args, f"wrote {out_dir / 'report.json'}",
         accuracy=report["metrics"]["accuracy"],
         selected=report["selected_count"])
    return 0


_METRIC_FIELDS = ["repetition", "selected_count", "augmented_count", "accuracy",
                  "sensitivity", "specificity", "fpr", "multiclass_accuracy",
                  "total_seconds"]


def _metrics_row(rep: int | str, report: dict) -> dict:
    return {
        "repetition": rep,
        "selected_count": report["selected_count"],
        "augmented_count": report["augmented_count"],
        "accuracy": report["metrics"]["accuracy"],
        "sensitivity": report["metrics"]["sensitivity"],
        "specificity": report["metrics"]["specificity"],
        "fpr": report["metrics"]["fpr"],
        "multiclass_accuracy": report["metrics"]["multiclass_accuracy"],
        "total_seconds": report["timings"]["total_seconds"],
    }


def cmd_benchmark(args) -> int:
    doc = load_config(args.config)
    config = build_pipeline_config(doc, args)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _guard_overwrite([out_dir / "metrics.csv", out_dir / "aggregate.json"], args.force)

    def on_report(r, report):
        rep_dir = out_dir / f"rep_{r:03d}"
        rep_dir.mkdir(exist_ok=True)
        _write_run_outputs(report, rep_dir)
        _log(args, f"repetition {r} done",
             accuracy=report["metrics"]["accuracy"])

    reports, aggregate = run_repeated(config, args.reps, on_report=on_report)
    with open(out_dir / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=_METRIC_FIELDS)
        writer.writeheader()
        for r, report in enumerate(reports):
            writer.writerow(_metrics_row(r, report))
        writer.writerow({
            "repetition": "aggregate",
            "selected_count": aggregate["mean_selected_count"],
            "augmented_count": aggregate["mean_augmented_count"],
            "accuracy": aggregate["accuracy"],
            "sensitivity": aggregate["sensitivity"],
            "specificity": aggregate["specificity"],
            "fpr": aggregate["fpr"],
            "multiclass_accuracy": aggregate["multiclass_accuracy"],
            "total_seconds": aggregate["mean_total_seconds"],
        })
    with open(out_dir / "aggregate.json", "w", encoding="utf-8") as fh:
        json.dump(aggregate, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _log(args, f"wrote {out_dir / 'metrics.csv'}", reps=args.reps)
    return 0


def _load_own_aggregate(path: str) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        if row["repetition"] == "aggregate":
            return {
                "accuracy": float(row["accuracy"]),
                "sensitivity": float(row["sensitivity"]),
                "specificity": float(row["specificity"]),
                "fpr": float(row["fpr"]),
                "mean_selected_count": float(row["selected_count"]),
            }
    raise DataError(f"{path}: no aggregate row")


def cmd_stats(args) -> int:
    own = _load_own_aggregate(args.metrics)
    baselines = stats.load_baselines(args.baselines)
    rows = stats.comparison_table(own, "proposed", baselines, args.dataset,
                                  sidedness=args.sidedness)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    _guard_overwrite([out_dir / "comparison.csv", out_dir / "comparison.md"], args.force)
    stats.table_to_csv(rows, out_dir / "comparison.csv")
    (out_dir / "comparison.md").write_text(stats.table_to_markdown(rows), encoding="utf-8")
    print(stats.table_to_markdown(rows), end="")
    return 0


def cmd_report(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        report = json.load(fh)
    m = report["metrics"]
    print(f"selected features : {report['selected_count']} (mask {report['mask']})")
    print(f"constructed       : {report['expression']}")
    print(f"accuracy          : {m['accuracy']:.4f}")
    print(f"sensitivity       : {m['sensitivity']:.4f}")
    print(f"specificity       : {m['specificity']:.4f}")
    print(f"fpr               : {m['fpr']:.4f}")
    t = report["timings"]
    print(f"time (fs/fc/eval) : {t['fs_seconds']:.2f}s / {t['fc_seconds']:.2f}s "
          f"/ {t['eval_seconds']:.2f}s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmfe",
        description="Bee-colony feature selection + GP feature construction pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--subsample", type=float, help="stratified subsample fraction")
        p.add_argument("--workers", type=int, help="parallel fitness evaluation width")
        p.add_argument("--force", action="store_true", help="allow overwriting outputs")
        p.add_argument("--log-json", action="store_true", help="machine-readable logs")
        p.add_argument("--out", help="output directory override")

    p = sub.add_parser("prep", help="preprocess train/test CSVs")
    common(p)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("run", help="run the full pipeline once")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("benchmark", help="repeat the pipeline and aggregate")
    common(p)
    p.add_argument("--reps", type=int, default=30, help="number of repetitions")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("stats", help="compare own results against baselines")
    common(p)
    p.add_argument("metrics", help="own metrics.csv from benchmark")
    p.add_argument("baselines", help="baseline records CSV")
    p.add_argument("--dataset", required=True, help="dataset name to compare on")
    p.add_argument("--sidedness", choices=["one", "two"], default="one")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="print a human summary of a report.json")
    common(p)
    p.add_argument("report", help="path to report.json")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, stats.StatsError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
