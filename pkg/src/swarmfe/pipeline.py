"""End-to-end run: preprocess, select features, construct one feature, evaluate.

Phases run strictly in order. The held-out test partition is touched only in
the final evaluation; wrapper fitness during search sees the training
partition alone. Every random stream is derived from the master seed, so a
run is reproducible byte for byte apart from wall-clock timings.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import bqabc, gp
from .dataset import (Dataset, apply_minmax, apply_zscore, category_maps,
                      fit_minmax, fit_zscore, load_csv, project,
                      stratified_subsample)
from .knn import FitnessProtocol, accuracy_score, confusion, knn_predict, metrics, wrapper_fitness


def derive_seed(master_seed: int, *tags: int) -> int:
    """Stable child seed for a named phase of the run."""
    return int(np.random.SeedSequence(master_seed, spawn_key=tags).generate_state(1)[0])


@dataclass
class PipelineConfig:
    train_path: str | None = None
    test_path: str | None = None
    label_column: str = "label"
    categorical_columns: tuple[str, ...] = ()
    normalization: str = "minmax"          # or "zscore"
    subsample: float | None = None
    positive_class: int | None = None      # binary framing; None = majority-vs-rest off
    knn_k: int = 5
    holdout_fraction: float = 0.7
    validation: str = "holdout"            # or "kfold"
    kfold_folds: int = 3
    gp_fitness_mode: str = "augmented"     # or "solo"
    bqabc: bqabc.BqabcConfig = field(default_factory=bqabc.BqabcConfig)
    gp: gp.GpConfig = field(default_factory=gp.GpConfig)
    master_seed: int = 0
    workers: int | None = None
    output_dir: str | None = None


def preprocess(config: PipelineConfig, train: Dataset | None = None,
               test: Dataset | None = None) -> tuple[Dataset, Dataset]:
    """Load (if needed), subsample, and normalize train/test consistently."""
    if train is None:
        train = load_csv(config.train_path, config.label_column,
                         set(config.categorical_columns))
        test = load_csv(config.test_path, config.label_column,
                        set(config.categorical_columns),
                        category_maps=category_maps(train))
    if config.subsample is not None:
        train = stratified_subsample(train, config.subsample,
                                     derive_seed(config.master_seed, 0))
        test = stratified_subsample(test, config.subsample,
                                    derive_seed(config.master_seed, 1))
    if config.normalization == "zscore":
        params = fit_zscore(train)
        return apply_zscore(train, params), apply_zscore(test, params)
    params = fit_minmax(train)
    return apply_minmax(train, params), apply_minmax(test, params)


def augment(data: Dataset, mask: np.ndarray, tree: gp.Node,
            norm_range: tuple[float, float] | None = None):
    """Append the evaluated tree column (min-max scaled) to the selected columns.

    Returns the augmented feature matrix plus the scaling range, which must be
    fit on training rows and reused for test rows.
    """
    selected = project(data, mask)
    col, _ = gp.eval_tree(tree, selected.values)
    if norm_range is None:
        scaled, lo, hi = gp.normalize_column(col)
    else:
        scaled, lo, hi = gp.normalize_column(col, *norm_range)
    values = np.column_stack([selected.values, scaled])
    return values, selected.labels, (lo, hi)


def _protocol(config: PipelineConfig) -> FitnessProtocol:
    seed = derive_seed(config.master_seed, 2)
    if config.validation == "kfold":
        validation = ("kfold", config.kfold_folds, seed)
    else:
        validation = ("holdout", config.holdout_fraction, seed)
    return FitnessProtocol(k=config.knn_k, validation=validation,
                           positive_class=config.positive_class)


def _augmented_fitness(train: Dataset, mask: np.ndarray, protocol: FitnessProtocol,
                       config: PipelineConfig):
    """Tree fitness: wrapper accuracy of selected features plus the tree column."""
    selected = project(train, mask)
    ones = np.ones(selected.n_features + 1, dtype=np.uint8)
    solo = np.ones(1, dtype=np.uint8)

    def fitness(tree: gp.Node) -> float:
        col, _ = gp.eval_tree(tree, selected.values)
        scaled, _, _ = gp.normalize_column(col)
        if config.gp_fitness_mode == "solo":
            data = Dataset(values=scaled[:, None].copy(), labels=selected.labels,
                           schema=selected.schema[-1:])
            return wrapper_fitness(data, solo, protocol)
        values = np.column_stack([selected.values, scaled])
        data = Dataset(values=values, labels=selected.labels, schema=selected.schema)
        return wrapper_fitness(data, ones, protocol)

    return fitness


def run_pipeline(config: PipelineConfig, train: Dataset | None = None,
                 test: Dataset | None = None) -> dict:
    """Execute the full method once and return the run report as a dict."""
    train, test = preprocess(config, train, test)
    protocol = _protocol(config)

    t0 = time.perf_counter()
    fs_config = bqabc.BqabcConfig(
        population=config.bqabc.population,
        max_iterations=config.bqabc.max_iterations,
        theta_min=config.bqabc.theta_min,
        theta_max=config.bqabc.theta_max,
        abandonment_limit=config.bqabc.abandonment_limit,
        master_seed=derive_seed(config.master_seed, 3))
    fs_result = bqabc.run_bqabc(
        train.n_features, fs_config,
        lambda mask: wrapper_fitness(train, mask, protocol),
        workers=config.workers)
    fs_seconds = time.perf_counter() - t0
    mask = fs_result.best_mask

    t1 = time.perf_counter()
    gp_config = gp.GpConfig(
        population=config.gp.population,
        max_generations=config.gp.max_generations,
        crossover_rate=config.gp.crossover_rate,
        mutation_rate=config.gp.mutation_rate,
        tournament_size=config.gp.tournament_size,
        init_depth_range=config.gp.init_depth_range,
        max_depth=config.gp.max_depth,
        elitism_count=config.gp.elitism_count,
        master_seed=derive_seed(config.master_seed, 4))
    s = int(mask.sum())
    fc_result = gp.run_gp(gp_config, s,
                          _augmented_fitness(train, mask, protocol, config),
                          workers=config.workers)
    fc_seconds = time.perf_counter() - t1
    tree = fc_result.best_tree

    t2 = time.perf_counter()
    train_values, train_labels, norm_range = augment(train, mask, tree)
    test_values, test_labels, _ = augment(test, mask, tree, norm_range)
    aug_train = Dataset(values=train_values, labels=train_labels,
                        schema=train.schema[-1:])
    aug_test = Dataset(values=test_values, labels=test_labels,
                       schema=test.schema[-1:])
    preds = knn_predict(aug_train, aug_test, config.knn_k)
    multiclass_accuracy = accuracy_score(preds, aug_test.labels)
    if config.positive_class is not None:
        m = metrics(confusion(preds, aug_test.labels, config.positive_class))
    else:
        positive = int(np.max(train.labels))  # fall back to highest class id
        m = metrics(confusion(preds, aug_test.labels, positive))
    eval_seconds = time.perf_counter() - t2

    return {
        "mask": "".join(str(int(b)) for b in mask),
        "selected_count": s,
        "expression": gp.to_sexp(tree),
        "augmented_count": s + 1,
        "metrics": {
            "accuracy": m.accuracy,
            "sensitivity": m.sensitivity,
            "specificity": m.specificity,
            "fpr": m.fpr,
            "degenerate": m.degenerate,
            "multiclass_accuracy": multiclass_accuracy,
        },
        "fs": {
            "best_fitness": fs_result.best_fitness,
            "history": fs_result.history,
            "evaluations": fs_result.evaluations,
            "iterations": fs_result.iterations,
        },
        "fc": {
            "best_fitness": fc_result.best_fitness,
            "history": fc_result.history,
            "evaluations": fc_result.evaluations,
        },
        "seeds": {
            "master": config.master_seed,
            "fitness": derive_seed(config.master_seed, 2),
            "fs": fs_config.master_seed,
            "fc": gp_config.master_seed,
        },
        "config": _config_echo(config),
        "timings": {
            "fs_seconds": fs_seconds,
            "fc_seconds": fc_seconds,
            "eval_seconds": eval_seconds,
            "total_seconds": fs_seconds + fc_seconds + eval_seconds,
        },
    }


def _config_echo(config: PipelineConfig) -> dict:
    echo = asdict(config)
    echo["categorical_columns"] = list(config.categorical_columns)
    echo["gp"]["init_depth_range"] = list(config.gp.init_depth_range)
    return echo


def run_repeated(config: PipelineConfig, repetitions: int,
                 train: Dataset | None = None, test: Dataset | None = None,
                 on_report=None) -> tuple[list[dict], dict]:
    """Repeat the pipeline with per-repetition derived seeds and aggregate means."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    reports = []
    for r in range(repetitions):
        rep_config = PipelineConfig(**{**asdict_config(config),
                                       "master_seed": derive_seed(config.master_seed, 5, r)})
        report = run_pipeline(rep_config, train, test)
        report["repetition"] = r
        reports.append(report)
        if on_report is not None:
            on_report(r, report)
    keys = ("accuracy", "sensitivity", "specificity", "fpr", "multiclass_accuracy")
    aggregate = {k: float(np.mean([rep["metrics"][k] for rep in reports])) for k in keys}
    aggregate["mean_selected_count"] = float(np.mean([rep["selected_count"] for rep in reports]))
    aggregate["mean_augmented_count"] = float(np.mean([rep["augmented_count"] for rep in reports]))
    aggregate["mean_total_seconds"] = float(np.mean([rep["timings"]["total_seconds"]
                                                     for rep in reports]))
    aggregate["repetitions"] = repetitions
    return reports, aggregate


def asdict_config(config: PipelineConfig) -> dict:
    """Field dict with nested configs kept as objects (for replace-style copies)."""
    return {f: getattr(config, f) for f in PipelineConfig.__dataclass_fields__}


def save_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
