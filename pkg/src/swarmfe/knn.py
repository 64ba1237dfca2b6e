"""KNN classification, confusion metrics and the wrapper fitness function.

The distance/vote inner loop lives in a compiled extension when available
(``swarmfe._knn_c``) with a numpy fallback; both implement identical tie
rules so results never depend on which backend loaded. Set
``SWARMFE_KNN_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DataError, project, stratified_split
from . import _knn_py

if os.environ.get("SWARMFE_KNN_BACKEND", "").lower() == "python":
    _kernel = _knn_py
    BACKEND = "python"
else:
    try:
        from . import _knn_c as _kernel
        BACKEND = "c"
    except ImportError:
        _kernel = _knn_py
        BACKEND = "python"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    sensitivity: float
    specificity: float
    fpr: float
    degenerate: bool = False  # a zero denominator was patched with a sentinel


@dataclass(frozen=True)
class FitnessProtocol:
    """How wrapper fitness evaluates a candidate feature subset.

    validation: ("holdout", fraction, seed) or ("kfold", folds, seed)
    """
    k: int = 5
    validation: tuple = ("holdout", 0.7, 0)
    positive_class: int | None = None  # binary framing; None = multiclass accuracy


def knn_predict(train: Dataset, queries: Dataset, k: int) -> np.ndarray:
    """Majority class among the k Euclidean-nearest training rows."""
    if train.n_features != queries.n_features:
        raise DataError(
            f"feature count mismatch: train {train.n_features}, queries {queries.n_features}")
    if k > train.n_rows:
        raise DataError(f"k={k} exceeds training size {train.n_rows}")
    if k < 1:
        raise DataError("k must be positive")
    classes, remapped = np.unique(train.labels, return_inverse=True)
    preds = _kernel.predict_remapped(
        np.ascontiguousarray(train.values, dtype=np.float64),
        np.ascontiguousarray(remapped, dtype=np.int64),
        np.ascontiguousarray(queries.values, dtype=np.float64),
        int(k), len(classes))
    return classes[preds]


def confusion(pred: np.ndarray, truth: np.ndarray, positive_class) -> ConfusionCounts:
    """Binary confusion counts under positive-class-vs-rest framing."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise DataError(f"length mismatch: {pred.shape} vs {truth.shape}")
    pp = pred == positive_class
    tp = truth == positive_class
    return ConfusionCounts(
        tp=int(np.sum(pp & tp)),
        tn=int(np.sum(~pp & ~tp)),
        fp=int(np.sum(pp & ~tp)),
        fn=int(np.sum(~pp & tp)),
    )


def metrics(c: ConfusionCounts) -> Metrics:
    """Accuracy, sensitivity, specificity and FPR from confusion counts.

    Zero denominators yield sentinel 1.0 (sensitivity/specificity) and 0.0
    (FPR) with the degenerate flag set, so aggregates stay well defined.
    """
    if c.total <= 0:
        raise DataError("empty confusion counts")
    accuracy = (c.tp + c.tn) / c.total
    degenerate = False
    if c.tp + c.fn > 0:
        sensitivity = c.tp / (c.tp + c.fn)
    else:
        sensitivity, degenerate = 1.0, True
    if c.tn + c.fp > 0:
        specificity = c.tn / (c.tn + c.fp)
        fpr = c.fp / (c.fp + c.tn)
    else:
        specificity, fpr, degenerate = 1.0, 0.0, True
    return Metrics(accuracy, sensitivity, specificity, fpr, degenerate)


def accuracy_score(pred: np.ndarray, truth: np.ndarray) -> float:
    if pred.shape != truth.shape:
        raise DataError("length mismatch between predictions and truth")
    return float(np.mean(pred == truth))


def _stratified_folds(labels: np.ndarray, folds: int, seed: int):
    rng = np.random.default_rng(seed)
    assignments = np.empty(len(labels), dtype=np.int64)
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        assignments[idx] = np.arange(len(idx)) % folds
    for f in range(folds):
        yield np.flatnonzero(assignments != f), np.flatnonzero(assignments == f)


def wrapper_fitness(data: Dataset, mask: np.ndarray, protocol: FitnessProtocol) -> float:
    """Accuracy of KNN on the mask-projected columns under internal validation.

    Deterministic for a fixed protocol seed; pure in (data, mask, protocol).
    """
    projected = project(data, mask)
    kind = protocol.validation[0]
    if kind == "holdout":
        _, fraction, seed = protocol.validation
        inner_train, inner_val = stratified_split(projected, fraction, seed)
        preds = knn_predict(inner_train, inner_val, protocol.k)
        return accuracy_score(preds, inner_val.labels)
    if kind == "kfold":
        _, folds, seed = protocol.validation
        from dataclasses import replace
        correct = 0
        for train_idx, val_idx in _stratified_folds(projected.labels, folds, seed):
            tr = replace(projected, values=projected.values[train_idx].copy(),
                         labels=projected.labels[train_idx].copy())
            va = replace(projected, values=projected.values[val_idx].copy(),
                         labels=projected.labels[val_idx].copy())
            correct += int(np.sum(knn_predict(tr, va, protocol.k) == va.labels))
        return correct / projected.n_rows
    raise DataError(f"unknown validation scheme {kind!r}")
