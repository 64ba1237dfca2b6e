"""Exact Wilcoxon signed-rank testing and method-comparison tables.

The p-value is exact: all 2^n sign assignments of the ranked absolute
differences are enumerated. Zero differences are dropped before ranking and
tied absolute differences receive average ranks.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class StatsError(Exception):
    pass


MAX_EXACT_N = 25

QUALITY_METRICS = ("accuracy", "sensitivity", "specificity", "fpr")


@dataclass(frozen=True)
class PairedSample:
    method_a: str
    method_b: str
    values_a: tuple[float, ...]
    values_b: tuple[float, ...]

    def __post_init__(self):
        if len(self.values_a) != len(self.values_b):
            raise StatsError("paired vectors must have equal length")
        if len(self.values_a) < 1:
            raise StatsError("need at least one pair")


@dataclass(frozen=True)
class BaselineRecord:
    method: str
    dataset: str
    features: float
    accuracy: float
    sensitivity: float
    specificity: float
    fpr: float
    time_seconds: float | None = None


def _signed_ranks(diffs: np.ndarray) -> np.ndarray:
    """Average ranks of |diffs| carrying the sign of each difference."""
    abs_d = np.abs(diffs)
    order = np.argsort(abs_d, kind="stable")
    ranks = np.empty(len(diffs))
    sorted_abs = abs_d[order]
    i = 0
    while i < len(diffs):
        j = i
        while j + 1 < len(diffs) and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1  # average of ranks i+1..j+1
        i = j + 1
    return np.sign(diffs) * ranks


def wilcoxon_exact(pairs: PairedSample, sidedness: str = "one") -> tuple[float, bool]:
    """Exact signed-rank p-value by full enumeration of sign assignments.

    One-sided tests the observed-dominant direction (the smaller of the two
    directional tails), so one-sided p <= two-sided p always holds. Returns
    (p_value, degenerate) where degenerate marks all-zero differences.
    """
    diffs = np.asarray(pairs.values_a) - np.asarray(pairs.values_b)
    diffs = diffs[diffs != 0.0]
    n = len(diffs)
    if n == 0:
        return 1.0, True
    if n > MAX_EXACT_N:
        raise StatsError(
            f"n={n} exceeds the exact-enumeration limit {MAX_EXACT_N}; "
            "use a normal-approximation test instead")
    signed = _signed_ranks(diffs)
    abs_ranks = np.abs(signed)
    w_plus = signed[signed > 0].sum()
    w_minus = -signed[signed < 0].sum()

    # distribution of W+ over all 2^n sign vectors; doubling the ranks makes
    # average ranks integral, so counting is exact
    doubled = np.rint(2 * abs_ranks).astype(np.int64)
    counts = np.zeros(int(doubled.sum()) + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: len(counts) - r]
        counts += shifted
    total = 2.0 ** n
    w2 = int(np.rint(2 * w_plus))

    def tail_ge(w):  # P(W+ >= w)
        return counts[w:].sum() / total

    def tail_le(w):  # P(W+ <= w)
        return counts[: w + 1].sum() / total

    if sidedness == "one":
        return float(min(tail_ge(w2), tail_le(w2))), False
    if sidedness == "two":
        hi = int(np.rint(2 * max(w_plus, w_minus)))
        lo = int(np.rint(2 * min(w_plus, w_minus)))
        return float(min(tail_ge(hi) + tail_le(lo), 1.0)), False
    raise StatsError(f"unknown sidedness {sidedness!r}")


def load_baselines(path) -> list[BaselineRecord]:
    """Read published baseline rows from a CSV.

    Expected columns: method, dataset, features, accuracy, sensitivity,
    specificity, fpr and optionally time_seconds.
    """
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            records.append(BaselineRecord(
                method=row["method"],
                dataset=row["dataset"],
                features=float(row["features"]),
                accuracy=float(row["accuracy"]),
                sensitivity=float(row["sensitivity"]),
                specificity=float(row["specificity"]),
                fpr=float(row["fpr"]),
                time_seconds=float(row["time_seconds"]) if row.get("time_seconds") else None,
            ))
    if not records:
        raise StatsError(f"{path}: no baseline rows")
    return records


def _oriented_vector(record: dict | BaselineRecord) -> list[float]:
    """Quality metrics oriented so larger is better (FPR becomes 1 - FPR)."""
    get = (lambda k: getattr(record, k)) if isinstance(record, BaselineRecord) else record.get
    return [get("accuracy"), get("sensitivity"), get("specificity"), 1.0 - get("fpr")]


def comparison_table(own: dict, own_name: str, baselines: list[BaselineRecord],
                     dataset: str, alpha: float = 0.05,
                     sidedness: str = "one") -> list[dict]:
    """Per-baseline comparison rows with exact p-values and rejection marks.

    ``own`` carries aggregate metrics (accuracy/sensitivity/specificity/fpr
    plus mean feature counts). Pairing uses the oriented quality metrics of
    the chosen dataset; callers with richer paired vectors can run
    wilcoxon_exact directly.
    """
    if not baselines:
        raise StatsError("no baselines to compare against")
    rows = []
    own_vec = _oriented_vector(own)
    for record in baselines:
        if record.dataset != dataset:
            continue
        pair = PairedSample(own_name, record.method,
                            tuple(own_vec), tuple(_oriented_vector(record)))
        p, degenerate = wilcoxon_exact(pair, sidedness)
        rows.append({
            "method": record.method,
            "features": record.features,
            "accuracy": record.accuracy,
            "sensitivity": record.sensitivity,
            "specificity": record.specificity,
            "fpr": record.fpr,
            "p_value": p,
            "rejected": (not degenerate) and p < alpha,
        })
    if not rows:
        raise StatsError(f"no baselines for dataset {dataset!r}")
    rows.append({
        "method": own_name,
        "features": own.get("mean_selected_count", float("nan")),
        "accuracy": own["accuracy"],
        "sensitivity": own["sensitivity"],
        "specificity": own["specificity"],
        "fpr": own["fpr"],
        "p_value": None,
        "rejected": None,
    })
    return rows


def table_to_markdown(rows: list[dict]) -> str:
    headers = ["Method", "(#) Features", "Accuracy", "Sensitivity",
               "Specificity", "FPR", "Exact p-value", "Rejected"]
    lines = ["| " + " | ".join(headers) + " |",
             "|" + "|".join("---" for _ in headers) + "|"]
    for row in rows:
        p = "" if row["p_value"] is None else f"{row['p_value']:.6f}"
        rej = "" if row["rejected"] is None else ("yes" if row["rejected"] else "no")
        lines.append("| " + " | ".join([
            row["method"], f"{row['features']:.4g}", f"{row['accuracy']:.4f}",
            f"{row['sensitivity']:.4f}", f"{row['specificity']:.4f}",
            f"{row['fpr']:.4f}", p, rej]) + " |")
    return "\n".join(lines) + "\n"


def table_to_csv(rows: list[dict], path) -> None:
    fields = ["method", "features", "accuracy", "sensitivity", "specificity",
              "fpr", "p_value", "rejected"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
