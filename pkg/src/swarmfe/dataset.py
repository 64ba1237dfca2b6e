"""CSV ingestion, categorical coding, min-max scaling and mask projection.

All tabular data is held in an immutable ``Dataset``: a float64 matrix of
feature values, an integer label vector (1-based class codes) and the column
schema that produced them. Normalization parameters are fit on a training
partition only and reapplied to test data, so no test statistics ever leak
into the scaler.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np


class DataError(Exception):
    """Raised for malformed input files or invalid dataset operations."""


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str  # "numeric" | "categorical" | "label"
    category_codes: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Dataset:
    """Immutable numeric table plus labels and provenance.

    values : (N, m) float64 array
    labels : (N,) int array, class codes in 1..C
    schema : one ColumnSchema per feature column, plus the label column last
    norm_params : (m, 2) array of per-column (min, max), or None before fitting
    """

    values: np.ndarray
    labels: np.ndarray
    schema: tuple[ColumnSchema, ...]
    norm_params: np.ndarray | None = None

    def __post_init__(self):
        if self.values.ndim != 2:
            raise DataError("values must be a 2-D matrix")
        if self.values.shape[0] != self.labels.shape[0]:
            raise DataError("values and labels disagree on row count")
        if self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise DataError("dataset needs at least one row and one feature")
        self.values.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.schema if c.kind != "label"]


def numericalize(column_values: list[str]) -> tuple[list[int], dict[str, int]]:
    """Assign dense integer codes to text values.

    Codes follow lexicographic order of the distinct values, starting at 0,
    so the mapping is deterministic regardless of row order. The returned
    code map is reused to encode test data.
    """
    if not column_values:
        raise DataError("cannot numericalize an empty column")
    code_map = {v: i for i, v in enumerate(sorted(set(column_values)))}
    return [code_map[v] for v in column_values], code_map


def encode_with_map(column_values: list[str], code_map: dict[str, int]) -> tuple[list[int], list[str]]:
    """Encode values with a fit-time map; unseen values get fresh codes.

    Returns the codes and the list of unseen values (for reporting). Each
    distinct unseen value gets the next free code past the fit-time maximum.
    """
    next_code = max(code_map.values()) + 1 if code_map else 0
    extended = dict(code_map)
    unseen = []
    codes = []
    for v in column_values:
        if v not in extended:
            extended[v] = next_code
            next_code += 1
            unseen.append(v)
        codes.append(extended[v])
    return codes, unseen


def load_csv(path, label_column: str, declared_categoricals: set[str] | None = None,
             category_maps: dict[str, dict[str, int]] | None = None) -> Dataset:
    """Read a headered CSV into a raw (un-normalized) Dataset.

    Columns in ``declared_categoricals`` are integer-coded; every other
    non-label column must parse as a number. Pass ``category_maps`` (from a
    previous load) to reuse fit-time codes on a test file; unseen categories
    then get fresh codes.
    """
    declared_categoricals = declared_categoricals or set()
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    if label_column not in header:
        raise DataError(f"{path}: label column {label_column!r} not in header")

    label_idx = header.index(label_column)
    feature_names = [h for i, h in enumerate(header) if i != label_idx]
    columns = {h: [row[i] for row in rows] for i, h in enumerate(header)}

    schema = []
    feature_cols = []
    for name in feature_names:
        raw = columns[name]
        if name in declared_categoricals:
            if category_maps and name in category_maps:
                codes, _ = encode_with_map(raw, category_maps[name])
                cmap = category_maps[name]
            else:
                codes, cmap = numericalize(raw)
            schema.append(ColumnSchema(name, "categorical", cmap))
            feature_cols.append(np.asarray(codes, dtype=np.float64))
        else:
            try:
                feature_cols.append(np.asarray([float(v) for v in raw]))
            except ValueError as exc:
                raise DataError(f"{path}: column {name!r}: {exc}") from None
            schema.append(ColumnSchema(name, "numeric"))

    raw_labels = columns[label_column]
    if category_maps and label_column in category_maps:
        label_codes, _ = encode_with_map(raw_labels, category_maps[label_column])
        label_map = category_maps[label_column]
    else:
        label_codes, label_map = numericalize(raw_labels)
    schema.append(ColumnSchema(label_column, "label", label_map))

    # class ids are 1-based
    labels = np.asarray(label_codes, dtype=np.int64) + 1
    values = np.column_stack(feature_cols)
    return Dataset(values=values, labels=labels, schema=tuple(schema))


def category_maps(data: Dataset) -> dict[str, dict[str, int]]:
    """Extract fit-time category code maps for reuse on a test file."""
    return {c.name: dict(c.category_codes) for c in data.schema if c.category_codes}


def fit_minmax(train: Dataset) -> np.ndarray:
    """Per-column (min, max) over the training partition, shape (m, 2)."""
    return np.stack([train.values.min(axis=0), train.values.max(axis=0)], axis=1)


def apply_minmax(data: Dataset, norm_params: np.ndarray) -> Dataset:
    """Scale each column to [0, 1] with fit-time parameters.

    Transformed value is (x - min) / (max - min), clamped to [0, 1] so unseen
    out-of-range test values stay inside the contract. Constant columns
    (max == min) map to all zeros.
    """
    lo = norm_params[:, 0]
    span = norm_params[:, 1] - lo
    safe_span = np.where(span == 0.0, 1.0, span)
    scaled = (data.values - lo) / safe_span
    scaled = np.where(span == 0.0, 0.0, scaled)
    scaled = np.clip(scaled, 0.0, 1.0)
    return replace(data, values=scaled, norm_params=norm_params)


def fit_zscore(train: Dataset) -> np.ndarray:
    """Per-column (mean, std) alternative scaler, shape (m, 2)."""
    return np.stack([train.values.mean(axis=0), train.values.std(axis=0)], axis=1)


def apply_zscore(data: Dataset, params: np.ndarray) -> Dataset:
    """Standardize with fit-time mean/std; constant columns map to zeros."""
    mean, std = params[:, 0], params[:, 1]
    safe = np.where(std == 0.0, 1.0, std)
    scaled = np.where(std == 0.0, 0.0, (data.values - mean) / safe)
    return replace(data, values=scaled, norm_params=params)


def save_norm_params(norm_params: np.ndarray, feature_names: list[str], path) -> None:
    doc = {name: {"min": float(lo), "max": float(hi)}
           for name, (lo, hi) in zip(feature_names, norm_params)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def load_norm_params(path, feature_names: list[str]) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return np.asarray([[doc[n]["min"], doc[n]["max"]] for n in feature_names])


def _stratified_indices(labels: np.ndarray, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    part_a, part_b = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < 2:
            raise DataError(f"class {cls} has fewer than 2 instances; cannot stratify")
        perm = rng.permutation(idx)
        n_a = int(round(fraction * len(idx)))
        n_a = min(max(n_a, 1), len(idx) - 1)
        part_a.append(perm[:n_a])
        part_b.append(perm[n_a:])
    return np.sort(np.concatenate(part_a)), np.sort(np.concatenate(part_b))


def stratified_split(data: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split into two disjoint, exhaustive parts preserving class ratios.

    Per-class sizes are within one instance of the exact proportion.
    Deterministic for a fixed seed.
    """
    if not 0.0 < fraction < 1.0:
        raise DataError("fraction must lie in (0, 1)")
    idx_a, idx_b = _stratified_indices(data.labels, fraction, seed)
    take = lambda idx: replace(data, values=data.values[idx].copy(), labels=data.labels[idx].copy())
    return take(idx_a), take(idx_b)


def stratified_subsample(data: Dataset, fraction: float, seed: int) -> Dataset:
    """Keep a stratified fraction of the rows (for desk-scale runs)."""
    part, _ = stratified_split(data, fraction, seed)
    return part


def project(data: Dataset, mask: np.ndarray) -> Dataset:
    """Keep the columns where the mask bit is 1, preserving order."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape[0] != data.n_features:
        raise DataError(f"mask length {mask.shape[0]} != feature count {data.n_features}")
    if not mask.any():
        raise DataError("all-zero mask: at least one feature must be selected")
    feature_schema = [c for c in data.schema if c.kind != "label"]
    label_schema = [c for c in data.schema if c.kind == "label"]
    kept = tuple(c for c, keep in zip(feature_schema, mask) if keep) + tuple(label_schema)
    norm = data.norm_params[mask] if data.norm_params is not None else None
    return Dataset(values=data.values[:, mask].copy(), labels=data.labels,
                   schema=kept, norm_params=norm)
