"""Synthetic 2-D dataset generators, CSV ingestion, and split masks.

Generators are bit-deterministic given their parameters and a seed.
Labels are always contiguous integers starting at 0, with every class
non-empty.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray  # (n, d) float64 feature matrix
    y: np.ndarray  # (n,) int64 labels in 0..c-1
    name: str

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.y.max()) + 1


@dataclass(frozen=True)
class SplitMasks:
    """Disjoint sorted index arrays over 0..n-1."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def _finish(X: np.ndarray, y: np.ndarray, name: str) -> Dataset:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.shape[0] < 2:
        raise DataError(f"dataset {name!r} needs at least 2 points, got {X.shape[0]}")
    if not np.isfinite(X).all():
        raise DataError(f"dataset {name!r} has non-finite feature values")
    counts = np.bincount(y)
    if counts.size < 1 or (counts == 0).any():
        raise DataError(f"dataset {name!r} has an empty class")
    return Dataset(X=X, y=y, name=name)


def gen_rings(ring_specs, center_blob=None, seed: int = 0, name: str = "rings") -> Dataset:
    """Concentric noisy rings, one class per ring.

    ``ring_specs`` is a sequence of ``(radius, count, noise_sd)``. Points
    get a uniformly random angle and a radius perturbed by Gaussian noise
    of the given standard deviation. ``center_blob``, if given, adds a
    ``(count, noise_sd)`` Gaussian blob at the origin as one extra class.
    """
    specs = list(ring_specs)
    if not specs:
        raise DataError("gen_rings needs at least one ring spec")
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for label, (radius, count, noise_sd) in enumerate(specs):
        count = int(count)
        if count < 1:
            raise DataError(f"ring {label}: count must be >= 1, got {count}")
        if noise_sd < 0:
            raise DataError(f"ring {label}: noise_sd must be >= 0, got {noise_sd}")
        theta = rng.uniform(0.0, 2.0 * math.pi, count)
        r = radius + rng.normal(0.0, 1.0, count) * noise_sd
        xs.append(np.column_stack((r * np.cos(theta), r * np.sin(theta))))
        ys.append(np.full(count, label, dtype=np.int64))
    if center_blob is not None:
        count, noise_sd = center_blob
        count = int(count)
        if count < 1:
            raise DataError(f"center blob: count must be >= 1, got {count}")
        if noise_sd < 0:
            raise DataError(f"center blob: noise_sd must be >= 0, got {noise_sd}")
        xs.append(rng.normal(0.0, 1.0, (count, 2)) * noise_sd)
        ys.append(np.full(count, len(specs), dtype=np.int64))
    return _finish(np.concatenate(xs), np.concatenate(ys), name)


def gen_clusters(cluster_specs, seed: int = 0, name: str = "clusters") -> Dataset:
    """Gaussian blobs, one class per ``(center, count, sd)`` spec."""
    specs = list(cluster_specs)
    if not specs:
        raise DataError("gen_clusters needs at least one cluster spec")
    d = len(np.atleast_1d(specs[0][0]))
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for label, (center, count, sd) in enumerate(specs):
        center = np.asarray(center, dtype=np.float64)
        if center.ndim != 1 or center.shape[0] != d:
            raise DataError(f"cluster {label}: center must be a length-{d} vector")
        count = int(count)
        if count < 1:
            raise DataError(f"cluster {label}: count must be >= 1, got {count}")
        if sd < 0:
            raise DataError(f"cluster {label}: sd must be >= 0, got {sd}")
        xs.append(center + rng.normal(0.0, 1.0, (count, d)) * sd)
        ys.append(np.full(count, label, dtype=np.int64))
    return _finish(np.concatenate(xs), np.concatenate(ys), name)


def load_csv(path, label_column: str, name: str | None = None) -> Dataset:
    """Load a comma-separated file with a header row into a Dataset.

    All columns except ``label_column`` must be numeric and finite; labels
    may be arbitrary strings or integers and are re-encoded to 0..c-1 in
    order of first appearance.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise DataError(f"CSV file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataError(f"{path}: no column named {label_column!r} in header {header}")
        label_idx = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        rows: list[list[float]] = []
        raw_labels: list[str] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {line_no} has {len(row)} fields, expected {len(header)}")
            feats = []
            for col_pos, cell in enumerate(row):
                if col_pos == label_idx:
                    continue
                col_name = header[col_pos]
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: line {line_no}, column {col_name!r}: non-numeric value {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(
                        f"{path}: line {line_no}, column {col_name!r}: non-finite value {cell!r}"
                    )
                feats.append(value)
            rows.append(feats)
            raw_labels.append(row[label_idx].strip())
    if not rows:
        raise DataError(f"{path}: no data rows")
    encoding: dict[str, int] = {}
    y = np.empty(len(raw_labels), dtype=np.int64)
    for i, lab in enumerate(raw_labels):
        if lab not in encoding:
            encoding[lab] = len(encoding)
        y[i] = encoding[lab]
    if len(encoding) < 2:
        raise DataError(f"{path}: only one class present ({next(iter(encoding))!r})")
    X = np.asarray(rows, dtype=np.float64)
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    return _finish(X, y, name)


def standardize(ds: Dataset) -> Dataset:
    """Z-score each feature column; constant columns are left centered."""
    mu = ds.X.mean(axis=0)
    sd = ds.X.std(axis=0)
    sd[sd == 0.0] = 1.0
    return Dataset(X=(ds.X - mu) / sd, y=ds.y, name=ds.name)


def _apportion(class_counts: np.ndarray, total: int, minimum: int) -> np.ndarray:
    """Split ``total`` across classes proportionally to ``class_counts``.

    Every class gets at least ``minimum`` and at most its own count.
    Largest-remainder rounding, ties broken by class index.
    """
    if total == 0:
        return np.full(class_counts.size, minimum, dtype=np.int64)
    available = int(class_counts.sum())
    if available < max(total, minimum * class_counts.size):
        raise DataError(f"split infeasible: need {total} points, only {available} available")
    quota = total * class_counts / available
    alloc = np.maximum(np.floor(quota).astype(np.int64), minimum)
    alloc = np.minimum(alloc, class_counts)
    # Adjust to the exact total, preferring classes whose allocation sits
    # furthest below (or least above) their proportional quota.
    while alloc.sum() < total:
        room = alloc < class_counts
        if not room.any():
            raise DataError("split infeasible: not enough points to apportion")
        deficit = np.where(room, quota - alloc, -np.inf)
        alloc[int(np.argmax(deficit))] += 1
    while alloc.sum() > total:
        movable = alloc > minimum
        if not movable.any():
            raise DataError(f"split infeasible: cannot keep {minimum} per class with total {total}")
        excess = np.where(movable, alloc - quota, -np.inf)
        alloc[int(np.argmax(excess))] -= 1
    return alloc


def split_masks(n: int, n_train: int, n_val: int, labels, seed: int = 0) -> SplitMasks:
    """Stratified random train/val/test assignment, deterministic per seed.

    Each class contributes to train proportionally to its size (at least
    one point per class); validation is apportioned the same way from the
    remainder, and everything left over is test. Test must be non-empty.
    """
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (n,):
        raise DataError(f"labels must have shape ({n},), got {y.shape}")
    class_counts = np.bincount(y)
    c = class_counts.size
    if (class_counts == 0).any():
        raise DataError("every class in 0..c-1 must be non-empty")
    if n_train < c:
        raise DataError(f"n_train={n_train} cannot cover all {c} classes")
    if n_val < 0:
        raise DataError(f"n_val must be >= 0, got {n_val}")
    if n_train + n_val >= n:
        raise DataError(
            f"n_train + n_val = {n_train + n_val} leaves an empty test set (n={n})"
        )
    train_per_class = _apportion(class_counts, n_train, minimum=1)
    val_per_class = _apportion(class_counts - train_per_class, n_val, minimum=0)

    rng = np.random.default_rng(seed)
    train, val, test = [], [], []
    for k in range(c):
        members = np.flatnonzero(y == k)
        members = members[rng.permutation(members.size)]
        a, b = train_per_class[k], train_per_class[k] + val_per_class[k]
        train.append(members[:a])
        val.append(members[a:b])
        test.append(members[b:])
    return SplitMasks(
        train=np.sort(np.concatenate(train)),
        val=np.sort(np.concatenate(val)),
        test=np.sort(np.concatenate(test)),
    )
