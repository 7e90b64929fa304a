"""Deterministic synthetic classification datasets and delimited-text loading.

Generators place class structure at fixed geometry so difficulty is governed
by a single noise knob; the split is a seeded 80/20 shuffle.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, ParseError

VAL_FRACTION = 0.2


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    classes: int
    provenance: str

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def train_features(self) -> np.ndarray:
        return self.features[self.train_idx]

    @property
    def train_labels(self) -> np.ndarray:
        return self.labels[self.train_idx]

    @property
    def val_features(self) -> np.ndarray:
        return self.features[self.val_idx]

    @property
    def val_labels(self) -> np.ndarray:
        return self.labels[self.val_idx]


def _split_indices(n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise ParameterError(f"need at least 2 samples to split, got {n}")
    n_val = max(1, int(n * VAL_FRACTION))
    perm = rng.permutation(n)
    return perm[n_val:], perm[:n_val]


def _finish(features, labels, classes, seed, provenance) -> Dataset:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed).spawn(1)[0]))
    train_idx, val_idx = _split_indices(features.shape[0], rng)
    return Dataset(
        features=np.ascontiguousarray(features, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64),
        train_idx=train_idx,
        val_idx=val_idx,
        classes=int(classes),
        provenance=provenance,
    )


def _blob_centers(classes: int, features: int) -> np.ndarray:
    # unit-norm fixed centers: one basis vector per class when the space is
    # wide enough, otherwise a regular polygon in the first two dimensions
    centers = np.zeros((classes, features))
    if features >= classes:
        centers[np.arange(classes), np.arange(classes)] = 1.0
    else:
        angles = 2.0 * np.pi * np.arange(classes) / classes
        centers[:, 0] = np.cos(angles)
        centers[:, 1] = np.sin(angles)
    return centers


def make_blobs(n: int, classes: int, features: int, spread: float, seed: int) -> Dataset:
    """Isotropic Gaussian clusters at fixed unit-norm centers."""
    if classes < 2:
        raise ParameterError(f"need at least 2 classes, got {classes}")
    if n < 10 * classes:
        raise ParameterError(f"need at least {10 * classes} samples for {classes} classes, got {n}")
    if features < 2:
        raise ParameterError(f"need at least 2 features, got {features}")
    if spread <= 0:
        raise ParameterError(f"spread must be positive, got {spread}")
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = _blob_centers(classes, features)
    counts = [n // classes + (1 if i < n % classes else 0) for i in range(classes)]
    xs, ys = [], []
    for label, count in enumerate(counts):
        xs.append(centers[label] + spread * rng.standard_normal((count, features)))
        ys.append(np.full(count, label, dtype=np.int64))
    prov = f"blobs(n={n}, classes={classes}, features={features}, spread={spread}, seed={seed})"
    return _finish(np.concatenate(xs), np.concatenate(ys), classes, seed, prov)


def make_rings(n: int, classes: int, noise: float, seed: int) -> Dataset:
    """Concentric 2-D annuli at radii 0.5, 1.0, ... with Gaussian radial noise."""
    if classes < 2:
        raise ParameterError(f"need at least 2 classes, got {classes}")
    if n < 2 * classes:
        raise ParameterError(f"need at least {2 * classes} samples for {classes} classes, got {n}")
    if noise < 0:
        raise ParameterError(f"noise must be non-negative, got {noise}")
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = [n // classes + (1 if i < n % classes else 0) for i in range(classes)]
    xs, ys = [], []
    for label, count in enumerate(counts):
        angles = rng.uniform(0.0, 2.0 * np.pi, count)
        radii = 0.5 * (label + 1) + noise * rng.standard_normal(count)
        xs.append(np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1))
        ys.append(np.full(count, label, dtype=np.int64))
    prov = f"rings(n={n}, classes={classes}, noise={noise}, seed={seed})"
    return _finish(np.concatenate(xs), np.concatenate(ys), classes, seed, prov)


def load_delimited(path, label_column: int, delimiter: str = ",",
                   has_header: bool = False, seed: int = 0) -> Dataset:
    """Parse a delimited text file of float features plus one integer label column."""
    with open(path, newline="") as fh:
        raw = list(csv.reader(fh, delimiter=delimiter))
    start = 1 if has_header else 0
    rows = [(i + 1, row) for i, row in enumerate(raw[start:], start=start) if row]
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0][1])
    if not 0 <= label_column < width:
        raise ParameterError(f"label column {label_column} out of range for {width} columns")
    features, labels = [], []
    for line_no, row in rows:
        if len(row) != width:
            raise ParseError(f"{path}: line {line_no} has {len(row)} fields, expected {width}")
        try:
            numbers = [float(v) for v in row]
        except ValueError:
            raise ParseError(f"{path}: line {line_no} contains a non-numeric field") from None
        raw_label = numbers[label_column]
        if not raw_label.is_integer():
            raise ParseError(f"{path}: line {line_no} label {row[label_column]!r} is not an integer")
        label = int(raw_label)
        if label < 0:
            raise ParseError(f"{path}: line {line_no} label {label} is negative")
        labels.append(label)
        features.append([v for i, v in enumerate(numbers) if i != label_column])
    classes = max(labels) + 1
    prov = f"delimited(path={path}, label_column={label_column}, seed={seed})"
    return _finish(np.array(features, dtype=np.float64), labels, classes, seed, prov)


def standardize(dataset: Dataset) -> Dataset:
    """Zero-mean unit-variance features, statistics taken on the train split only."""
    mean = dataset.train_features.mean(axis=0)
    std = dataset.train_features.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    scaled = (dataset.features - mean) / std
    return replace(
        dataset,
        features=np.ascontiguousarray(scaled),
        provenance=dataset.provenance + " standardized",
    )
