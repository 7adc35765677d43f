"""Datasets: synthetic Gaussian clusters, Dirichlet non-iid client partitioning, CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus dense integer labels.

    ``num_classes`` is the size of the global label space, which shards keep
    even when they only hold a subset of the classes.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ConfigurationError("features must be (n, d) with n labels", "dataset")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise ConfigurationError("label outside [0, num_classes)", "dataset")
        if not np.all(np.isfinite(x)):
            raise ConfigurationError("features must be finite", "dataset")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def num_samples(self) -> int:
        return int(self.labels.size)

    @property
    def input_dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.num_classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


@dataclass(frozen=True)
class PartitionSpec:
    alpha: float
    num_clients: int
    seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigurationError("must be > 0", "partition.alpha")
        if self.num_clients < 2:
            raise ConfigurationError("must be >= 2", "partition.num_clients")


def minmax_normalize(features: np.ndarray) -> np.ndarray:
    """Scale each column to [0, 1]; constant columns map to 0."""
    x = np.asarray(features, dtype=np.float64)
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (x - lo) / safe, 0.0)


def generate_synthetic(
    classes: int,
    per_class: int,
    input_dim: int,
    spread: float,
    seed: int,
) -> Dataset:
    """Isotropic Gaussian blobs around standard-normal class means, min-max normalized."""
    if classes < 2:
        raise ConfigurationError("must be >= 2", "data.classes")
    if per_class < 1:
        raise ConfigurationError("must be >= 1", "data.per_class")
    if input_dim < 1:
        raise ConfigurationError("must be >= 1", "data.input_dim")
    if spread < 0:
        raise ConfigurationError("must be >= 0", "data.spread")
    rng = np.random.default_rng(seed)
    means = rng.normal(0.0, 1.0, size=(classes, input_dim))
    labels = np.repeat(np.arange(classes), per_class)
    noise = rng.normal(0.0, 1.0, size=(labels.size, input_dim))
    features = means[labels] + spread * noise
    order = rng.permutation(labels.size)
    return Dataset(minmax_normalize(features[order]), labels[order], classes)


def dirichlet_indices(labels: np.ndarray, num_classes: int, spec: PartitionSpec) -> list[np.ndarray]:
    """Per-class Dir(alpha) allocation of sample indices to ``spec.num_clients`` shards."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    m = spec.num_clients
    if m > n:
        raise ConfigurationError(f"{m} clients but only {n} samples", "partition.num_clients")
    counts = np.bincount(labels, minlength=num_classes)
    rng = np.random.default_rng(spec.seed)
    shards: list[list[int]] = [[] for _ in range(m)]
    for c in range(num_classes):
        idx = np.flatnonzero(labels == c)
        if idx.size == 0:
            continue
        rng.shuffle(idx)
        props = rng.dirichlet(np.full(m, spec.alpha))
        cuts = (np.cumsum(props) * idx.size).astype(np.int64)[:-1]
        for k, part in enumerate(np.split(idx, cuts)):
            shards[k].extend(part.tolist())

    # Empty-shard repair: hand each empty shard one sample of the most common
    # class, taking donors round-robin; a donor must keep at least one sample.
    common = int(np.argmax(counts))
    cursor = 0
    for k in range(m):
        if shards[k]:
            continue
        donor = None
        for step in range(m):
            j = (cursor + step) % m
            if len(shards[j]) >= 2 and any(labels[i] == common for i in shards[j]):
                donor = j
                break
        if donor is None:
            # nobody spare holds the common class; fall back to the largest shard
            donor = max(range(m), key=lambda j: (len(shards[j]), -j))
            pick = len(shards[donor]) - 1
        else:
            pick = max(p for p, i in enumerate(shards[donor]) if labels[i] == common)
        shards[k].append(shards[donor].pop(pick))
        cursor = (donor + 1) % m
    return [np.sort(np.asarray(s, dtype=np.int64)) for s in shards]


def partition_dirichlet(data: Dataset, spec: PartitionSpec) -> list[Dataset]:
    return [data.subset(idx) for idx in dirichlet_indices(data.labels, data.num_classes, spec)]


def _label_sort_key(values: list[str]):
    try:
        return sorted(values, key=float)
    except ValueError:
        return sorted(values)


def load_csv(path: str | Path, label_column: str, *, normalize: bool = True) -> Dataset:
    """Read a headed CSV; every non-label column must be numeric.

    Labels are re-indexed densely from 0 in sorted order (numeric order when all
    labels parse as numbers).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty; a header row is required") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ConfigurationError(
                f"column {label_column!r} not found in {path} (columns: {header})",
                "--label-column",
            )
        li = header.index(label_column)
        rows: list[list[float]] = []
        raw_labels: list[str] = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            feats = []
            for col, cell in enumerate(row):
                if col == li:
                    continue
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"non-numeric value {cell!r} in column {header[col]!r}", line
                    ) from None
            rows.append(feats)
            raw_labels.append(row[li].strip())
    if not rows:
        raise ParseError(f"{path} has no data rows")
    if len(header) < 2:
        raise ParseError(f"{path} has no feature columns", 1)
    names = _label_sort_key(sorted(set(raw_labels)))
    index = {name: i for i, name in enumerate(names)}
    features = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(features)):
        raise ParseError(f"{path} contains non-finite feature values")
    if normalize:
        features = minmax_normalize(features)
    labels = np.asarray([index[v] for v in raw_labels], dtype=np.int64)
    return Dataset(features, labels, max(len(names), 2))


def save_csv(data: Dataset, path: str | Path, label_column: str = "label") -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(data.input_dim)] + [label_column])
        for x, y in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])
