"""Dataset container, CSV ingestion, synthetic generation, and stratified sampling."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Raised for malformed inputs or contract violations in data handling."""


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with binary labels.

    Rows carry stable integer ids 0..n-1 (their row positions) used to
    index per-instance selection weights.
    """

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray    # (n,) int64, values in {0, 1}
    pos_ids: np.ndarray = field(init=False)
    neg_ids: np.ndarray = field(init=False)

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if labels.shape != (feats.shape[0],):
            raise DataError("labels length must match feature rows")
        if not np.isin(labels, (0, 1)).all():
            raise DataError("label out of {0,1}")
        if not np.isfinite(feats).all():
            raise DataError("non-finite feature value")
        pos = np.flatnonzero(labels == 1)
        neg = np.flatnonzero(labels == 0)
        if len(pos) == 0 or len(neg) == 0:
            raise DataError("single-class data")
        feats.setflags(write=False)
        labels.setflags(write=False)
        pos.setflags(write=False)
        neg.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "pos_ids", pos)
        object.__setattr__(self, "neg_ids", neg)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return len(self.pos_ids)

    @property
    def n_neg(self) -> int:
        return len(self.neg_ids)

    @property
    def prior_p(self) -> float:
        return self.n_pos / self.n


@dataclass(frozen=True)
class Minibatch:
    """Ids of one stratified draw: sampled without replacement within each class."""

    pos_ids: np.ndarray
    neg_ids: np.ndarray

    @property
    def size(self) -> int:
        return len(self.pos_ids) + len(self.neg_ids)


@dataclass(frozen=True)
class SplitSpec:
    """Stratified train/val/test proportions plus the shuffling seed."""

    train_frac: float = 0.7
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f < 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
            raise DataError("split fractions must be nonnegative and sum to 1")


def load_csv(path, label_column: str = "label") -> Dataset:
    """Read a UTF-8 comma-separated file with a header row into a Dataset.

    Row order is preserved; ids are assigned 0..n-1 in file order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: missing label column {label_column!r}")
        label_idx = header.index(label_column)
        feat_idx = [i for i in range(len(header)) if i != label_idx]
        rows, labels = [], []
        for r, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{r}: expected {len(header)} fields, got {len(row)}")
            lab = row[label_idx].strip()
            if lab not in ("0", "1"):
                raise DataError(f"{path}:{r}: label out of {{0,1}}: {lab!r}")
            try:
                feats = [float(row[i]) for i in feat_idx]
            except ValueError:
                bad = next(i for i in feat_idx if not _is_float(row[i]))
                raise DataError(
                    f"{path}:{r}: unparseable value in column {header[bad]!r}: {row[bad]!r}"
                ) from None
            if not all(np.isfinite(feats)):
                raise DataError(f"{path}:{r}: non-finite feature value")
            rows.append(feats)
            labels.append(int(lab))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(rows, dtype=np.float64), np.array(labels, dtype=np.int64))


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def save_csv(ds: Dataset, path, label_column: str = "label") -> None:
    """Write a Dataset back to CSV (inverse of load_csv up to float formatting)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(ds.dim)] + [label_column])
        for i in range(ds.n):
            writer.writerow([repr(float(v)) for v in ds.features[i]]
                            + [int(ds.labels[i])])


def generate_synthetic(n: int, imbalance: float, d: int = 5,
                       separation: float = 2.0, seed: int = 0) -> Dataset:
    """Two unit-variance Gaussian blobs with means ±separation/2 on every axis.

    `imbalance` is the positive-class fraction; deterministic per seed.
    """
    if n < 4:
        raise DataError("n must be at least 4")
    if not 0.0 < imbalance < 1.0:
        raise DataError("imbalance must lie in (0,1)")
    if separation < 0:
        raise DataError("separation must be nonnegative")
    if d < 1:
        raise DataError("d must be positive")
    n_pos = int(round(n * imbalance))
    n_pos = min(max(n_pos, 1), n - 1)
    n_neg = n - n_pos
    rng = np.random.default_rng(seed)
    half = separation / 2.0
    pos = rng.standard_normal((n_pos, d)) + half
    neg = rng.standard_normal((n_neg, d)) - half
    feats = np.vstack([pos, neg])
    labels = np.concatenate([np.ones(n_pos, dtype=np.int64), np.zeros(n_neg, dtype=np.int64)])
    perm = rng.permutation(n)
    return Dataset(feats[perm], labels[perm])


def stratified_sample(ds: Dataset, n_pos_b: int, n_neg_b: int,
                      rng: np.random.Generator) -> Minibatch:
    """Draw a minibatch without replacement within each class."""
    if n_pos_b < 1 or n_neg_b < 1:
        raise DataError("batch sizes must be at least 1 per class")
    if n_pos_b > ds.n_pos or n_neg_b > ds.n_neg:
        raise DataError(
            f"batch request ({n_pos_b} pos, {n_neg_b} neg) exceeds class sizes "
            f"({ds.n_pos} pos, {ds.n_neg} neg)"
        )
    pos = rng.choice(ds.pos_ids, size=n_pos_b, replace=False)
    neg = rng.choice(ds.neg_ids, size=n_neg_b, replace=False)
    return Minibatch(pos, neg)


def _allocate(count: int, fracs) -> list[int]:
    # floor allocation, remainder to the largest fractional parts,
    # ties broken by split order (train, val, test)
    floors = [int(count * f + 1e-9) for f in fracs]
    rema = [count * f - fl for f, fl in zip(fracs, floors)]
    leftover = count - sum(floors)
    order = sorted(range(len(fracs)), key=lambda i: (-rema[i], i))
    for i in order[:leftover]:
        floors[i] += 1
    return floors


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Stratified split into train/val/test with proportional per-class counts."""
    fracs = (spec.train_frac, spec.val_frac, spec.test_frac)
    rng = np.random.default_rng(spec.seed)
    buckets = [[], [], []]
    for ids in (ds.pos_ids, ds.neg_ids):
        counts = _allocate(len(ids), fracs)
        if any(c == 0 and f > 0 for c, f in zip(counts, fracs)):
            raise DataError("split too small to keep both classes in every part")
        perm = rng.permutation(ids)
        start = 0
        for k, c in enumerate(counts):
            buckets[k].extend(perm[start:start + c])
            start += c
    parts = []
    for idx in buckets:
        idx = np.sort(np.asarray(idx, dtype=np.int64))
        parts.append(Dataset(ds.features[idx], ds.labels[idx]))
    return tuple(parts)
