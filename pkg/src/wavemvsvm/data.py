"""Two-view datasets: CSV ingestion, PCA view synthesis, splits, scaling, label noise."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, FormatError, InputError, ShapeError

__all__ = [
    "TwoViewDataset",
    "ZERO_ONE",
    "load_csv",
    "save_matrix_csv",
    "save_two_view_csv",
    "PCAProjection",
    "synthesize_view2_pca",
    "train_test_split",
    "Standardizer",
    "standardize",
    "inject_label_noise",
    "make_synthetic_two_view",
    "round_half_up",
]

#: label map turning {0, 1} labels into {-1, +1}
ZERO_ONE = {0.0: -1, 1.0: 1}


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class TwoViewDataset:
    view1: np.ndarray
    view2: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        v1 = np.array(self.view1, dtype=float)
        v2 = np.array(self.view2, dtype=float)
        y = np.array(self.labels, dtype=float)
        if v1.ndim != 2 or v2.ndim != 2 or y.ndim != 1:
            raise ShapeError("views must be 2-D and labels 1-D")
        if not (v1.shape[0] == v2.shape[0] == y.shape[0]):
            raise ShapeError(f"row counts differ: view1 {v1.shape[0]}, view2 {v2.shape[0]}, labels {y.shape[0]}")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise InputError("labels must be -1 or +1")
        if not (np.all(np.isfinite(v1)) and np.all(np.isfinite(v2))):
            raise InputError("features contain non-finite values")
        for arr in (v1, v2, y):
            arr.setflags(write=False)
        object.__setattr__(self, "view1", v1)
        object.__setattr__(self, "view2", v2)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def __len__(self):
        return self.n

    def subset(self, idx) -> "TwoViewDataset":
        idx = np.asarray(idx, dtype=int)
        return TwoViewDataset(self.view1[idx], self.view2[idx], self.labels[idx])

    def with_labels(self, labels) -> "TwoViewDataset":
        return TwoViewDataset(self.view1, self.view2, labels)


def load_csv(path, has_header=False, label_column=-1, label_map=None):
    """Read a numeric CSV into ``(features, labels)``.

    ``label_column=None`` reads features only and returns ``labels=None``.
    ``label_map`` maps raw label values to -1/+1 (see :data:`ZERO_ONE`);
    without it the raw values must already be -1 or +1.
    Errors carry the 1-based line number of the offending row.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1 and has_header:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(f"{path}: line {lineno}: expected {width} fields, found {len(row)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise FormatError(f"{path}: line {lineno}: non-numeric field") from None
            if not all(math.isfinite(v) for v in rows[-1]):
                raise FormatError(f"{path}: line {lineno}: non-finite field")
            rows[-1].append(lineno)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    table = np.array(rows, dtype=float)
    linenos, table = table[:, -1].astype(int), table[:, :-1]
    if label_column is None:
        return table, None
    col = label_column % table.shape[1]
    raw = table[:, col]
    features = np.delete(table, col, axis=1)
    if features.shape[1] == 0:
        raise FormatError(f"{path}: no feature columns besides the label")
    mapping = label_map if label_map is not None else {-1.0: -1, 1.0: 1}
    mapping = {float(k): v for k, v in mapping.items()}
    labels = np.empty(raw.shape[0])
    for i, value in enumerate(raw):
        if value not in mapping:
            raise FormatError(f"{path}: line {linenos[i]}: unknown label {value:g}")
        labels[i] = mapping[value]
    return features, labels


def save_matrix_csv(path, matrix, header=None):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def save_two_view_csv(dataset: TwoViewDataset, directory, labels_inline=True):
    """Write ``view1.csv`` and ``view2.csv`` (labels as last column of each),
    or with ``labels_inline=False`` a separate ``labels.csv``."""
    os.makedirs(directory, exist_ok=True)
    y = dataset.labels[:, None]
    if labels_inline:
        save_matrix_csv(os.path.join(directory, "view1.csv"), np.hstack([dataset.view1, y]))
        save_matrix_csv(os.path.join(directory, "view2.csv"), np.hstack([dataset.view2, y]))
    else:
        save_matrix_csv(os.path.join(directory, "view1.csv"), dataset.view1)
        save_matrix_csv(os.path.join(directory, "view2.csv"), dataset.view2)
        save_matrix_csv(os.path.join(directory, "labels.csv"), y)


@dataclass(frozen=True)
class PCAProjection:
    """Centered PCA: ``scores = (X - mean) @ components.T``."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray

    @classmethod
    def fit(cls, X, variance_threshold=0.95) -> "PCAProjection":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 2:
            raise InputError("PCA needs a 2-D array with at least two rows")
        if not 0.0 < variance_threshold <= 1.0:
            raise InputError(f"variance_threshold must lie in (0, 1], got {variance_threshold}")
        mean = X.mean(axis=0)
        Xc = X - mean
        _, s, vt = np.linalg.svd(Xc, full_matrices=False)
        tol = max(Xc.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        rank = int(np.sum(s > tol))
        if rank == 0:
            raise DegenerateInputError("data have zero variance; no principal components")
        var = s[:rank] ** 2
        ratio = var / var.sum()
        cum = np.cumsum(ratio)
        k = min(int(np.searchsorted(cum, variance_threshold - 1e-12)) + 1, rank)
        comps = vt[:k].copy()
        # sign convention: largest-magnitude loading of each component is positive
        pivots = np.argmax(np.abs(comps), axis=1)
        comps *= np.sign(comps[np.arange(k), pivots])[:, None]
        return cls(mean, comps, ratio[:k])

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.mean.shape[0]:
            raise ShapeError(f"expected {self.mean.shape[0]} features, got {X.shape[1]}")
        return (X - self.mean) @ self.components.T

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "components": self.components.tolist(),
                "explained_variance_ratio": self.explained_variance_ratio.tolist()}

    @classmethod
    def from_dict(cls, d) -> "PCAProjection":
        return cls(np.asarray(d["mean"], float), np.asarray(d["components"], float),
                   np.asarray(d["explained_variance_ratio"], float))


def synthesize_view2_pca(view1, variance_threshold=0.95) -> np.ndarray:
    """Scores on the fewest principal components reaching ``variance_threshold``."""
    return PCAProjection.fit(view1, variance_threshold).transform(view1)


def train_test_split(dataset: TwoViewDataset, train_fraction=0.7, seed=None):
    if not 0.0 < train_fraction < 1.0:
        raise InputError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = dataset.n
    n_train = round_half_up(train_fraction * n)
    if n < 2 or n_train < 1 or n_train >= n:
        raise InputError(f"a {train_fraction} split of {n} rows leaves one side empty")
    perm = np.random.default_rng(seed).permutation(n)
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-scoring statistics of both views, estimated on training data.

    Constant features get scale 1, so they are only centered.
    """

    mean1: np.ndarray
    scale1: np.ndarray
    mean2: np.ndarray
    scale2: np.ndarray

    @staticmethod
    def _stats(X):
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        return mean, np.where(std > 0, std, 1.0)

    @classmethod
    def fit(cls, dataset: TwoViewDataset) -> "Standardizer":
        if dataset.n == 0:
            raise InputError("cannot standardize an empty training set")
        return cls(*cls._stats(dataset.view1), *cls._stats(dataset.view2))

    def transform_view(self, view: int, X):
        mean, scale = (self.mean1, self.scale1) if view == 1 else (self.mean2, self.scale2)
        return (np.asarray(X, dtype=float) - mean) / scale

    def inverse_view(self, view: int, Z):
        mean, scale = (self.mean1, self.scale1) if view == 1 else (self.mean2, self.scale2)
        return np.asarray(Z, dtype=float) * scale + mean

    def transform(self, dataset: TwoViewDataset) -> TwoViewDataset:
        return TwoViewDataset(self.transform_view(1, dataset.view1),
                              self.transform_view(2, dataset.view2), dataset.labels)

    def inverse(self, dataset: TwoViewDataset) -> TwoViewDataset:
        return TwoViewDataset(self.inverse_view(1, dataset.view1),
                              self.inverse_view(2, dataset.view2), dataset.labels)

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("mean1", "scale1", "mean2", "scale2")}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(**{k: np.asarray(d[k], float) for k in ("mean1", "scale1", "mean2", "scale2")})


def standardize(train: TwoViewDataset, test: TwoViewDataset):
    stats = Standardizer.fit(train)
    return stats.transform(train), stats.transform(test), stats


def inject_label_noise(labels, rate, seed=None) -> np.ndarray:
    """Flip exactly ``round_half_up(rate * n)`` labels chosen without replacement."""
    if not 0.0 <= rate <= 1.0:
        raise InputError(f"rate must lie in [0, 1], got {rate}")
    y = np.array(labels, dtype=float)
    count = round_half_up(rate * y.shape[0])
    idx = np.random.default_rng(seed).choice(y.shape[0], size=count, replace=False)
    y[idx] = -y[idx]
    return y


def make_synthetic_two_view(n, separation, noise_std, seed=None, dims=(4, 3)) -> TwoViewDataset:
    """Balanced two-class, two-view Gaussian data.

    In each view the class means sit at ``+/- separation * u`` with ``u`` the
    normalised all-ones direction; views share the latent label but draw
    independent isotropic noise.
    """
    if n < 4 or n % 2:
        raise InputError(f"n must be an even number >= 4, got {n}")
    rng = np.random.default_rng(seed)
    y = np.repeat([1.0, -1.0], n // 2)
    rng.shuffle(y)
    views = []
    for m in dims:
        u = np.ones(m) / np.sqrt(m)
        views.append(y[:, None] * separation * u + noise_std * rng.standard_normal((n, m)))
    return TwoViewDataset(views[0], views[1], y)
