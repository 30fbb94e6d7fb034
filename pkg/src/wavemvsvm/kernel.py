"""Gaussian kernel and Gram matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import DomainError, ShapeError

__all__ = ["KernelConfig", "GramPair", "gaussian_kernel", "gram_matrix", "cross_gram"]


@dataclass(frozen=True)
class KernelConfig:
    """Width ``sigma`` of k(x, z) = exp(-||x - z||^2 / (2 sigma^2))."""

    sigma: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class GramPair:
    k1: np.ndarray
    k2: np.ndarray

    def __post_init__(self):
        if self.k1.shape != self.k2.shape or self.k1.ndim != 2 or self.k1.shape[0] != self.k1.shape[1]:
            raise ShapeError(f"Gram matrices must be square and equal-sized, got {self.k1.shape} and {self.k2.shape}")

    @property
    def n(self) -> int:
        return self.k1.shape[0]


def _as_matrix(X, name):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {X.shape}")
    return X


def gaussian_kernel(x, x2, cfg: KernelConfig = KernelConfig()) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise ShapeError(f"dimension mismatch: {x.shape[0]} vs {x2.shape[0]}")
    d = x - x2
    return float(np.exp(-np.dot(d, d) / (2.0 * cfg.sigma**2)))


def _to_kernel(sq_dist, sigma):
    return np.exp(-np.maximum(sq_dist, 0.0) / (2.0 * sigma**2))


def gram_matrix(X, cfg: KernelConfig = KernelConfig()) -> np.ndarray:
    """n x n Gram matrix of the rows of ``X``.

    Exactly symmetric with an exactly unit diagonal: only the upper
    triangle is computed and mirrored.
    """
    X = _as_matrix(X, "X")
    if X.shape[0] == 1:
        return np.ones((1, 1))
    return _to_kernel(squareform(pdist(X, "sqeuclidean")), cfg.sigma)


def cross_gram(Xtrain, Xtest, cfg: KernelConfig = KernelConfig()) -> np.ndarray:
    """t x n matrix with entry (j, i) = k(test row j, train row i)."""
    Xtrain = _as_matrix(Xtrain, "Xtrain")
    Xtest = _as_matrix(Xtest, "Xtest")
    if Xtrain.shape[1] != Xtest.shape[1]:
        raise ShapeError(f"feature dimension mismatch: train has {Xtrain.shape[1]}, test has {Xtest.shape[1]}")
    return _to_kernel(cdist(Xtest, Xtrain, "sqeuclidean"), cfg.sigma)
