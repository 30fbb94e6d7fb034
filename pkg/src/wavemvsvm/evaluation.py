"""Metrics, cross-validated grid search, rank statistics and the generalization bound."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .data import TwoViewDataset
from .errors import DegenerateInputError, InputError, ShapeError, StratificationError
from .kernel import gram_matrix
from .model import TrainedModel, decision_function, fit, sign_with_ties
from .solver import Hyperparams

__all__ = [
    "EvalReport",
    "RankTable",
    "accuracy",
    "confusion",
    "roc_curve",
    "auc",
    "evaluate",
    "stratified_folds",
    "kfold_grid_search",
    "rank_models",
    "friedman_from_ranks",
    "friedman_test",
    "nemenyi_cd",
    "Q_ALPHA",
    "rank_table",
    "bound_value",
    "default_norm_bound",
    "generalization_bound",
]

# Two-tailed Nemenyi critical values q_alpha (studentized range / sqrt 2), p = 2..10 models.
Q_ALPHA = {
    0.05: {2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850, 7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164},
    0.10: {2: 1.645, 3: 2.052, 4: 2.291, 5: 2.459, 6: 2.589, 7: 2.693, 8: 2.780, 9: 2.855, 10: 2.920},
}


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"length mismatch: {pred.shape[0]} vs {truth.shape[0]}")
    if pred.size == 0:
        raise ShapeError("empty input")
    return pred, truth


def accuracy(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(pred == truth))


def confusion(pred, truth):
    """``(tp, tn, fp, fn)`` with +1 as the positive class."""
    pred, truth = _pair(pred, truth)
    pos_p, pos_t = pred > 0, truth > 0
    return (int(np.sum(pos_p & pos_t)), int(np.sum(~pos_p & ~pos_t)),
            int(np.sum(pos_p & ~pos_t)), int(np.sum(~pos_p & pos_t)))


def roc_curve(scores, truth):
    """ROC points from a descending sweep over the distinct scores.

    Tied scores move together, producing one diagonal segment. Starts at
    (0, 0) and ends at (1, 1).
    """
    scores, truth = _pair(scores, truth)
    pos = truth > 0
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise InputError("ROC needs both classes in the ground truth")
    order = np.argsort(-scores, kind="mergesort")
    s, p = scores[order], pos[order]
    tps = np.cumsum(p)
    fps = np.cumsum(~p)
    # last index of each run of equal scores
    ends = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    points = [(0.0, 0.0)] + [(fps[i] / n_neg, tps[i] / n_pos) for i in ends]
    return [(float(x), float(y)) for x, y in points]


def auc(points) -> float:
    """Trapezoidal area under a list of (fpr, tpr) points."""
    pts = np.asarray(points, dtype=float)
    return float(np.trapezoid(pts[:, 1], pts[:, 0]))


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    tp: int
    tn: int
    fp: int
    fn: int
    roc_points: list
    auc: float

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "tp": self.tp, "tn": self.tn, "fp": self.fp,
                "fn": self.fn, "auc": self.auc}

    def write_roc_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["fpr", "tpr"])
            for x, y in self.roc_points:
                writer.writerow([repr(x), repr(y)])


def evaluate(scores, truth) -> EvalReport:
    """Report for real-valued decision ``scores``; predictions are their signs."""
    scores, truth = _pair(scores, truth)
    pred = sign_with_ties(scores)
    tp, tn, fp, fn = confusion(pred, truth)
    try:
        pts = roc_curve(scores, truth)
        area = auc(pts)
    except InputError:
        pts, area = [], float("nan")
    return EvalReport(accuracy(pred, truth), tp, tn, fp, fn, pts, area)


def stratified_folds(labels, k=5, seed=None):
    """Assign every sample to one of ``k`` folds, dealing each class round-robin
    after a seeded shuffle. Returns a list of ``k`` index arrays."""
    y = np.asarray(labels)
    if k < 2:
        raise InputError("k must be at least 2")
    if y.shape[0] < k:
        raise InputError(f"cannot split {y.shape[0]} samples into {k} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.shape[0], dtype=int)
    offset = 0
    for cls in (1.0, -1.0):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = (np.arange(idx.size) + offset) % k
        offset += idx.size
    folds = [np.flatnonzero(fold_of == f) for f in range(k)]
    for f, test in enumerate(folds):
        train_labels = np.delete(y, test)
        if np.unique(train_labels).size < 2 or np.unique(y[test]).size < 2:
            raise StratificationError(f"fold {f} lost a class; too few samples of the minority class for k={k}")
    return folds


def _fold_accuracy(dataset, hp, train_idx, test_idx):
    model, _ = fit(dataset.subset(train_idx), hp)
    test = dataset.subset(test_idx)
    return accuracy(sign_with_ties(decision_function(model, test.view1, test.view2)), test.labels)


def kfold_grid_search(dataset: TwoViewDataset, grid, k=5, seed=None, n_jobs=1):
    """Mean k-fold validation accuracy of every config in ``grid``.

    Returns ``(best, means)`` where ``means[i]`` belongs to ``grid[i]``.
    Ties on the mean go to the smaller ``c1``, then the smaller ``sigma``,
    then the earlier grid position.
    """
    grid = list(grid)
    if not grid:
        raise InputError("grid is empty")
    folds = stratified_folds(dataset.labels, k, seed)
    all_idx = np.arange(dataset.n)
    jobs = [(g, f) for g in range(len(grid)) for f in range(k)]

    def run(job):
        g, f = job
        return _fold_accuracy(dataset, grid[g], np.setdiff1d(all_idx, folds[f]), folds[f])

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            scores = list(pool.map(run, jobs))
    else:
        scores = [run(j) for j in jobs]
    means = np.asarray(scores).reshape(len(grid), k).mean(axis=1)
    best = min(range(len(grid)), key=lambda i: (-means[i], grid[i].c1, grid[i].sigma, i))
    return grid[best], means


def rank_models(acc) -> np.ndarray:
    """Per-dataset ranks (column-wise); highest accuracy gets rank 1, ties mid-ranked."""
    acc = np.asarray(acc, dtype=float)
    return np.column_stack([rankdata(-acc[:, j], method="average") for j in range(acc.shape[1])])


def friedman_from_ranks(avg_ranks, n_datasets):
    """``(chi2_f, f_f)`` from average ranks over ``n_datasets`` datasets.

    ``f_f`` is ``inf`` when the models are ranked identically on every
    dataset (chi2_f reaches its maximum N(p-1)).
    """
    R = np.asarray(avg_ranks, dtype=float)
    p, N = R.size, n_datasets
    if p < 2 or N < 2:
        raise InputError("Friedman test needs at least two models and two datasets")
    chi2 = 12.0 * N / (p * (p + 1)) * (np.sum(R**2) - p * (p + 1) ** 2 / 4.0)
    denom = N * (p - 1) - chi2
    scale = N * (p - 1)
    if denom < -1e-9 * scale:
        raise DegenerateInputError(f"F_F denominator is negative ({denom}); average ranks are inconsistent")
    if denom <= 1e-9 * scale:
        return float(chi2), math.inf
    return float(chi2), float((N - 1) * chi2 / denom)


def friedman_test(acc):
    """``(avg_ranks, chi2_f, f_f)`` for a p x N accuracy matrix (models x datasets)."""
    acc = np.asarray(acc, dtype=float)
    if acc.ndim != 2:
        raise ShapeError("accuracy matrix must be 2-D (models x datasets)")
    avg = rank_models(acc).mean(axis=1)
    chi2, ff = friedman_from_ranks(avg, acc.shape[1])
    return avg, chi2, ff


def nemenyi_cd(p, n_datasets, q_alpha) -> float:
    """Critical difference q_alpha * sqrt(p (p+1) / (6 N))."""
    if p < 2 or n_datasets < 1 or q_alpha < 0:
        raise InputError("need p >= 2, N >= 1 and q_alpha >= 0")
    return float(q_alpha * math.sqrt(p * (p + 1) / (6.0 * n_datasets)))


@dataclass(frozen=True)
class RankTable:
    names: list
    accuracies: np.ndarray
    ranks: np.ndarray
    avg_ranks: np.ndarray
    chi2_f: float
    f_f: float
    cd: float


def rank_table(acc, names=None, q_alpha=None, alpha=0.05) -> RankTable:
    acc = np.asarray(acc, dtype=float)
    p, N = acc.shape
    names = list(names) if names is not None else [f"model{i + 1}" for i in range(p)]
    if q_alpha is None:
        try:
            q_alpha = Q_ALPHA[alpha][p]
        except KeyError:
            raise InputError(f"no tabulated q_alpha for alpha={alpha}, p={p}; pass q_alpha") from None
    ranks = rank_models(acc)
    avg, chi2, ff = friedman_test(acc)
    return RankTable(names, acc, ranks, avg, chi2, ff, nemenyi_cd(p, N, q_alpha))


def bound_value(zeta1, zeta2, diag1, diag2, delta, theta, norm_bound) -> float:
    """Right-hand side of the two-view margin bound on P[y g(x) <= 0]::

        sum(z1 + delta z2) / (n (1 + delta))
        + 3 sqrt(ln(2/theta) / (2n))
        + 4 N / (n (1 + delta)) * sqrt(sum(k1(x_i, x_i) + delta^2 k2(x_i, x_i)))
    """
    z1, z2 = np.asarray(zeta1, float), np.asarray(zeta2, float)
    d1, d2 = np.asarray(diag1, float), np.asarray(diag2, float)
    n = z1.size
    if not (z2.size == d1.size == d2.size == n) or n == 0:
        raise ShapeError("slack and diagonal vectors must share a non-zero length")
    if not delta > 0 or not 0 < theta < 1 or not norm_bound > 0:
        raise InputError("need delta > 0, theta in (0, 1) and norm_bound > 0")
    slack = np.sum(z1 + delta * z2) / (n * (1.0 + delta))
    confidence = 3.0 * math.sqrt(math.log(2.0 / theta) / (2.0 * n))
    complexity = 4.0 * norm_bound / (n * (1.0 + delta)) * math.sqrt(np.sum(d1 + delta**2 * d2))
    return float(slack + confidence + complexity)


def default_norm_bound(model: TrainedModel) -> float:
    """sqrt(gamma a1'K1 a1 + a2'K2 a2) on the model's own support set."""
    k1 = gram_matrix(model.support1, model.kernel1)
    k2 = gram_matrix(model.support2, model.kernel2)
    value = model.gamma * model.alpha1 @ k1 @ model.alpha1 + model.alpha2 @ k2 @ model.alpha2
    return float(math.sqrt(max(value, 0.0)))


def generalization_bound(model: TrainedModel, train: TwoViewDataset, zeta1=None, zeta2=None,
                         delta=1.0, theta=0.05, norm_bound=None) -> float:
    """Bound evaluated for a trained model; slacks default to the solver's final ones."""
    zeta1 = model.zeta1 if zeta1 is None else zeta1
    zeta2 = model.zeta2 if zeta2 is None else zeta2
    if zeta1 is None or zeta2 is None:
        raise InputError("model carries no slacks; pass zeta1 and zeta2")
    if norm_bound is None:
        norm_bound = default_norm_bound(model)
    diag1 = np.ones(train.n)  # Gaussian kernel: k(x, x) = 1
    diag2 = np.ones(train.n)
    return bound_value(zeta1, zeta2, diag1, diag2, delta, theta, norm_bound)
