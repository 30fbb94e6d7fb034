"""Fitted two-view classifier: training, weighted decision rule, JSON persistence."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .data import TwoViewDataset
from .errors import FormatError, InputError, ShapeError, UnsupportedVersionError
from .kernel import GramPair, KernelConfig, cross_gram, gram_matrix
from .solver import ConvergenceTrace, Hyperparams, admm_solve

__all__ = ["SCHEMA_VERSION", "TrainedModel", "fit", "decision_function", "predict", "save", "load"]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TrainedModel:
    alpha1: np.ndarray
    alpha2: np.ndarray
    gamma: float
    kernel1: KernelConfig
    kernel2: KernelConfig
    support1: np.ndarray
    support2: np.ndarray
    schema_version: int = SCHEMA_VERSION
    hyperparams: Hyperparams | None = None
    # final solver slacks on the training set, used by the bound evaluator
    zeta1: np.ndarray | None = None
    zeta2: np.ndarray | None = None
    # optional preprocessing recorded by the CLI (standardization, PCA view)
    preprocessing: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.gamma > 0:
            raise InputError(f"gamma must be positive, got {self.gamma}")
        for a, s, name in ((self.alpha1, self.support1, "1"), (self.alpha2, self.support2, "2")):
            if np.ndim(a) != 1 or np.ndim(s) != 2 or a.shape[0] != s.shape[0]:
                raise ShapeError(f"view {name}: {np.shape(a)} coefficients for support of shape {np.shape(s)}")
        if self.support1.shape[0] != self.support2.shape[0]:
            raise ShapeError("support sets of the two views differ in size")

    @property
    def n_support(self) -> int:
        return self.alpha1.shape[0]


def fit(dataset: TwoViewDataset, hp: Hyperparams = Hyperparams()):
    """Train on ``dataset``; returns ``(model, trace)``."""
    if dataset.n < 2:
        raise InputError("need at least two training samples")
    grams = GramPair(gram_matrix(dataset.view1, hp.kernel1), gram_matrix(dataset.view2, hp.kernel2))
    state, trace = admm_solve(grams, dataset.labels, hp)
    model = TrainedModel(
        alpha1=state.alpha1, alpha2=state.alpha2, gamma=hp.gamma,
        kernel1=hp.kernel1, kernel2=hp.kernel2,
        support1=np.array(dataset.view1), support2=np.array(dataset.view2),
        hyperparams=hp, zeta1=state.zeta1, zeta2=state.zeta2,
    )
    return model, trace


def decision_function(model: TrainedModel, x1, x2):
    """f = gamma * sum_i a1_i k1(x1_i, x1) + sum_i a2_i k2(x2_i, x2).

    Accepts single vectors (returns a float) or row-stacked matrices.
    """
    single = np.ndim(x1) == 1 and np.ndim(x2) == 1
    X1 = np.atleast_2d(np.asarray(x1, dtype=float))
    X2 = np.atleast_2d(np.asarray(x2, dtype=float))
    if X1.shape[0] != X2.shape[0]:
        raise ShapeError(f"{X1.shape[0]} view-1 rows but {X2.shape[0]} view-2 rows")
    f = (model.gamma * cross_gram(model.support1, X1, model.kernel1) @ model.alpha1
         + cross_gram(model.support2, X2, model.kernel2) @ model.alpha2)
    return float(f[0]) if single else f


def sign_with_ties(f):
    """sign(f) with sign(0) = +1."""
    out = np.where(np.asarray(f) >= 0, 1, -1)
    return int(out) if np.ndim(f) == 0 else out


def predict(model: TrainedModel, x1, x2):
    return sign_with_ties(decision_function(model, x1, x2))


def _to_json(model: TrainedModel) -> dict:
    return {
        "schema_version": model.schema_version,
        "gamma": model.gamma,
        "kernel1": {"sigma": model.kernel1.sigma},
        "kernel2": {"sigma": model.kernel2.sigma},
        "hyperparams": None if model.hyperparams is None else model.hyperparams.to_dict(),
        "alpha1": model.alpha1.tolist(),
        "alpha2": model.alpha2.tolist(),
        "zeta1": None if model.zeta1 is None else model.zeta1.tolist(),
        "zeta2": None if model.zeta2 is None else model.zeta2.tolist(),
        "support1": model.support1.tolist(),
        "support2": model.support2.tolist(),
        "preprocessing": model.preprocessing,
    }


def save(model: TrainedModel, path) -> None:
    """Write ``model`` as JSON. Floats are written with shortest round-trip
    representation, so :func:`load` restores them bit for bit."""
    text = json.dumps(_to_json(model), indent=1, allow_nan=False)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def _array(doc, key, ndim):
    arr = np.asarray(doc[key], dtype=float)
    if arr.ndim != ndim and not (ndim == 2 and arr.size == 0):
        raise FormatError(f"field {key!r} must be a {ndim}-D array")
    return arr


def load(path) -> TrainedModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a valid model file ({exc})") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise FormatError(f"{path}: missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise UnsupportedVersionError(
            f"{path}: schema version {doc['schema_version']!r} is not supported (expected {SCHEMA_VERSION})")
    try:
        hp = doc.get("hyperparams")
        return TrainedModel(
            alpha1=_array(doc, "alpha1", 1),
            alpha2=_array(doc, "alpha2", 1),
            gamma=float(doc["gamma"]),
            kernel1=KernelConfig(float(doc["kernel1"]["sigma"])),
            kernel2=KernelConfig(float(doc["kernel2"]["sigma"])),
            support1=_array(doc, "support1", 2),
            support2=_array(doc, "support2", 2),
            schema_version=doc["schema_version"],
            hyperparams=None if hp is None else Hyperparams.from_dict(hp),
            zeta1=None if doc.get("zeta1") is None else _array(doc, "zeta1", 1),
            zeta2=None if doc.get("zeta2") is None else _array(doc, "zeta2", 1),
            preprocessing=doc.get("preprocessing") or {},
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: malformed model file ({exc})") from None
