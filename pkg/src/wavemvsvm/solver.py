"""ADMM outer loop with a gradient-descent inner solver for the slacks.

Problem (kernel form, ``Y = diag(y)``)::

    min  gamma/2 a1'K1 a1 + 1/2 a2'K2 a2
         + C1 sum_i L1(z1_i, y_i) + C2 sum_i L2(z2_i, y_i)
         + D ||K1 a1 - K2 a2||^2
    s.t. Y K1 a1 - e + z1 - eta1 = 0,   z1 - eta3 = 0,
         Y K2 a2 - e + z2 - eta2 = 0,   z2 - eta4 = 0,   eta >= 0

Each outer iteration solves for a1, a2 in closed form, runs gradient
descent on (z1, z2), projects the etas on the nonnegative orthant and
takes a dual ascent step.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import DomainError, InputError, NumericalError, ShapeError
from .kernel import GramPair, KernelConfig
from .loss import WaveParams, _grad, _loss, labeled_wave_loss

__all__ = [
    "Hyperparams",
    "SolverState",
    "TraceRecord",
    "ConvergenceTrace",
    "objective",
    "feasible_slacks",
    "feasible_objective",
    "alpha_system",
    "update_alpha1",
    "update_alpha2",
    "zeta_objective",
    "zeta_gradient",
    "gd_zeta",
    "update_eta",
    "update_duals",
    "primal_residuals",
    "admm_solve",
]

GOLDEN = (math.sqrt(5.0) + 1.0) / 2.0
RIDGE_JITTER = 1e-8
MAX_HALVINGS = 30


@dataclass(frozen=True)
class Hyperparams:
    """Every tunable scalar of the model, the solver and the kernel.

    ``sigma2`` overrides the view-2 kernel width; ``None`` shares ``sigma``.
    """

    gamma: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    d: float = 0.25
    wave1: WaveParams = WaveParams(1.0, 1.0)
    wave2: WaveParams = WaveParams(1.0, 1.0)
    kappa1: float = 1.0
    kappa2: float = 1.0
    kappa3: float = 1.0
    kappa4: float = 1.0
    tau1: float = 1.0
    tau2: float = 1.0
    gd_rate: float = 1e-2
    t1_max: int = 500
    t2_max: int = 50
    tol_obj: float = 1e-6
    tol_res: float = 1e-4
    tol_grad: float = 1e-6
    sigma: float = 1.0
    sigma2: float | None = None

    def __post_init__(self):
        for name in ("c1", "c2", "d"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be nonnegative, got {value!r}")
        positive = ("gamma", "kappa1", "kappa2", "kappa3", "kappa4",
                    "gd_rate", "tol_obj", "tol_res", "tol_grad", "sigma")
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value!r}")
        if self.sigma2 is not None and not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise DomainError(f"sigma2 must be positive, got {self.sigma2!r}")
        for name in ("tau1", "tau2"):
            value = getattr(self, name)
            if not 0.0 < value < GOLDEN:
                raise DomainError(f"{name} must lie in (0, (sqrt(5)+1)/2), got {value!r}")
        for name in ("t1_max", "t2_max"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        for name in ("wave1", "wave2"):
            if not isinstance(getattr(self, name), WaveParams):
                raise DomainError(f"{name} must be a WaveParams instance")

    @property
    def kernel1(self) -> KernelConfig:
        return KernelConfig(self.sigma)

    @property
    def kernel2(self) -> KernelConfig:
        return KernelConfig(self.sigma if self.sigma2 is None else self.sigma2)

    def replace(self, **changes) -> "Hyperparams":
        """Copy with ``changes``; ``lam1``/``a1``/``lam2``/``a2`` edit the wave params."""
        w1 = dict(lam=self.wave1.lam, a=self.wave1.a)
        w2 = dict(lam=self.wave2.lam, a=self.wave2.a)
        for key, target, attr in (("lam1", w1, "lam"), ("a1", w1, "a"), ("lam2", w2, "lam"), ("a2", w2, "a")):
            if key in changes:
                target[attr] = float(changes.pop(key))
        return replace(self, wave1=WaveParams(**w1), wave2=WaveParams(**w2), **changes)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["wave1"] = {"lam": self.wave1.lam, "a": self.wave1.a}
        out["wave2"] = {"lam": self.wave2.lam, "a": self.wave2.a}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Hyperparams":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown hyperparameters: {sorted(unknown)}")
        for key in ("wave1", "wave2"):
            if key in data and not isinstance(data[key], WaveParams):
                data[key] = WaveParams(**data[key])
        return cls(**data)


@dataclass
class SolverState:
    alpha1: np.ndarray
    alpha2: np.ndarray
    zeta1: np.ndarray
    zeta2: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    eta3: np.ndarray
    eta4: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    theta3: np.ndarray
    theta4: np.ndarray
    iter: int = 0
    objective: float = float("nan")

    _VECTORS = ("alpha1", "alpha2", "zeta1", "zeta2", "eta1", "eta2", "eta3", "eta4",
                "theta1", "theta2", "theta3", "theta4")

    def __post_init__(self):
        n = None
        for name in self._VECTORS:
            v = np.array(getattr(self, name), dtype=float)
            if v.ndim != 1:
                raise ShapeError(f"{name} must be a vector")
            if n is None:
                n = v.shape[0]
            elif v.shape[0] != n:
                raise ShapeError(f"{name} has length {v.shape[0]}, expected {n}")
            setattr(self, name, v)

    @property
    def n(self) -> int:
        return self.alpha1.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "SolverState":
        return cls(**{name: np.zeros(n) for name in cls._VECTORS})

    def copy(self) -> "SolverState":
        return SolverState(**{name: getattr(self, name).copy() for name in self._VECTORS},
                           iter=self.iter, objective=self.objective)


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    objective: float
    res1: float
    res2: float
    res3: float
    res4: float


@dataclass
class ConvergenceTrace:
    """Per-iteration objective and constraint residuals (infinity norms)."""

    initial_objective: float = float("nan")
    records: list = field(default_factory=list)
    converged: bool = False

    COLUMNS = ("iter", "objective", "res1", "res2", "res3", "res4")

    def append(self, record: TraceRecord):
        if self.records and record.iter <= self.records[-1].iter:
            raise ValueError("trace iterations must be strictly increasing")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    def to_csv(self, path=None) -> str:
        """CSV with header ``iter,objective,res1,res2,res3,res4``.

        Floats use ``repr`` so the file round-trips exactly.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for r in self.records:
            writer.writerow([r.iter] + [repr(float(getattr(r, c))) for c in self.COLUMNS[1:]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "ConvergenceTrace":
        trace = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != cls.COLUMNS:
                raise ValueError(f"unexpected trace header {header}")
            for row in reader:
                trace.append(TraceRecord(int(row[0]), *map(float, row[1:])))
        return trace


def _check_labels(labels, n):
    y = np.asarray(labels, dtype=float)
    if y.shape != (n,):
        raise ShapeError(f"labels must have shape ({n},), got {y.shape}")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DomainError("labels must be -1 or +1")
    return y


def _check_vectors(n, **vectors):
    for name, v in vectors.items():
        if np.shape(v) != (n,):
            raise ShapeError(f"{name} must have shape ({n},), got {np.shape(v)}")


def objective(alpha1, alpha2, zeta1, zeta2, grams: GramPair, labels, hp: Hyperparams) -> float:
    """Kernel-form training objective at an arbitrary point (no constraints)."""
    n = grams.n
    y = _check_labels(labels, n)
    _check_vectors(n, alpha1=alpha1, alpha2=alpha2, zeta1=zeta1, zeta2=zeta2)
    f1 = grams.k1 @ alpha1
    f2 = grams.k2 @ alpha2
    diff = f1 - f2
    return float(
        0.5 * hp.gamma * alpha1 @ f1
        + 0.5 * alpha2 @ f2
        + hp.c1 * np.sum(labeled_wave_loss(zeta1, y, hp.wave1))
        + hp.c2 * np.sum(labeled_wave_loss(zeta2, y, hp.wave2))
        + hp.d * diff @ diff
    )


def feasible_slacks(alpha1, alpha2, grams: GramPair, labels):
    """Smallest slacks satisfying both margin constraints: max(0, 1 - y f_v)."""
    y = _check_labels(labels, grams.n)
    z1 = np.maximum(0.0, 1.0 - y * (grams.k1 @ alpha1))
    z2 = np.maximum(0.0, 1.0 - y * (grams.k2 @ alpha2))
    return z1, z2


def feasible_objective(alpha1, alpha2, grams: GramPair, labels, hp: Hyperparams) -> float:
    """Objective as a function of the coefficients alone.

    The slacks are set to the smallest feasible values, so this is the
    constrained problem's objective restricted to its feasible set. It is
    what the solver records in its trace.
    """
    z1, z2 = feasible_slacks(alpha1, alpha2, grams, labels)
    return objective(alpha1, alpha2, z1, z2, grams, labels, hp)


def primal_residuals(state: SolverState, grams: GramPair, labels):
    """The four equality-constraint residual vectors."""
    y = np.asarray(labels, dtype=float)
    r1 = y * (grams.k1 @ state.alpha1) - 1.0 + state.zeta1 - state.eta1
    r2 = y * (grams.k2 @ state.alpha2) - 1.0 + state.zeta2 - state.eta2
    r3 = state.zeta1 - state.eta3
    r4 = state.zeta2 - state.eta4
    return r1, r2, r3, r4


def alpha_system(view: int, state: SolverState, grams: GramPair, labels, hp: Hyperparams):
    """Assembled normal equations ``(A, rhs)`` of the coefficient update of ``view``.

    Minimising the augmented Lagrangian over the view-1 coefficients gives

        (gamma K1 + 2D K1'K1 + kappa1 K1'K1) a1
            = 2D K1'K2 a2 - K1 Y theta1 + kappa1 K1 Y (e - z1 + eta1)

    and symmetrically for view 2 with weight 1 and the fresh view-1
    coefficients in the coupling term.
    """
    y = _check_labels(labels, grams.n)
    if view == 1:
        K, Kother, other = grams.k1, grams.k2, state.alpha2
        reg, kappa, theta, zeta, eta = hp.gamma, hp.kappa1, state.theta1, state.zeta1, state.eta1
    elif view == 2:
        K, Kother, other = grams.k2, grams.k1, state.alpha1
        reg, kappa, theta, zeta, eta = 1.0, hp.kappa2, state.theta2, state.zeta2, state.eta2
    else:
        raise ValueError("view must be 1 or 2")
    A = reg * K + (2.0 * hp.d + kappa) * K.T @ K
    rhs = K.T @ _reduced_rhs(Kother, other, y, kappa, theta, zeta, eta, hp.d)
    return A, rhs


def _reduced_rhs(Kother, other, y, kappa, theta, zeta, eta, d):
    # rhs of the full system is K' times this vector
    return 2.0 * d * (Kother @ other) - y * theta + kappa * y * (1.0 - zeta + eta)


class _AlphaFactor:
    """Cholesky factor of ``reg I + (2D + kappa) K``.

    Since K is symmetric, the full system ``K (reg I + (2D+kappa) K) a = K b``
    is solved exactly by ``(reg I + (2D+kappa) K) a = b``; this reduced
    matrix is positive definite with eigenvalues >= reg, so it stays
    well conditioned even when the Gram matrix is numerically singular.
    """

    def __init__(self, K, reg, scale):
        M = reg * np.eye(K.shape[0]) + scale * K
        try:
            self.factor = cho_factor(M)
        except LinAlgError:
            try:
                self.factor = cho_factor(M + RIDGE_JITTER * np.eye(K.shape[0]))
            except LinAlgError as exc:
                w = np.linalg.eigvalsh(M)
                raise NumericalError(
                    "coefficient system is singular after ridge jitter",
                    diagnostics={"min_eig": float(w[0]), "max_eig": float(w[-1])},
                ) from exc

    def solve(self, b):
        return cho_solve(self.factor, b)


def _factors(grams, hp):
    return (
        _AlphaFactor(grams.k1, hp.gamma, 2.0 * hp.d + hp.kappa1),
        _AlphaFactor(grams.k2, 1.0, 2.0 * hp.d + hp.kappa2),
    )


def update_alpha1(state: SolverState, grams: GramPair, labels, hp: Hyperparams, _factor=None) -> np.ndarray:
    y = _check_labels(labels, grams.n)
    factor = _factor or _AlphaFactor(grams.k1, hp.gamma, 2.0 * hp.d + hp.kappa1)
    b = _reduced_rhs(grams.k2, state.alpha2, y, hp.kappa1, state.theta1, state.zeta1, state.eta1, hp.d)
    return factor.solve(b)


def update_alpha2(state: SolverState, grams: GramPair, labels, hp: Hyperparams, _factor=None) -> np.ndarray:
    """View-2 coefficient update; ``state.alpha1`` must already hold the new view-1 values."""
    y = _check_labels(labels, grams.n)
    factor = _factor or _AlphaFactor(grams.k2, 1.0, 2.0 * hp.d + hp.kappa2)
    b = _reduced_rhs(grams.k1, state.alpha1, y, hp.kappa2, state.theta2, state.zeta2, state.eta2, hp.d)
    return factor.solve(b)


def _margins(state, grams, y):
    # Y K a - e for both views; constant during the inner GD loop
    return y * (grams.k1 @ state.alpha1) - 1.0, y * (grams.k2 @ state.alpha2) - 1.0


class _SlackProblem:
    """Slack subproblem with everything that is fixed during GD precomputed."""

    def __init__(self, state, grams, y, hp):
        self.s, self.hp = state, hp
        self.m1, self.m2 = _margins(state, grams, y)
        self.ay1, self.ay2 = hp.wave1.a * y, hp.wave2.a * y

    def value(self, z1, z2):
        s, hp = self.s, self.hp
        r1 = self.m1 + z1 - s.eta1
        r2 = self.m2 + z2 - s.eta2
        r3 = z1 - s.eta3
        r4 = z2 - s.eta4
        return float(
            hp.c1 * np.sum(_loss(z1, hp.wave1.lam, self.ay1))
            + hp.c2 * np.sum(_loss(z2, hp.wave2.lam, self.ay2))
            + s.theta1 @ r1 + s.theta2 @ r2
            + 0.5 * hp.kappa1 * r1 @ r1 + 0.5 * hp.kappa2 * r2 @ r2
            + s.theta3 @ r3 + s.theta4 @ r4
            + 0.5 * hp.kappa3 * r3 @ r3 + 0.5 * hp.kappa4 * r4 @ r4
        )

    def gradient(self, z1, z2):
        s, hp = self.s, self.hp
        g1 = (hp.c1 * _grad(z1, hp.wave1.lam, self.ay1)
              + s.theta1 + s.theta3
              + hp.kappa1 * (self.m1 + z1 - s.eta1)
              + hp.kappa3 * (z1 - s.eta3))
        g2 = (hp.c2 * _grad(z2, hp.wave2.lam, self.ay2)
              + s.theta2 + s.theta4
              + hp.kappa2 * (self.m2 + z2 - s.eta2)
              + hp.kappa4 * (z2 - s.eta4))
        return g1, g2


def zeta_objective(zeta1, zeta2, state: SolverState, grams: GramPair, labels, hp: Hyperparams) -> float:
    """The slack subproblem: augmented Lagrangian terms that depend on the slacks."""
    y = _check_labels(labels, grams.n)
    _check_vectors(grams.n, zeta1=zeta1, zeta2=zeta2)
    return _SlackProblem(state, grams, y, hp).value(np.asarray(zeta1, float), np.asarray(zeta2, float))


def zeta_gradient(zeta1, zeta2, state: SolverState, grams: GramPair, labels, hp: Hyperparams):
    """Gradients of :func:`zeta_objective` with respect to both slack vectors.

    Per view: C L'(z, y) + theta_v + theta_{v+2} + kappa_v (Y K a - e + z - eta_v)
    + kappa_{v+2} (z - eta_{v+2}).
    """
    y = _check_labels(labels, grams.n)
    _check_vectors(grams.n, zeta1=zeta1, zeta2=zeta2)
    return _SlackProblem(state, grams, y, hp).gradient(np.asarray(zeta1, float), np.asarray(zeta2, float))


def gd_zeta(state: SolverState, grams: GramPair, labels, hp: Hyperparams):
    """Gradient descent on the slack subproblem, starting from ``state.zeta*``.

    Each step starts from ``hp.gd_rate`` and halves it (at most 30 times)
    until the subproblem objective does not increase; if no halving
    succeeds the iteration stops at the current point.
    """
    y = _check_labels(labels, grams.n)
    prob = _SlackProblem(state, grams, y, hp)
    z1, z2 = state.zeta1.copy(), state.zeta2.copy()
    value = prob.value(z1, z2)
    if not np.isfinite(value):
        raise NumericalError("slack objective is not finite at the starting point")
    for _ in range(hp.t2_max):
        g1, g2 = prob.gradient(z1, z2)
        if max(np.max(np.abs(g1)), np.max(np.abs(g2))) <= hp.tol_grad:
            break
        step = hp.gd_rate
        for _ in range(MAX_HALVINGS + 1):
            c1, c2 = z1 - step * g1, z2 - step * g2
            trial = prob.value(c1, c2)
            if not np.isfinite(trial):
                raise NumericalError("slack objective became non-finite during descent")
            if trial <= value:
                break
            step *= 0.5
        else:
            break
        z1, z2, value = c1, c2, trial
    return z1, z2


def update_eta(state: SolverState, grams: GramPair, labels, hp: Hyperparams):
    y = _check_labels(labels, grams.n)
    m1, m2 = _margins(state, grams, y)
    eta1 = np.maximum(state.theta1 / hp.kappa1 + m1 + state.zeta1, 0.0)
    eta2 = np.maximum(state.theta2 / hp.kappa2 + m2 + state.zeta2, 0.0)
    eta3 = np.maximum(state.theta3 / hp.kappa3 + state.zeta1, 0.0)
    eta4 = np.maximum(state.theta4 / hp.kappa4 + state.zeta2, 0.0)
    return eta1, eta2, eta3, eta4


def update_duals(state: SolverState, grams: GramPair, labels, hp: Hyperparams):
    # dual step lengths are validated by Hyperparams; re-check for hand-built configs
    for name in ("tau1", "tau2"):
        if not 0.0 < getattr(hp, name) < GOLDEN:
            raise DomainError(f"{name} must lie in (0, (sqrt(5)+1)/2)")
    y = _check_labels(labels, grams.n)
    r1, r2, r3, r4 = primal_residuals(state, grams, y)
    return (
        state.theta1 + hp.tau1 * hp.kappa1 * r1,
        state.theta2 + hp.tau2 * hp.kappa2 * r2,
        state.theta3 + hp.tau1 * hp.kappa3 * r3,
        state.theta4 + hp.tau2 * hp.kappa4 * r4,
    )


def admm_solve(grams: GramPair, labels, hp: Hyperparams, state: SolverState | None = None, callback=None):
    """Run the ADMM iterations from the zero state.

    Stops once the relative change of the recorded objective falls below
    ``tol_obj`` and every constraint residual is below ``tol_res`` in the
    infinity norm, or after ``t1_max`` iterations. The recorded objective is
    :func:`feasible_objective`.

    ``callback(state)``, if given, is called after every iteration.

    Returns ``(state, trace)``; raises :class:`NumericalError` with the
    trace attached when the objective blows up.
    """
    n = grams.n
    y = _check_labels(labels, n)
    state = SolverState.zeros(n) if state is None else state.copy()
    f1, f2 = _factors(grams, hp)

    trace = ConvergenceTrace()
    initial = feasible_objective(state.alpha1, state.alpha2, grams, y, hp)
    trace.initial_objective = initial
    state.objective = initial
    limit = 1e6 * abs(initial) + 1e6
    previous = initial

    for t in range(1, hp.t1_max + 1):
        state.alpha1 = update_alpha1(state, grams, y, hp, f1)
        state.alpha2 = update_alpha2(state, grams, y, hp, f2)
        state.zeta1, state.zeta2 = gd_zeta(state, grams, y, hp)
        state.eta1, state.eta2, state.eta3, state.eta4 = update_eta(state, grams, y, hp)
        state.theta1, state.theta2, state.theta3, state.theta4 = update_duals(state, grams, y, hp)
        state.iter = t

        value = feasible_objective(state.alpha1, state.alpha2, grams, y, hp)
        res = [float(np.max(np.abs(r))) for r in primal_residuals(state, grams, y)]
        state.objective = value
        trace.append(TraceRecord(t, value, *res))
        if callback is not None:
            callback(state)
        if not np.isfinite(value) or value > limit:
            raise NumericalError(f"ADMM diverged at iteration {t} (objective {value!r})", trace=trace)

        rel = abs(value - previous) / max(abs(previous), 1e-12)
        previous = value
        if rel < hp.tol_obj and max(res) < hp.tol_res:
            trace.converged = True
            break
    return state, trace
