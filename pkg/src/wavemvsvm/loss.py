"""Wave loss and its label-weighted variant.

The loss is

    L(h) = (1/lam) * (1 - 1 / (1 + lam * h**2 * exp(a*h)))

It is evaluated in log space: with ``t = log(lam) + 2 log|h| + a h`` the
loss equals ``expit(t) / lam``, which never overflows and needs no
clamping of the exponent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DomainError

__all__ = [
    "WaveParams",
    "wave_loss",
    "wave_loss_grad",
    "labeled_wave_loss",
    "labeled_wave_loss_grad",
    "conditional_risk",
    "risk_minimizer",
]


@dataclass(frozen=True)
class WaveParams:
    """Bounding parameter ``lam`` (loss ceiling is ``1/lam``) and shape ``a``."""

    lam: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise DomainError(f"lam must be a positive finite number, got {self.lam!r}")
        if not np.isfinite(self.a):
            raise DomainError(f"a must be finite, got {self.a!r}")


def _check_finite(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def _saturation(h, lam, a):
    # s = lam h^2 e^{ah} / (1 + lam h^2 e^{ah}), computed without overflow
    with np.errstate(divide="ignore"):
        t = np.log(lam) + 2.0 * np.log(np.abs(h)) + a * h
    return expit(t)


def _loss(h, lam, a):
    return _saturation(h, lam, a) / lam


def _grad(h, lam, a):
    # d/dh = (2 + a h) * s * (1 - s) / (lam * h), zero at h = 0
    h, a = np.broadcast_arrays(np.asarray(h, dtype=float), np.asarray(a, dtype=float))
    s = _saturation(h, lam, a)
    num = (2.0 + a * h) * s * (1.0 - s)
    den = lam * h
    return np.divide(num, den, out=np.zeros_like(num), where=den != 0)


def _unwrap(value, like):
    return float(value) if np.ndim(like) == 0 else value


def wave_loss(h, p: WaveParams = WaveParams()):
    """Wave loss of ``h`` (scalar or array). Values lie in ``[0, 1/lam)``."""
    h = _check_finite("h", h)
    return _unwrap(_loss(h, p.lam, p.a), h)


def wave_loss_grad(h, p: WaveParams = WaveParams()):
    """Derivative of :func:`wave_loss` with respect to ``h``.

    Analytically ``(2h + a h^2) e^{ah} / (1 + lam h^2 e^{ah})^2``.
    """
    h = _check_finite("h", h)
    return _unwrap(_grad(h, p.lam, p.a), h)


def _labels(y, like):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DomainError("labels must be -1 or +1")
    return np.broadcast_to(y, np.shape(like)) if np.ndim(like) else y


def labeled_wave_loss(zeta, y, p: WaveParams = WaveParams()):
    """Per-sample loss term of the training objective.

    The label enters the exponent only: ``exp(a * zeta * y)``. Hence
    ``labeled_wave_loss(z, -1, (lam, a)) == wave_loss(z, (lam, -a))``.
    """
    zeta = _check_finite("zeta", zeta)
    y = _labels(y, zeta)
    return _unwrap(_loss(zeta, p.lam, p.a * y), zeta)


def labeled_wave_loss_grad(zeta, y, p: WaveParams = WaveParams()):
    """Derivative of :func:`labeled_wave_loss` with respect to ``zeta``."""
    zeta = _check_finite("zeta", zeta)
    y = _labels(y, zeta)
    return _unwrap(_grad(zeta, p.lam, p.a * y), zeta)


def conditional_risk(f, prob_pos, p: WaveParams = WaveParams()):
    """Expected loss of score ``f`` when P(y=+1 | x) = ``prob_pos``.

    Margin-based: L(1 + f) (1 - prob_pos) + L(1 - f) prob_pos.
    """
    f = _check_finite("f", f)
    return _unwrap(_loss(1.0 + f, p.lam, p.a) * (1.0 - prob_pos) + _loss(1.0 - f, p.lam, p.a) * prob_pos, f)


def risk_minimizer(prob_pos, p: WaveParams = WaveParams(), lo=-5.0, hi=5.0, step=1e-3) -> float:
    """Grid minimiser of :func:`conditional_risk` over ``[lo, hi]``."""
    grid = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    return float(grid[np.argmin(conditional_risk(grid, prob_pos, p))])
