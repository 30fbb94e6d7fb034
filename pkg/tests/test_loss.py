import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavemvsvm.errors import DomainError
from wavemvsvm.loss import (WaveParams, conditional_risk, labeled_wave_loss, labeled_wave_loss_grad,
                            risk_minimizer, wave_loss, wave_loss_grad)

LAMS = [0.2, 0.4, 0.6, 0.8, 1.0]
SHAPES = [0.0, 0.5, 1.0, 1.5, 2.0]


def direct_loss(h, lam, a):
    """Textbook formula in extended precision, used as the oracle."""
    import mpmath
    mpmath.mp.dps = 50
    h, lam, a = mpmath.mpf(h), mpmath.mpf(lam), mpmath.mpf(a)
    return float((1 - 1 / (1 + lam * h**2 * mpmath.exp(a * h))) / lam)


def central_difference(f, x, step=1e-5):
    return (f(x + step) - f(x - step)) / (2 * step)


def test_zero_slack_has_zero_loss():
    assert wave_loss(0.0, WaveParams(1, 1)) == 0.0


def test_unit_point_matches_high_precision_value():
    # 1 - 1/(1+e)
    assert wave_loss(1.0, WaveParams(1, 1)) == pytest.approx(0.731059, abs=1e-6)
    assert wave_loss(1.0, WaveParams(1, 1)) == pytest.approx(direct_loss(1, 1, 1), abs=1e-15)


def test_saturates_at_ceiling():
    assert wave_loss(1e6, WaveParams(2, 1)) == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("h", [-7.3, -1.0, -0.2, 0.05, 0.9, 3.0, 12.0])
@pytest.mark.parametrize("lam,a", [(0.2, 0.0), (0.6, 1.5), (1.0, 2.0), (0.4, -1.0)])
def test_log_space_evaluation_matches_direct_formula(h, lam, a):
    assert wave_loss(h, WaveParams(lam, a)) == pytest.approx(direct_loss(h, lam, a), rel=1e-12, abs=1e-300)


def test_vectorised_input():
    h = np.array([-1.0, 0.0, 1.0])
    out = wave_loss(h, WaveParams(1, 1))
    assert out.shape == (3,)
    assert out[1] == 0.0


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_argument_rejected(bad):
    with pytest.raises(DomainError):
        wave_loss(bad)
    with pytest.raises(DomainError):
        wave_loss_grad(np.array([0.0, bad]))


@pytest.mark.parametrize("lam,a", [(0.0, 1.0), (-1.0, 1.0), (1.0, np.nan)])
def test_invalid_params_rejected(lam, a):
    with pytest.raises(DomainError):
        WaveParams(lam, a)


def test_gradient_examples():
    assert wave_loss_grad(0.0, WaveParams(0.3, 1.7)) == 0.0
    assert wave_loss_grad(1.0, WaveParams(1, 0)) == pytest.approx(0.5, abs=1e-9)
    p = WaveParams(0.6, 1.5)
    fd = central_difference(lambda x: wave_loss(x, p), 0.3)
    assert wave_loss_grad(0.3, p) == pytest.approx(fd, rel=1e-6)


def test_gradient_matches_closed_form():
    h, lam, a = 0.7, 0.6, 1.5
    g = math.exp(a * h)
    expected = (2 * h + a * h * h) * g / (1 + lam * h * h * g) ** 2
    assert wave_loss_grad(h, WaveParams(lam, a)) == pytest.approx(expected, rel=1e-13)


def test_gradient_matches_finite_differences_on_grid():
    hs = np.linspace(-10, 10, 201)
    for lam in LAMS:
        for a in SHAPES:
            p = WaveParams(lam, a)
            analytic = wave_loss_grad(hs, p)
            fd = central_difference(lambda x: wave_loss(x, p), hs)
            # absolute floor: the difference quotient itself is only O(step^2) accurate
            np.testing.assert_allclose(analytic, fd, rtol=1e-6, atol=1e-9)


@given(h=st.floats(-1e6, 1e6), lam=st.sampled_from(LAMS), a=st.floats(-3, 3))
def test_bounded_below_ceiling(h, lam, a):
    value = wave_loss(h, WaveParams(lam, a))
    assert 0.0 <= value <= 1.0 / lam
    if abs(h) < 1.0:
        assert value < 1.0 / lam


def test_pointwise_convergence_to_step():
    hs = np.concatenate([np.linspace(-10, -0.1, 1000), np.linspace(0.1, 10, 1000)])
    step = (hs > 0).astype(float)
    assert np.max(np.abs(wave_loss(hs, WaveParams(1, 100)) - step)) < 0.01


def test_asymmetric_for_positive_shape():
    p = WaveParams(1, 1)
    assert wave_loss(1.0, p) != wave_loss(-1.0, p)


def test_continuous_at_origin():
    assert wave_loss(1e-12) < 1e-20
    assert wave_loss(-1e-12) < 1e-20


def test_labeled_identities():
    p = WaveParams(0.6, 1.5)
    assert labeled_wave_loss(0.0, 1, p) == 0.0
    for z in (-2.0, 0.3, 4.0):
        assert labeled_wave_loss(z, 1, p) == wave_loss(z, p)
        assert labeled_wave_loss(z, -1, p) == wave_loss(z, WaveParams(0.6, -1.5))


def test_labeled_gradient_examples():
    assert labeled_wave_loss_grad(0.0, -1, WaveParams(0.5, 2)) == 0.0
    assert labeled_wave_loss_grad(1.0, 1, WaveParams(1, 0)) == pytest.approx(0.5, abs=1e-9)


def test_labeled_rejects_bad_label():
    with pytest.raises(DomainError):
        labeled_wave_loss(1.0, 0)


@settings(max_examples=200)
@given(z=st.floats(-8, 8), y=st.sampled_from([-1, 1]), lam=st.sampled_from(LAMS), a=st.floats(0, 2))
def test_labeled_gradient_matches_finite_difference(z, y, lam, a):
    p = WaveParams(lam, a)
    fd = central_difference(lambda x: labeled_wave_loss(x, y, p), z)
    assert labeled_wave_loss_grad(z, y, p) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_conditional_risk_formula():
    p = WaveParams(1, 1)
    f, prob = 0.4, 0.7
    expected = wave_loss(1 + f, p) * (1 - prob) + wave_loss(1 - f, p) * prob
    assert conditional_risk(f, prob, p) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("prob", [0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9])
def test_risk_minimizer_has_bayes_sign(prob):
    assert np.sign(risk_minimizer(prob, WaveParams(1, 1))) == np.sign(2 * prob - 1)
