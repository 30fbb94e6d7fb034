import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavemvsvm.data import make_synthetic_two_view
from wavemvsvm.errors import DegenerateInputError, InputError, ShapeError, StratificationError
from wavemvsvm.evaluation import (Q_ALPHA, accuracy, auc, bound_value, confusion, default_norm_bound, evaluate,
                                  friedman_from_ranks, friedman_test, generalization_bound, kfold_grid_search,
                                  nemenyi_cd, rank_models, rank_table, roc_curve, stratified_folds)
from wavemvsvm.model import fit
from wavemvsvm.solver import Hyperparams

PUBLISHED_RANKS = [1.55, 3.43, 4.87, 4.70, 5.17, 3.57, 4.72]


def pairwise_auc(scores, truth):
    pos = scores[truth > 0]
    neg = scores[truth < 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (pos.size * neg.size)


# --- metrics -----------------------------------------------------------------------------

def test_accuracy_examples():
    y = np.array([1, 1, -1, -1])
    assert accuracy(y, y) == 1.0
    assert accuracy(-y, y) == 0.0
    assert accuracy(y, [1, -1, -1, -1]) == 0.75
    with pytest.raises(ShapeError):
        accuracy(y, y[:3])


def test_confusion_counts():
    assert confusion([1, 1, -1, -1, 1], [1, -1, -1, 1, 1]) == (2, 1, 1, 1)


def test_roc_perfect_and_constant():
    y = np.array([1, 1, -1, -1, 1])
    assert auc(roc_curve(np.array([3.0, 2, -1, -2, 1]), y)) == 1.0
    pts = roc_curve(np.zeros(5), y)
    assert pts == [(0.0, 0.0), (1.0, 1.0)]
    assert auc(pts) == 0.5


def test_roc_single_class_rejected():
    with pytest.raises(InputError):
        roc_curve(np.arange(3.0), np.ones(3))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 50), st.integers(0, 10_000), st.booleans())
def test_auc_matches_pairwise_count(n, seed, discrete):
    rng = np.random.default_rng(seed)
    truth = rng.choice([-1.0, 1.0], size=n)
    truth[0], truth[1] = 1.0, -1.0
    scores = rng.integers(-3, 4, size=n).astype(float) if discrete else rng.normal(size=n)
    pts = roc_curve(scores, truth)
    assert abs(auc(pts) - pairwise_auc(scores, truth)) <= 1e-10
    assert abs(auc(roc_curve(-scores, truth)) - (1 - auc(pts))) <= 1e-10
    xs, ys = zip(*pts)
    assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
    assert all(np.diff(xs) >= 0) and all(np.diff(ys) >= 0)


def test_evaluate_report():
    r = evaluate(np.array([0.5, -1.0, 0.0, -0.2]), np.array([1, -1, -1, 1]))
    assert (r.tp, r.tn, r.fp, r.fn) == (1, 1, 1, 1)
    assert r.tp + r.tn + r.fp + r.fn == 4
    assert r.accuracy == 0.5
    assert r.auc == pytest.approx(0.75)


# --- folds and grid search ---------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(10, 80), st.integers(2, 5), st.integers(0, 1000))
def test_stratified_folds_partition_and_balance(n, k, seed):
    y = np.where(np.arange(n) % 3 == 0, -1.0, 1.0)
    folds = stratified_folds(y, k, seed)
    assert sorted(np.concatenate(folds).tolist()) == list(range(n))
    ratio = np.mean(y == 1)
    for f in folds:
        assert abs(np.sum(y[f] == 1) - ratio * f.size) <= 1


def test_stratification_error():
    y = np.array([1.0] * 9 + [-1.0])
    with pytest.raises(StratificationError):
        stratified_folds(y, 5, seed=0)


@pytest.fixture(scope="module")
def separable():
    return make_synthetic_two_view(40, separation=10.0, noise_std=1.0, seed=2)


def test_grid_of_one(separable):
    hp = Hyperparams(c1=0.5)
    best, means = kfold_grid_search(separable, [hp], k=3, seed=0)
    assert best is hp and means.shape == (1,)


def test_grid_ties_prefer_smaller_c1_then_sigma(separable):
    grid = [Hyperparams(c1=2.0, sigma=1.0), Hyperparams(c1=1.0, sigma=2.0), Hyperparams(c1=1.0, sigma=1.5)]
    best, means = kfold_grid_search(separable, grid, k=3, seed=0)
    assert np.all(means == means[0])
    assert best is grid[2]


def test_degenerate_config_loses(separable):
    grid = [Hyperparams(sigma=1e-6), Hyperparams(sigma=2.0)]
    best, means = kfold_grid_search(separable, grid, k=5, seed=1)
    assert best is grid[1]
    assert means[1] > means[0]


def test_parallel_grid_search_matches_serial(separable):
    grid = [Hyperparams(c1=c) for c in (0.5, 1.0, 2.0)]
    _, serial = kfold_grid_search(separable, grid, k=3, seed=3)
    _, parallel = kfold_grid_search(separable, grid, k=3, seed=3, n_jobs=3)
    np.testing.assert_array_equal(serial, parallel)


# --- rank statistics -----------------------------------------------------------------------

def test_identical_models_have_middle_ranks():
    avg, chi2, ff = friedman_test(np.full((4, 6), 0.8))
    np.testing.assert_array_equal(avg, 2.5)
    assert chi2 == 0.0 and ff == 0.0


def test_published_rank_statistics():
    chi2, ff = friedman_from_ranks(PUBLISHED_RANKS, 30)
    assert chi2 == pytest.approx(62.5275, abs=0.01)
    assert ff == pytest.approx(15.4359, abs=0.01)


def test_two_models_one_always_better():
    acc = np.array([[0.9, 0.8, 0.7, 0.95], [0.5, 0.6, 0.6, 0.9]])
    avg, chi2, ff = friedman_test(acc)
    np.testing.assert_array_equal(avg, [1, 2])
    assert chi2 == pytest.approx(4.0)
    assert ff == math.inf


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(2, 8), st.integers(0, 1000))
def test_rank_columns_sum(p, N, seed):
    acc = np.round(np.random.default_rng(seed).random((p, N)), 1)
    ranks = rank_models(acc)
    np.testing.assert_allclose(ranks.sum(axis=0), p * (p + 1) / 2)
    assert np.all((ranks >= 1) & (ranks <= p))


def test_inconsistent_ranks_rejected():
    with pytest.raises(DegenerateInputError):
        friedman_from_ranks([1.0, 1.0, 7.0], 10)


@pytest.mark.parametrize("N, expected", [(30, 1.645), (45, 1.343)])
def test_published_critical_differences(N, expected):
    assert nemenyi_cd(7, N, 2.949) == pytest.approx(expected, abs=1e-3)
    assert nemenyi_cd(7, N, Q_ALPHA[0.05][7]) == pytest.approx(expected, abs=1e-3)


def test_zero_q_gives_zero_cd():
    assert nemenyi_cd(5, 10, 0.0) == 0.0


def test_rank_table():
    acc = np.random.default_rng(0).random((3, 5))
    t = rank_table(acc, names=["a", "b", "c"])
    assert t.cd == pytest.approx(nemenyi_cd(3, 5, 2.343))
    with pytest.raises(InputError):
        rank_table(np.random.default_rng(0).random((12, 3)))


# --- bound -------------------------------------------------------------------------------

def test_bound_hand_value():
    n = 100
    value = bound_value(np.zeros(n), np.zeros(n), np.ones(n), np.ones(n), 1.0, 0.05, 1.0)
    assert value == pytest.approx(0.6903, abs=1e-3)
    assert value == pytest.approx(3 * math.sqrt(math.log(40) / 200) + 4 * math.sqrt(200) / 200, rel=1e-14)


@pytest.mark.parametrize("delta", [0.3, 1.0, 2.5])
def test_bound_complexity_closed_form(delta):
    n = 37
    base = bound_value(np.zeros(n), np.zeros(n), np.ones(n), np.ones(n), delta, 0.1, 2.0)
    closed = 3 * math.sqrt(math.log(20) / (2 * n)) + 4 * 2.0 * math.sqrt(n * (1 + delta**2)) / (n * (1 + delta))
    assert base == pytest.approx(closed, rel=1e-14)


def test_bound_nonincreasing_in_n():
    values = [bound_value(np.zeros(n), np.zeros(n), np.ones(n), np.ones(n), 1.0, 0.05, 1.0) for n in range(1, 400)]
    assert np.all(np.diff(values) <= 0)


def test_bound_for_trained_model():
    ds = make_synthetic_two_view(20, separation=3.0, noise_std=1.0, seed=0)
    model, _ = fit(ds)
    n_bound = default_norm_bound(model)
    assert n_bound > 0
    value = generalization_bound(model, ds)
    expected = bound_value(model.zeta1, model.zeta2, np.ones(20), np.ones(20), 1.0, 0.05, n_bound)
    assert value == expected


def test_bound_argument_checks():
    with pytest.raises(InputError):
        bound_value(np.zeros(3), np.zeros(3), np.ones(3), np.ones(3), 0.0, 0.05, 1.0)
    with pytest.raises(ShapeError):
        bound_value(np.zeros(3), np.zeros(2), np.ones(3), np.ones(3), 1.0, 0.05, 1.0)
