import numpy as np
import pytest

from wavemvsvm.kernel import GramPair, KernelConfig, gram_matrix
from wavemvsvm.solver import Hyperparams, SolverState


def random_instance(seed, n=6, hp=None):
    """Random Gram pair, labels and a fully random solver state."""
    rng = np.random.default_rng(seed)
    X1 = rng.normal(size=(n, 3))
    X2 = rng.normal(size=(n, 2))
    y = rng.choice([-1.0, 1.0], size=n)
    hp = hp or Hyperparams(gamma=0.7, c1=1.3, c2=0.8, d=0.4, kappa1=1.1, kappa2=0.9, kappa3=1.4, kappa4=0.6,
                           tau1=0.8, tau2=1.2).replace(lam1=0.6, a1=1.5, lam2=0.4, a2=0.5)
    grams = GramPair(gram_matrix(X1, KernelConfig(hp.sigma)), gram_matrix(X2, hp.kernel2))
    state = SolverState(**{name: rng.normal(size=n) for name in SolverState._VECTORS})
    state.eta1, state.eta2, state.eta3, state.eta4 = (np.abs(v) for v in (state.eta1, state.eta2, state.eta3, state.eta4))
    return grams, y, hp, state


@pytest.fixture
def instance():
    return random_instance(0)
