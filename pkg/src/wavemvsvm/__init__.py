"""Two-view kernel SVM trained with the wave loss (ADMM + gradient descent)."""

__version__ = "0.1.0"

from .data import TwoViewDataset, make_synthetic_two_view, standardize, synthesize_view2_pca, train_test_split
from .errors import (DegenerateInputError, DomainError, FormatError, InputError, NumericalError, ShapeError,
                     UnsupportedVersionError)
from .kernel import GramPair, KernelConfig, cross_gram, gaussian_kernel, gram_matrix
from .loss import WaveParams, labeled_wave_loss, wave_loss
from .model import TrainedModel, decision_function, fit, load, predict, save
from .solver import ConvergenceTrace, Hyperparams, SolverState, admm_solve
