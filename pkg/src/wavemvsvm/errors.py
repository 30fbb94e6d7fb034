"""Exception types shared across the package."""


class WaveMvSVMError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(WaveMvSVMError, ValueError):
    """An argument lies outside the domain of a function (e.g. non-finite)."""


class ShapeError(WaveMvSVMError, ValueError):
    """Array dimensions are inconsistent."""


class InputError(WaveMvSVMError, ValueError):
    """Arguments are individually valid but cannot be used together."""


class FormatError(WaveMvSVMError, ValueError):
    """A file could not be parsed."""


class UnsupportedVersionError(FormatError):
    """A model file declares a schema version this build cannot read."""


class DegenerateInputError(InputError):
    """The data carry no usable information (zero variance, single class...)."""


class StratificationError(InputError):
    """A cross-validation fold lost one of the classes."""


class NumericalError(WaveMvSVMError, ArithmeticError):
    """A numerical procedure failed (singular system, divergence, NaN).

    ``trace`` carries the convergence history when the failure happened
    inside the solver.
    """

    def __init__(self, message, trace=None, diagnostics=None):
        super().__init__(message)
        self.trace = trace
        self.diagnostics = diagnostics or {}
