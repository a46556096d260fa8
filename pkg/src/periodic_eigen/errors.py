"""Exception hierarchy shared across the package."""


class PeriodicEigenError(Exception):
    """Base class for all package errors."""


class DimensionError(PeriodicEigenError):
    """Array shape does not match the grid it is paired with."""


class ValidationError(PeriodicEigenError):
    """Coefficient data violates a structural requirement (symmetry,
    essential positivity, full coupling, mutation row sums)."""


class ConvergenceError(PeriodicEigenError):
    """An iteration exhausted its budget; carries the last residuals."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class BracketError(PeriodicEigenError):
    """A root bracket does not straddle the target value."""

    def __init__(self, message, lo=None, hi=None, flo=None, fhi=None):
        super().__init__(message)
        self.lo, self.hi, self.flo, self.fhi = lo, hi, flo, fhi


class StepSizeError(PeriodicEigenError):
    """Time stepping went unstable; retry with more steps per period."""


class RegimeError(PeriodicEigenError):
    """Requested parameters lie outside the range the direct method can
    resolve; an analytic limit formula applies instead."""


class RangeError(PeriodicEigenError):
    """Requested level or parameter lies outside the admissible interval."""


class ConfigError(PeriodicEigenError):
    """Configuration text failed to parse; carries every diagnostic."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class PeriodicityWarning(UserWarning):
    """Time samples expected to close up over one period do not."""
