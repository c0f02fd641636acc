"""Exception types shared across the package."""


class FnlsError(Exception):
    """Base class for all package errors."""


class ModelError(FnlsError, ValueError):
    """Parameter combination outside the model's admissible domain."""


class GridError(FnlsError, ValueError):
    """Invalid grid construction or grid mismatch between fields."""


class NonFiniteFieldError(FnlsError, ValueError):
    """An operation received a field with NaN/inf samples."""


class BranchError(FnlsError, ValueError):
    """Operation invoked for the wrong nonlinearity branch."""


class ConvergenceError(FnlsError, RuntimeError):
    """Iterative solver failed to converge.

    Carries the last measured residual so callers can diagnose near-misses.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DiscretizationError(FnlsError, RuntimeError):
    """A quantity violated a bound that only discretization failure explains."""


class ConsistencyError(FnlsError, RuntimeError):
    """Two independent computations of the same quantity disagree."""


class CheckpointError(FnlsError, ValueError):
    """Malformed or incompatible checkpoint file."""


class ConfigError(FnlsError, ValueError):
    """Configuration text failed validation.

    ``problems`` lists every diagnosed issue as ``(line_number, message)``;
    line_number is 0 for file-level problems.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = "; ".join(f"line {ln}: {msg}" if ln else msg for ln, msg in self.problems)
        super().__init__(f"invalid configuration: {lines}")
