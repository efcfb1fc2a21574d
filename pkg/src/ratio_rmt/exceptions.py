"""Exception types shared across the package."""


class RatioRmtError(Exception):
    """Base class for all package errors."""


class DomainError(RatioRmtError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(RatioRmtError, RuntimeError):
    """A quadrature failed to reach the requested tolerance.

    Carries the best estimate obtained so far and the error bound attached
    to it, so callers can decide whether the partial result is usable.
    """

    def __init__(self, message, best_estimate, error_bound):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_bound = error_bound


class NonIdentifiableError(RatioRmtError, RuntimeError):
    """The likelihood is flat over the whole search interval."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class LevelFileError(RatioRmtError, ValueError):
    """A level or ratio file violates the documented format.

    ``line_number`` is 1-based and refers to the physical line in the
    input stream, when known.
    """

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
