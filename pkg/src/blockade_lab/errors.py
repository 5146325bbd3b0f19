"""Exception types shared across the package."""


class BlockadeError(Exception):
    """Base class for all package errors."""


class DomainError(BlockadeError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ConvergenceError(BlockadeError, RuntimeError):
    """A quadrature or iterative scheme failed to reach its tolerance.

    Attributes
    ----------
    estimate : float or None
        Best available error estimate when the scheme gave up.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class TruncationError(BlockadeError, RuntimeError):
    """A truncated basis or series discarded more weight than allowed."""

    def __init__(self, message, leakage=None):
        super().__init__(message)
        self.leakage = leakage


class ResolutionError(TruncationError):
    """Fourier grid too coarse: aliased modes above tolerance."""


class SolverError(BlockadeError, RuntimeError):
    """Linear-algebra failure, e.g. a degenerate steady state."""


class SearchError(BlockadeError, RuntimeError):
    """A minimization over detuning did not converge."""


class SizeError(BlockadeError, ValueError):
    """Requested Hilbert space is too large."""
