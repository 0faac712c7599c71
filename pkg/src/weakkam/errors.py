"""Exception types shared across the solver modules."""


class WeakKamError(Exception):
    """Base class for all solver errors."""


class NoConvergence(WeakKamError):
    """An iterative solve exhausted its budget before reaching tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InvalidRescale(WeakKamError):
    """Rescaling parameters outside the admissible integer range."""


class SizeMismatch(WeakKamError):
    """Two grid functions of different lengths were combined."""


class GridMismatch(WeakKamError):
    """Two evolutions do not share grids and Hamiltonian."""


class InsufficientData(WeakKamError):
    """A trace is too short for the requested statistic."""


class WindowExceeded(WeakKamError):
    """Backtracking asked for steps older than the retained foot-table window."""
