"""Exception hierarchy shared across the package."""

from __future__ import annotations


class NenmfError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(NenmfError, ValueError):
    """Incompatible or degenerate matrix dimensions."""


class ZeroMatrixError(NenmfError, ValueError):
    """An all-zero matrix was given where a nonzero one is required."""


class RankDeficiencyError(NenmfError):
    """QR input is numerically rank deficient.

    ``detected_rank`` counts the R diagonal entries above the deficiency
    threshold, i.e. the numerical rank the factorization found.
    """

    def __init__(self, message: str, detected_rank: int):
        super().__init__(message)
        self.detected_rank = detected_rank


class NumericalFailureError(NenmfError):
    """A solver produced non-finite values.

    ``iteration`` is the inner-loop index at failure; ``outer_iteration`` is
    filled in when the failure surfaces from an alternating outer loop.
    """

    def __init__(self, message: str, iteration: int, outer_iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration
        self.outer_iteration = outer_iteration


class NumericalCollapseError(NumericalFailureError):
    """A randomized iterate overflowed or lost every usable direction."""


class ComparisonValidityError(NenmfError):
    """Benchmark traces cannot be compared (mismatched problem metadata)."""


class ConfigError(NenmfError, ValueError):
    """Invalid run configuration, rejected before any computation starts."""
