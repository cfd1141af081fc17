"""Exception types shared across the package.

The CLI maps these onto exit codes: DomainError -> 2, NumericError -> 3,
NonConvergenceError -> 4.
"""

from __future__ import annotations


class DomainError(ValueError):
    """Input outside the documented domain of an operation."""


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class DegenerateGapError(NumericError):
    """The spectral gap closed (level crossing) somewhere on [0, 1]."""


class ComplexityError(NumericError):
    """Refused to build an approximation with too many pieces."""


class NonConvergenceError(RuntimeError):
    """An iterative search ran out of budget."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BoundViolationWarning(UserWarning):
    """An empirical value exceeded the theoretical bound it was checked against."""
