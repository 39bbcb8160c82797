"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: validation problems exit with 2,
numerical failures with 3.
"""

from __future__ import annotations


class SCMError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SCMError, ValueError):
    """A parameter violates the documented domain of an operation."""


class DomainError(InvalidArgumentError):
    """A point lies outside the region where a function is defined."""


class SingularParameterError(InvalidArgumentError):
    """Parameters make a formula singular (e.g. rho + eps == 0)."""


class DegenerateConfigurationError(InvalidArgumentError):
    """A bracketing point coincides with a support endpoint."""


class InconsistentInputError(InvalidArgumentError):
    """Inputs cannot have come from any admissible parameter value."""


class NumericalFailureError(SCMError, ArithmeticError):
    """An iterative or factorization routine did not produce a valid result."""


class EstimationFailureError(NumericalFailureError):
    """Precision-matrix estimation failed.

    Attributes
    ----------
    column : int or None
        Zero-based column whose linear program failed, when applicable.
    """

    def __init__(self, message: str, column: int | None = None) -> None:
        super().__init__(message)
        self.column = column
