"""Exception types shared across the package."""

from __future__ import annotations


class KSAtlasError(Exception):
    """Base class for all package errors."""


class InvalidInputError(KSAtlasError, ValueError):
    """Malformed input: wrong shape, non-finite values, out-of-range parameters."""


class PreconditionError(KSAtlasError, ValueError):
    """An operation was called outside the region where its theory applies."""


class SingularDiagonalError(PreconditionError):
    """The diagonal part D of the Jacobian has an entry too close to zero."""


class NumericalFailure(KSAtlasError, ArithmeticError):
    """An iterative numerical routine did not converge."""

    def __init__(self, message: str, matrix_hash: str | None = None):
        super().__init__(message if matrix_hash is None else f"{message} [matrix {matrix_hash}]")
        self.matrix_hash = matrix_hash
