"""Exception hierarchy.

The CLI maps each family onto an exit code, so new errors should subclass
the narrowest matching class rather than :class:`HerglotzError` directly.
"""


class HerglotzError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 5


class StructureError(HerglotzError, ValueError):
    """Shape mismatch, malformed input or a violated type invariant."""

    exit_code = 2


class PreconditionError(StructureError):
    """An operation was called on data that fails its stated precondition."""


class DomainError(HerglotzError, ValueError):
    """A point lies outside the domain of the function being evaluated."""

    exit_code = 3


class ConditioningError(DomainError):
    """The point is inside the domain but too close to its boundary."""


class SpectralConditionError(DomainError):
    """A block of a unitary has an eigenvalue where the Schur complement needs none."""


class DegenerateRealPartError(DomainError):
    """The real part of h(0) is singular, so h cannot be normalized."""


class InconsistencyError(HerglotzError):
    """Data that should satisfy an identity does not, beyond tolerance.

    ``residual`` carries the measured violation.
    """

    exit_code = 4

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = float(residual)


class NoLurkingIsometryError(InconsistencyError):
    """The two column families have different Gram matrices."""


class ModelInconsistentError(InconsistencyError):
    """Model data fails the Gramian identity."""


class InsufficientTruncationError(StructureError):
    """A moment table does not contain a word that was asked for."""

    def __init__(self, word):
        super().__init__(f"insufficient truncation: word {list(word)!r} not in table")
        self.word = tuple(word)
