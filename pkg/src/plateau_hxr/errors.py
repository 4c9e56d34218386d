"""Exception types shared across the package."""


class PlateauError(Exception):
    """Base class for package errors."""


class ValidationError(PlateauError, ValueError):
    """Input data is malformed or violates a structural requirement."""


class PreconditionError(PlateauError, ValueError):
    """An operation was called outside its domain of validity."""


class DomainError(PlateauError, ValueError):
    """A numeric argument lies outside the admissible range."""


class NumericalFailure(PlateauError, RuntimeError):
    """A numerical routine could not reach the requested accuracy."""


class NonConvergenceError(NumericalFailure):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class MeshTangleError(NumericalFailure):
    """A mesh self-intersection was detected."""

    def __init__(self, message, pairs=None):
        super().__init__(message)
        self.pairs = [] if pairs is None else list(pairs)
