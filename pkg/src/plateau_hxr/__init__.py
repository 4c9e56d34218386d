"""Area minimizing and minimal surfaces in H^2 x R with prescribed asymptotic boundary."""
from .errors import (DomainError, MeshTangleError, NonConvergenceError, NumericalFailure, PlateauError,
                     PreconditionError, ValidationError)

__all__ = ["PlateauError", "ValidationError", "PreconditionError", "DomainError", "NumericalFailure",
           "NonConvergenceError", "MeshTangleError"]
