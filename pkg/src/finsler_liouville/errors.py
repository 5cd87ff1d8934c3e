"""Exception types shared by the package.

All of them derive from ``ValueError`` (or ``ArithmeticError`` for numerical
failures) so callers that only care about "bad input" can catch broadly.
"""


class FinslerError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(FinslerError, ValueError):
    """Non-finite vectors, malformed configuration, wrong shapes."""


class InvalidParameter(FinslerError, ValueError):
    """A scalar parameter lies outside its admissible range."""


class InvalidModel(FinslerError, ValueError):
    """A norm model that is not a C^2, positive, strictly convex gauge."""


class DomainError(FinslerError, ValueError):
    """Evaluation at a point where the quantity is undefined (e.g. DF(0))."""


class GeometryError(FinslerError, ValueError):
    """Singular geometry: origin on a boundary, points too close to 0."""


class AccuracyError(FinslerError, ArithmeticError):
    """Quadrature or search did not reach the requested tolerance."""


class StiffnessError(FinslerError, ArithmeticError):
    """Adaptive integrator step size underflowed."""
