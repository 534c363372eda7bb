"""Exception hierarchy shared by all modules."""


class OuWindError(Exception):
    """Base class for every error raised by this package."""


class ZeroPoint(OuWindError):
    """A path point sits at (or numerically at) the origin."""


class RefinementExhausted(OuWindError):
    """Bridge refinement hit its depth limit before the guard was met."""


class StepTooLarge(OuWindError):
    """Euler step violates the stability guard."""


class UnsupportedKind(OuWindError):
    """Operation not defined for this path kind."""


class QuadratureFailure(OuWindError):
    """Quadrature did not reach the requested tolerance."""


class DomainError(OuWindError, ValueError):
    """Argument outside the domain where the quantity is finite."""


class Censored(OuWindError):
    """Simulation horizon reached before the event of interest."""


class SegmentThroughOrigin(OuWindError):
    """A jump chord passes through the numerical origin."""
