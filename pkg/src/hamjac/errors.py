"""Exception hierarchy shared by the numerical modules and the CLI."""


class HamjacError(Exception):
    """Base class for all errors raised by :mod:`hamjac`."""


class DomainError(HamjacError, ValueError):
    """An argument lies outside the region where a formula is valid."""


class TurningPointError(DomainError):
    """The momentum radicand is negative; ``boundary`` is where it vanishes."""

    def __init__(self, message, boundary=None):
        super().__init__(message)
        self.boundary = boundary


class SeriesDivergenceError(HamjacError, ArithmeticError):
    """A truncated series failed to converge within ``max_terms``."""


class NonFiniteError(HamjacError, ArithmeticError):
    """A callable returned NaN or infinity; ``where`` is the offending point."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class QuadratureError(HamjacError, ArithmeticError):
    """Adaptive quadrature hit its depth limit before meeting tolerance."""


class GridError(HamjacError, ValueError):
    """A grid is unsorted or too short."""


class GuardViolation(HamjacError):
    """Integration left the guarded region.

    ``trajectory`` holds every sample up to the last state where the guard held.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
