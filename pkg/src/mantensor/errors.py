"""Exception and warning types shared across the package."""


class MantensorError(Exception):
    """Base class for all package errors."""


class ValidationError(MantensorError, ValueError):
    """Bad input: wrong shapes, dimensions, bases or arguments."""


class BadMagic(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class InvariantViolation(ValidationError):
    pass


class NumericalError(MantensorError, ArithmeticError):
    """A numerical method could not produce a trustworthy result."""


class CutLocusError(NumericalError):
    """A point lies on (or too close to) the cut locus of the base point."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CurvatureTooLarge(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class Diverged(NumericalError):
    pass


class NoStableStep(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class HemisphereViolation(UserWarning):
    pass


class RankClampWarning(UserWarning):
    pass
