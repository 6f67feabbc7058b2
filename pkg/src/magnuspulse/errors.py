"""Exception hierarchy used throughout the package."""


class MagnusPulseError(Exception):
    """Base class for all package errors."""


class InvalidParameter(MagnusPulseError, ValueError):
    pass


class NotInSpan(MagnusPulseError):
    """Operator has a component outside the declared algebra."""


class SingularGram(MagnusPulseError):
    pass


class ClosureViolation(MagnusPulseError):
    """Structure constants disagree with direct matrix conjugation."""


class OutOfDomain(MagnusPulseError, ValueError):
    pass


class IntegratorFailure(MagnusPulseError):
    pass


class QuadratureFailure(MagnusPulseError):
    pass


class UnsupportedOrder(MagnusPulseError, ValueError):
    pass


class FitFailure(MagnusPulseError):
    pass


class NoSolution(MagnusPulseError):
    """Constrained controls cannot cancel the error at this order."""


class DivergingCorrection(MagnusPulseError):
    """Correction coefficients grow between consecutive orders.

    ``partial`` holds the result up to the last accepted order, if any.
    """

    def __init__(self, message, order=None, partial=None):
        super().__init__(message)
        self.order = order
        self.partial = partial


class NoRootFound(MagnusPulseError):
    def __init__(self, message, level=None, best_residual=None):
        super().__init__(message)
        self.level = level
        self.best_residual = best_residual


class InvalidDrop(MagnusPulseError, ValueError):
    pass


class TruncationError(MagnusPulseError):
    pass


class InsufficientBandwidth(MagnusPulseError, ValueError):
    pass
