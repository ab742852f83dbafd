"""Exception types shared across the package."""


class FueterKitError(Exception):
    pass


class NotInImage(FueterKitError, ValueError):
    """A complex matrix is not the image of a quaternionic matrix under tau."""

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


class SingularLocus(FueterKitError, ArithmeticError):
    """The point lies on (or too close to) the singular hyperplane a + bq = 0."""

    def __init__(self, distance, threshold):
        super().__init__(f"|a+bq| = {distance:.3e} is not above {threshold:.1e}")
        self.distance = distance
        self.threshold = threshold


class SizeMismatch(FueterKitError, ValueError):
    pass


class ShapeMismatch(FueterKitError, ValueError):
    pass


class RankDeficient(FueterKitError, ValueError):
    pass


class LpFailure(FueterKitError, RuntimeError):
    pass


class PreconditionFailed(FueterKitError, ValueError):
    pass


class SignIndefinite(FueterKitError, ValueError):
    pass


class ConfigError(FueterKitError, ValueError):
    pass
