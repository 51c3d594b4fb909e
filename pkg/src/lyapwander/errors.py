"""Exception types shared across the package."""


class LyapwanderError(Exception):
    """Base class for all package errors."""


class BoundViolation(LyapwanderError, ValueError):
    """A parameter constraint is violated.

    ``which`` names the constraint, ``slack`` is the signed margin
    (negative means violated by that amount).
    """

    def __init__(self, which, slack, message=None):
        self.which = which
        self.slack = slack
        super().__init__(message or f"{which} violated (slack {slack:.6g})")


class NotFound(LyapwanderError):
    """No base epoch up to the search ceiling passes the requested checks."""

    def __init__(self, message, failures=None):
        self.failures = failures or []
        super().__init__(message)


class IndexOutOfRange(LyapwanderError, IndexError):
    pass


class StepOverflow(LyapwanderError, OverflowError):
    pass


class OutsideDomain(LyapwanderError, ValueError):
    pass


class BoundaryHit(LyapwanderError):
    """A point lies on a partition curve; its orbit is terminated."""


class CoverageFailure(LyapwanderError):
    pass


class DisjointnessFailure(LyapwanderError):
    def __init__(self, pair, message=None):
        self.pair = pair
        super().__init__(message or f"rectangles {pair[0]} and {pair[1]} overlap")


class WindowTooShort(LyapwanderError, ValueError):
    pass


class NoConvergence(LyapwanderError):
    def __init__(self, iterations, message=None):
        self.iterations = iterations
        super().__init__(message or f"no convergence after {iterations} iterations")
