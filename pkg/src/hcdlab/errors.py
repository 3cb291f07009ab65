"""Exception hierarchy.

Two families matter to the CLI: ``UsageError`` subclasses map to exit code 2,
``NumericFailure`` subclasses map to exit code 3.
"""

from __future__ import annotations


class HcdError(Exception):
    """Base class for every error raised by the library."""


class UsageError(HcdError):
    """Bad input supplied by the caller."""


class NumericFailure(HcdError):
    """A computation could not reach its contract."""


# convex_trig
class InvalidSpec(UsageError):
    pass


class DegenerateBody(UsageError):
    pass


class NotOnBoundary(UsageError):
    pass


class CornerAngle(NumericFailure):
    """The subdifferential at this angle is an interval of dual angles."""

    def __init__(self, theta: float, psi_lo: float, psi_hi: float):
        super().__init__(
            f"angle {theta!r} is a corner; dual interval [{psi_lo!r}, {psi_hi!r}]"
        )
        self.theta = theta
        self.interval = (psi_lo, psi_hi)


# heisenberg_core
class ZeroSpeed(UsageError):
    pass


class OnVerticalAxis(UsageError):
    pass


class NoConvergence(NumericFailure):
    def __init__(self, message: str, bracket=None, residual=None):
        super().__init__(message)
        self.bracket = bracket
        self.residual = residual


# jacobian_lab
class CornerEncountered(NumericFailure):
    pass


class NonPositiveValue(UsageError):
    pass


# cd_harness
class OutOfDomain(UsageError):
    pass


class EmptyBox(UsageError):
    pass


class ConstructionFailed(NumericFailure):
    pass


class NoFlatPart(UsageError):
    pass


class WitnessInvalid(NumericFailure):
    pass


class NotConcave(UsageError):
    pass
