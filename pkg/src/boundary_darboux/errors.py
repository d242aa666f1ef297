"""Exception types raised across the package."""

from __future__ import annotations


class DarbouxError(Exception):
    """Base class for every error raised by this package."""


# -- expressions ---------------------------------------------------------------

class ExpressionError(DarbouxError):
    pass


class ExpressionSyntaxError(ExpressionError):
    """Malformed expression text.

    ``offset`` is the 0-based character position of the failure and
    ``expected`` the set of tokens that would have been accepted there.
    """

    def __init__(self, message: str, offset: int, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownIdentifier(ExpressionError):
    def __init__(self, name: str, offset: int, hint: str = ""):
        self.name = name
        self.offset = offset
        msg = f"unknown identifier {name!r} at offset {offset}"
        if hint:
            msg += f": {hint}"
        super().__init__(msg)


class EmptyInput(ExpressionError):
    pass


class DomainError(DarbouxError, ValueError):
    """An operation was applied outside its domain (log of a non-positive
    number, chart evaluated off its rectangle, ...)."""

    def __init__(self, message: str, subexpression: str | None = None):
        self.subexpression = subexpression
        super().__init__(message)


class NonDifferentiable(DomainError):
    pass


# -- numerics ------------------------------------------------------------------

class NumericsError(DarbouxError):
    pass


class MaxSubdivisions(NumericsError):
    def __init__(self, message: str, value=None, error_estimate=None):
        self.value = value
        self.error_estimate = error_estimate
        super().__init__(message)


class NoBracket(NumericsError):
    pass


class TargetOutOfRange(NumericsError):
    pass


class NonMonotoneDetected(UserWarning):
    """Diagnostic only: sampled values of a supposedly monotone function
    went the wrong way."""


class SingularJacobian(NumericsError):
    pass


class NoConvergence(NumericsError):
    pass


class StepLimitExceeded(NumericsError):
    pass


# -- hypotheses of the normal-form theorem --------------------------------------

class HypothesisError(DarbouxError):
    """The pair (f, omega) does not satisfy the hypotheses at the origin.

    ``report`` carries the HypothesisReport computed before failing.
    """

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class NotCritical(HypothesisError):
    pass


class DegenerateCritical(HypothesisError):
    pass


class NotRegular(HypothesisError):
    pass


class NonPositiveDensity(HypothesisError):
    pass


# -- charts ----------------------------------------------------------------------

class OutsideChartDomain(DomainError):
    pass


class RegionOutsideDomain(DomainError):
    pass


class MonotonicityViolation(NumericsError):
    pass


# -- configuration ----------------------------------------------------------------

class ConfigError(DarbouxError):
    """Unreadable or invalid run configuration."""
