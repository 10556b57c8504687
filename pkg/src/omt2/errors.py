"""Semantic exception types shared across the package."""


class Omt2Error(Exception):
    """Base class for all package errors."""


class DomainError(Omt2Error, ValueError):
    """An argument is outside its mathematical domain."""


class ToleranceNotMet(Omt2Error, ArithmeticError):
    """A numerical routine could not certify the requested tolerance."""


class NoBracket(Omt2Error, ValueError):
    """Root finding was started on an interval that does not bracket a root."""


class MaxIterations(Omt2Error, ArithmeticError):
    """An iterative solver hit its iteration cap before converging."""


class UnsupportedModel(Omt2Error, ValueError):
    """The requested construction is not defined for this alternative model."""


class Unachievable(Omt2Error, ValueError):
    """The requested target cannot be reached within the search bounds."""


class DegenerateVariance(Omt2Error, ValueError):
    """Observed proportions of 0 or 1 leave the test statistic undefined."""


class ConfigError(Omt2Error, ValueError):
    """Invalid, unknown, or missing configuration keys/values."""
