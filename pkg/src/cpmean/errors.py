"""Exception types shared across the package."""


class CpMeanError(Exception):
    """Base class for all package errors."""


class InvalidInput(CpMeanError):
    """Input data violates a structural precondition (non-finite, not PSD, ...)."""


class ShapeError(CpMeanError):
    """Dimension mismatch between operands."""


class DomainError(CpMeanError):
    """Parameter outside its admissible domain."""


class NonConvergence(CpMeanError):
    """An iterative limit failed its convergence criterion."""


class NotCompletelyPositive(CpMeanError):
    """A candidate Choi matrix fails the positivity test."""


class NumericalError(CpMeanError):
    """A quantity that is positive in exact arithmetic drifted beyond tolerance."""


class ParseError(CpMeanError):
    """A serialized channel document is malformed."""


class UnknownExample(CpMeanError):
    """Requested registry entry does not exist."""
