"""Exception hierarchy. The CLI maps each class to an exit code."""


class AttrikitError(Exception):
    exit_code = 1


class ValidationError(AttrikitError, ValueError):
    """Malformed input, dimension mismatch, or a violated precondition."""

    exit_code = 2


class EmptyMeasureError(ValidationError):
    """A data-driven measure ended up with no support (e.g. empty conditional window)."""


class DomainError(ValidationError):
    """Input outside the domain a closed form is stated for."""


class CapacityError(AttrikitError):
    """A computation would exceed a configured size cap."""

    exit_code = 3


class UndefinedMetricError(AttrikitError, ArithmeticError):
    """Metric has an empty denominator (empty golden set, no flagged features)."""

    exit_code = 4
