"""Exception hierarchy shared by all pipeline stages.

The CLI maps these onto its exit codes, so each class corresponds to one
failure category rather than one call site.
"""


class VibrometerError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(VibrometerError, ValueError):
    """Malformed or inconsistent input."""


class ResourceLimitError(VibrometerError):
    """Input exceeds a configured size cap (dimension, qubit count)."""


class InvariantViolation(VibrometerError):
    """An internal consistency check failed."""


class HermiticityError(InvariantViolation):
    """An operator expected to be Hermitian has a non-negligible anti-Hermitian part."""
