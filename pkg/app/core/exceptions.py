"""
Exception hierarchy for Spillover Forge.

Every error raised on purpose by the library derives from SpilloverForgeError,
so the CLI can map domain failures to exit code 1 in one place.
"""
from typing import Optional


class SpilloverForgeError(Exception):
    """Base class for all domain errors."""
    pass


class InstanceValidationError(SpilloverForgeError, ValueError):
    """Instance fields violate a model invariant (dimension, sign, quality cap)."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class InstanceFormatError(SpilloverForgeError):
    """Instance document could not be parsed."""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class GuardExceededError(SpilloverForgeError):
    """An exhaustive enumeration would exceed its size guard."""
    pass


class MechanismError(SpilloverForgeError, ValueError):
    """Mechanism is unsuitable for the requested operation or input."""
    pass


class NotATreeError(SpilloverForgeError):
    """Spillover structure is not a single rooted tree."""
    pass


class SolverError(SpilloverForgeError):
    """Solver preconditions failed (wrong instance family, bad granularity)."""
    pass


class ExperimentError(SpilloverForgeError, ValueError):
    """Experiment inputs are empty or outputs cannot be written."""
    pass
