"""Exception types shared across the package.

The CLI maps ValidationError/DomainError/StateError to exit code 2 and
IntegrityError to exit code 3; the HTTP service maps them to 4xx bodies.
"""


class WorcsError(Exception):
    """Base class for all package errors."""


class ValidationError(WorcsError, ValueError):
    """A population spec, config or input file failed validation."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line


class DomainError(WorcsError, ValueError):
    """An argument fell outside an operation's documented domain."""


class StateError(WorcsError, RuntimeError):
    """An operation was applied to a state that cannot accept it."""


class ScheduleError(DomainError):
    """A lambda schedule emitted a value outside the psi family's domain."""


class EnumerationCapError(ValidationError):
    """Exact enumeration was refused because it would exceed the cap."""


class IntegrityError(WorcsError, RuntimeError):
    """An internal invariant was violated (always a bug)."""
