"""Exception hierarchy shared across the library, CLI, and service."""

from __future__ import annotations


class PollAuditError(Exception):
    """Base class for all library errors."""


class DomainError(PollAuditError, ValueError):
    """A parameter is outside its mathematical domain."""


class ScheduleViolationError(PollAuditError):
    """A round history deviates from a predetermined round schedule."""


class CapacityError(PollAuditError):
    """A search target is unattainable within the configured cap.

    Carries the best plan that was achievable, when one exists.
    """

    def __init__(self, message: str, best_plan=None):
        super().__init__(message)
        self.best_plan = best_plan


class ParseError(PollAuditError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IntegrityError(PollAuditError):
    """A persisted record fails revalidation; names the broken invariant."""


class VersionConflictError(PollAuditError):
    """Optimistic-concurrency version mismatch on a stored session."""
