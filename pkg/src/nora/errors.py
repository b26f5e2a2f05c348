"""Error classes shared across the platform.

Every module raises from this hierarchy; the gateway maps each class to
exactly one HTTP status, so subclassing here is what routes an error.
"""

from __future__ import annotations


class NoraError(Exception):
    """Base class for all platform errors."""


class ValidationError(NoraError):
    """Bad input: violated invariant, malformed payload, unknown value."""


class RulesetParseError(ValidationError):
    """Malformed ruleset document; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class IncompatibleDistributions(ValidationError):
    """Two emotion distributions with different class sets cannot be fused."""


class NotFoundError(NoraError):
    """A referenced entity (user, alias, message, document) does not exist."""


class ForbiddenError(NoraError):
    """The caller exists but is not allowed to touch this resource."""


class ConflictError(NoraError):
    """State clash: stale version, already-open session, duplicate key."""


class InvalidStateError(ConflictError):
    """Operation legal in some phase, but not the current one."""


class AuthenticationError(NoraError):
    """Missing, expired, or unknown credential."""
