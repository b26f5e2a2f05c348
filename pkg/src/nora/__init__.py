"""Nora: a well-being coaching platform for people in self-quarantine.

Daily agent-initiative sessions screen mood and health, score affect per
turn, and recommend activities; a chat service connects users directly and
through anonymous topic threads. Everything is exposed over an HTTP +
WebSocket gateway driven by the ``noractl`` CLI.
"""

from .config import PlatformConfig
from .errors import (
    AuthenticationError,
    ConflictError,
    ForbiddenError,
    InvalidStateError,
    NoraError,
    NotFoundError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "PlatformConfig",
    "NoraError",
    "ValidationError",
    "NotFoundError",
    "ForbiddenError",
    "ConflictError",
    "InvalidStateError",
    "AuthenticationError",
    "__version__",
]
