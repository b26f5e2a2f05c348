"""Local accounts and opaque bearer tokens.

Registration creates a profile document plus a unique alias claim; login
checks a salted PBKDF2 hash and issues a token bound to exactly one user
with an expiry. Tokens live in process memory: they are transient
credentials, not durable state.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
import time
import uuid
from dataclasses import dataclass

from ..errors import AuthenticationError, ConflictError, ValidationError

_NAME = re.compile(r"[a-z][a-z0-9_-]{0,31}\Z")
_PBKDF2_ROUNDS = 50_000


@dataclass(frozen=True)
class AuthToken:
    token: str
    user: str
    expires_at: float


def _hash_password(password: str, salt: bytes) -> str:
    return hashlib.pbkdf2_hmac("sha256", password.encode(), salt, _PBKDF2_ROUNDS).hex()


class TokenAuthority:
    def __init__(self, store, config):
        self.store = store
        self.ttl = config.token_ttl_seconds
        self.default_program = {"name": config.program_name, "length_days": config.program_length}
        self._tokens: dict[str, AuthToken] = {}
        self._lock = threading.Lock()

    def register(self, user: str, alias: str, password: str, language: str = "en") -> AuthToken:
        """Create the account and hand back a first token."""
        if not _NAME.match(user or ""):
            raise ValidationError("user id must be lowercase: [a-z][a-z0-9_-]*")
        if not _NAME.match(alias or ""):
            raise ValidationError("alias must be lowercase: [a-z][a-z0-9_-]*")
        if language not in ("en", "zh"):
            raise ValidationError("language must be en or zh")
        if not password:
            raise ValidationError("password must be non-empty")
        try:
            self.store.compare_and_put("aliases", alias, 0, {"user": user})
        except ConflictError:
            raise ConflictError(f"alias {alias!r} is taken") from None
        salt = os.urandom(16)
        try:
            self.store.compare_and_put("users", user, 0, {
                "user": user,
                "alias": alias,
                "language": language,
                "program": dict(self.default_program),
                "interests": [],
                "contacts": [],
                "activity_preferences": {"per_day": {}, "kinds": []},
                "auth": {"salt": salt.hex(), "hash": _hash_password(password, salt)},
            })
        except ConflictError:
            raise ConflictError(f"user {user!r} already exists") from None
        return self._issue(user)

    def login(self, user: str, password: str) -> AuthToken:
        doc = self.store.get("users", user)
        if doc is None:
            raise AuthenticationError("unknown user or wrong password")
        auth = doc.body.get("auth", {})
        salt = bytes.fromhex(auth.get("salt", ""))
        if not salt or _hash_password(password, salt) != auth.get("hash"):
            raise AuthenticationError("unknown user or wrong password")
        return self._issue(user)

    def _issue(self, user: str) -> AuthToken:
        token = AuthToken(
            token=uuid.uuid4().hex,
            user=user,
            expires_at=time.time() + self.ttl,
        )
        with self._lock:
            self._tokens[token.token] = token
        return token

    def authenticate(self, token: str | None) -> str:
        """Token -> user id, rejecting missing/unknown/expired tokens."""
        if not token:
            raise AuthenticationError("missing token")
        with self._lock:
            record = self._tokens.get(token)
            if record is None:
                raise AuthenticationError("unknown token")
            if record.expires_at < time.time():
                del self._tokens[token]
                raise AuthenticationError("token expired")
            return record.user
