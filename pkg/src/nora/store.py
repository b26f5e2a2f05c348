"""Versioned document store with in-memory and file-backed implementations.

Both expose the same contract: put/get/query/compare_and_put over named
collections, per-key atomicity, version numbers that increment on every
write. Bodies are canonicalized through a JSON round-trip on put, so a
caller can never alias stored state and both implementations accept exactly
the same values.

The file-backed store keeps one append-only log per collection
(``<data_dir>/<collection>.log``), framed as a 4-byte big-endian length
followed by a UTF-8 JSON record. Replay on open rebuilds the index; a
truncated tail (interrupted last write) is discarded. When a log holds twice
as many records as live keys it is compacted in place via a temp file and
atomic rename.
"""

from __future__ import annotations

import json
import os
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .errors import ConflictError, ValidationError

DEFAULT_COLLECTIONS = (
    "users", "aliases", "sessions", "summaries", "health",
    "conversations", "topics", "meetings", "reports",
)

_FRAME = struct.Struct(">I")
_COMPACT_MIN_RECORDS = 64


class UnknownCollectionError(ValidationError):
    pass


@dataclass(frozen=True)
class Document:
    collection: str
    key: str
    body: Any
    version: int


def _canonical(body: Any) -> Any:
    try:
        return json.loads(json.dumps(body, ensure_ascii=False))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"document body is not JSON-serializable: {exc}") from exc


class MemoryStore:
    """Dict-backed store; the reference implementation for the contract."""

    def __init__(self, collections: Iterable[str] = DEFAULT_COLLECTIONS):
        self._collections = {name: {} for name in collections}
        self._lock = threading.RLock()

    def _col(self, collection: str) -> dict:
        try:
            return self._collections[collection]
        except KeyError:
            raise UnknownCollectionError(f"unknown collection: {collection}") from None

    def put(self, collection: str, key: str, body: Any) -> int:
        body = _canonical(body)
        with self._lock:
            col = self._col(collection)
            version = col[key][0] + 1 if key in col else 1
            col[key] = (version, body)
            return version

    def get(self, collection: str, key: str) -> Document | None:
        with self._lock:
            col = self._col(collection)
            if key not in col:
                return None
            version, body = col[key]
            return Document(collection, key, _canonical(body), version)

    def compare_and_put(self, collection: str, key: str, expected_version: int, body: Any) -> int:
        body = _canonical(body)
        with self._lock:
            col = self._col(collection)
            current = col[key][0] if key in col else 0
            if current != expected_version:
                raise ConflictError(
                    f"{collection}/{key}: expected version {expected_version}, found {current}"
                )
            col[key] = (current + 1, body)
            return current + 1

    def query(self, collection: str, **field_equals: Any) -> list[Document]:
        """All documents whose body matches every given field exactly."""
        with self._lock:
            col = self._col(collection)
            out = []
            for key in sorted(col):
                version, body = col[key]
                if isinstance(body, dict) and all(body.get(f) == v for f, v in field_equals.items()):
                    out.append(Document(collection, key, _canonical(body), version))
            return out

    def scan(self, collection: str) -> list[Document]:
        with self._lock:
            col = self._col(collection)
            return [
                Document(collection, key, _canonical(body), version)
                for key, (version, body) in sorted(col.items())
            ]

    def close(self) -> None:
        pass


class FileStore:
    """Append-only-log store; same contract as MemoryStore, durable."""

    def __init__(
        self,
        data_dir: str | Path,
        collections: Iterable[str] = DEFAULT_COLLECTIONS,
        fsync: bool = False,
    ):
        self._dir = Path(data_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._fsync = fsync
        self._lock = threading.RLock()
        self._index: dict[str, dict[str, tuple[int, Any]]] = {}
        self._records: dict[str, int] = {}
        self._files: dict[str, Any] = {}
        for name in collections:
            self._open_collection(name)

    def _log_path(self, collection: str) -> Path:
        return self._dir / f"{collection}.log"

    def _open_collection(self, name: str) -> None:
        path = self._log_path(name)
        index: dict[str, tuple[int, Any]] = {}
        records = 0
        good_offset = 0
        if path.exists():
            with open(path, "rb") as fh:
                data = fh.read()
            pos = 0
            while pos + _FRAME.size <= len(data):
                (length,) = _FRAME.unpack_from(data, pos)
                if pos + _FRAME.size + length > len(data):
                    break  # torn tail write
                payload = data[pos + _FRAME.size : pos + _FRAME.size + length]
                try:
                    record = json.loads(payload.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    break
                index[record["key"]] = (record["version"], record["body"])
                records += 1
                pos += _FRAME.size + length
            good_offset = pos
            if good_offset != len(data):
                with open(path, "r+b") as fh:
                    fh.truncate(good_offset)
        self._index[name] = index
        self._records[name] = records
        self._files[name] = open(path, "ab")

    def _col(self, collection: str) -> dict[str, tuple[int, Any]]:
        try:
            return self._index[collection]
        except KeyError:
            raise UnknownCollectionError(f"unknown collection: {collection}") from None

    def _append(self, collection: str, key: str, version: int, body: Any) -> None:
        payload = json.dumps(
            {"key": key, "version": version, "body": body}, ensure_ascii=False
        ).encode("utf-8")
        fh = self._files[collection]
        fh.write(_FRAME.pack(len(payload)) + payload)
        fh.flush()
        if self._fsync:
            os.fsync(fh.fileno())
        self._records[collection] += 1
        live = len(self._index[collection]) + (0 if key in self._index[collection] else 1)
        if self._records[collection] >= _COMPACT_MIN_RECORDS and self._records[collection] >= 2 * live:
            self._index[collection][key] = (version, body)
            self._compact(collection)

    def _compact(self, collection: str) -> None:
        tmp = self._log_path(collection).with_suffix(".log.tmp")
        with open(tmp, "wb") as fh:
            for key, (version, body) in self._index[collection].items():
                payload = json.dumps(
                    {"key": key, "version": version, "body": body}, ensure_ascii=False
                ).encode("utf-8")
                fh.write(_FRAME.pack(len(payload)) + payload)
            fh.flush()
            os.fsync(fh.fileno())
        self._files[collection].close()
        os.replace(tmp, self._log_path(collection))
        self._files[collection] = open(self._log_path(collection), "ab")
        self._records[collection] = len(self._index[collection])

    def put(self, collection: str, key: str, body: Any) -> int:
        body = _canonical(body)
        with self._lock:
            col = self._col(collection)
            version = col[key][0] + 1 if key in col else 1
            self._append(collection, key, version, body)
            col[key] = (version, body)
            return version

    def get(self, collection: str, key: str) -> Document | None:
        with self._lock:
            col = self._col(collection)
            if key not in col:
                return None
            version, body = col[key]
            return Document(collection, key, _canonical(body), version)

    def compare_and_put(self, collection: str, key: str, expected_version: int, body: Any) -> int:
        body = _canonical(body)
        with self._lock:
            col = self._col(collection)
            current = col[key][0] if key in col else 0
            if current != expected_version:
                raise ConflictError(
                    f"{collection}/{key}: expected version {expected_version}, found {current}"
                )
            self._append(collection, key, current + 1, body)
            col[key] = (current + 1, body)
            return current + 1

    def query(self, collection: str, **field_equals: Any) -> list[Document]:
        with self._lock:
            col = self._col(collection)
            out = []
            for key in sorted(col):
                version, body = col[key]
                if isinstance(body, dict) and all(body.get(f) == v for f, v in field_equals.items()):
                    out.append(Document(collection, key, _canonical(body), version))
            return out

    def scan(self, collection: str) -> list[Document]:
        with self._lock:
            col = self._col(collection)
            return [
                Document(collection, key, _canonical(body), version)
                for key, (version, body) in sorted(col.items())
            ]

    def close(self) -> None:
        with self._lock:
            for fh in self._files.values():
                try:
                    fh.flush()
                    os.fsync(fh.fileno())
                finally:
                    fh.close()
            self._files.clear()

    def __enter__(self) -> "FileStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_store(config) -> MemoryStore | FileStore:
    """Store selected by config: file-backed when data_dir is set."""
    if config.data_dir:
        return FileStore(config.data_dir)
    return MemoryStore()
