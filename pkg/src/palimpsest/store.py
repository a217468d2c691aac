"""Append-only JSONL persistence.

One directory per session, one file per record kind, one canonical JSON
document per line. Every record carries an arrival index ``n`` that totally
orders a session's history across kinds, so a fresh process can replay a
directory and land in the exact same state. Imported bundles keep their
original bytes line for line, which makes export -> import -> export the
identity on bytes.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .errors import ConfigError, DuplicateError

RECORD_KINDS = (
    "session",
    "key_event",
    "keystroke_log",
    "snapshot",
    "final_essay",
    "feedback",
    "survey_response",
)


@dataclass(frozen=True)
class StoredRecord:
    n: int  # arrival index, unique and increasing within a session
    record_kind: str
    session_id: str
    payload: dict
    stored_at: str  # ISO 8601
    raw: str  # exact line as persisted, without trailing newline


def canonical_json(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _default_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionStore:
    """Thread-safe append-only store rooted at one directory."""

    def __init__(self, root: str | Path,
                 now: Callable[[], str] = _default_now) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._now = now
        self._locks: dict[str, threading.Lock] = {}
        self._next_n: dict[str, int] = {}
        self._registry_lock = threading.Lock()

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def _session_dir(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or session_id.startswith("."):
            raise ConfigError(f"invalid session id {session_id!r}")
        return self.root / session_id

    def sessions(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    def has_session(self, session_id: str) -> bool:
        return self._session_dir(session_id).is_dir()

    def _scan_next_n(self, session_id: str) -> int:
        top = 0
        directory = self._session_dir(session_id)
        if directory.is_dir():
            for path in directory.glob("*.jsonl"):
                for record in self._read_file(path):
                    if record.n >= top:
                        top = record.n + 1
        return top

    def append(self, session_id: str, record_kind: str, payload: dict) -> StoredRecord:
        if record_kind not in RECORD_KINDS:
            raise ConfigError(f"unknown record kind {record_kind!r}")
        with self._lock_for(session_id):
            if session_id not in self._next_n:
                self._next_n[session_id] = self._scan_next_n(session_id)
            n = self._next_n[session_id]
            record_dict = {
                "n": n,
                "record_kind": record_kind,
                "session_id": session_id,
                "stored_at": self._now(),
                "payload": payload,
            }
            raw = canonical_json(record_dict)
            directory = self._session_dir(session_id)
            directory.mkdir(parents=True, exist_ok=True)
            with open(directory / f"{record_kind}.jsonl", "a",
                      encoding="utf-8") as handle:
                handle.write(raw + "\n")
                handle.flush()
            self._next_n[session_id] = n + 1
            return StoredRecord(n=n, record_kind=record_kind,
                                session_id=session_id, payload=payload,
                                stored_at=record_dict["stored_at"], raw=raw)

    def _read_file(self, path: Path) -> Iterable[StoredRecord]:
        for line_no, line in enumerate(
                path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                yield StoredRecord(
                    n=doc["n"], record_kind=doc["record_kind"],
                    session_id=doc["session_id"], payload=doc["payload"],
                    stored_at=doc["stored_at"], raw=line)
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ConfigError(
                    f"corrupt record at {path}:{line_no}: {exc}") from exc

    def records(self, session_id: str,
                record_kind: str | None = None) -> list[StoredRecord]:
        """All records for a session in arrival order, optionally one kind."""
        directory = self._session_dir(session_id)
        if not directory.is_dir():
            raise KeyError(f"unknown session {session_id!r}")
        found: list[StoredRecord] = []
        if record_kind is not None:
            if record_kind not in RECORD_KINDS:
                raise ConfigError(f"unknown record kind {record_kind!r}")
            paths = [directory / f"{record_kind}.jsonl"]
        else:
            paths = sorted(directory.glob("*.jsonl"))
        for path in paths:
            if path.is_file():
                found.extend(self._read_file(path))
        found.sort(key=lambda record: record.n)
        return found

    def latest(self, session_id: str,
               record_kind: str) -> StoredRecord | None:
        found = self.records(session_id, record_kind)
        return found[-1] if found else None

    def export_bundle(self, session_id: str) -> bytes:
        """The session's full history as JSONL bytes, in arrival order,
        preserving the exact stored lines."""
        found = self.records(session_id)
        return ("".join(record.raw + "\n" for record in found)).encode("utf-8")

    def import_bundle(self, data: bytes) -> str:
        """Recreate a session directory from an exported bundle.

        Lines are written back verbatim, so a later export reproduces the
        input bytes exactly. The session must not already exist here.
        """
        lines = data.decode("utf-8").splitlines()
        records: list[StoredRecord] = []
        for line_no, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                records.append(StoredRecord(
                    n=doc["n"], record_kind=doc["record_kind"],
                    session_id=doc["session_id"], payload=doc["payload"],
                    stored_at=doc["stored_at"], raw=line))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ConfigError(
                    f"corrupt bundle line {line_no}: {exc}") from exc
        if not records:
            raise ConfigError("bundle contains no records")
        session_ids = {record.session_id for record in records}
        if len(session_ids) != 1:
            raise ConfigError(
                f"bundle mixes sessions: {sorted(session_ids)}")
        session_id = records[0].session_id
        seen_n = [record.n for record in records]
        if len(set(seen_n)) != len(seen_n):
            raise ConfigError("bundle has duplicate arrival indices")
        for record in records:
            if record.record_kind not in RECORD_KINDS:
                raise ConfigError(
                    f"bundle has unknown record kind {record.record_kind!r}")
        with self._lock_for(session_id):
            directory = self._session_dir(session_id)
            if directory.is_dir():
                raise DuplicateError(
                    f"session {session_id!r} already exists in this store")
            directory.mkdir(parents=True)
            by_kind: dict[str, list[StoredRecord]] = {}
            for record in sorted(records, key=lambda r: r.n):
                by_kind.setdefault(record.record_kind, []).append(record)
            for kind, kind_records in by_kind.items():
                with open(directory / f"{kind}.jsonl", "w",
                          encoding="utf-8") as handle:
                    for record in kind_records:
                        handle.write(record.raw + "\n")
            self._next_n[session_id] = max(seen_n) + 1
        return session_id
