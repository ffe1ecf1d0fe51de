"""Document store and activity-event log (the semi-structured side).

Documents live in per-collection append-only JSON-lines files with an
in-memory latest-version index; ``put_doc`` appends a new version and
never rewrites history. The event log is strictly append-only: the public
contract exposes no update or delete path.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

EVENT_KINDS = (
    "login",
    "upload",
    "history_open",
    "history_heartbeat",
    "history_close",
    "feedback_view",
)


@dataclass(frozen=True)
class ActivityEvent:
    event_id: str
    user_id: str
    kind: str
    timestamp: float
    job_id: Optional[str] = None
    course_id: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "user_id": self.user_id,
            "kind": self.kind,
            "timestamp": self.timestamp,
            "job_id": self.job_id,
            "course_id": self.course_id,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ActivityEvent":
        return cls(
            event_id=doc["event_id"],
            user_id=doc["user_id"],
            kind=doc["kind"],
            timestamp=float(doc["timestamp"]),
            job_id=doc.get("job_id"),
            course_id=doc.get("course_id"),
        )


def make_event(user_id: str, kind: str, timestamp: float | None = None,
               job_id: str | None = None, course_id: str | None = None) -> ActivityEvent:
    if kind not in EVENT_KINDS:
        raise ValueError(f"unknown activity event kind {kind!r}")
    return ActivityEvent(
        event_id=uuid.uuid4().hex,
        user_id=user_id,
        kind=kind,
        timestamp=time.time() if timestamp is None else timestamp,
        job_id=job_id,
        course_id=course_id,
    )


class FileDocumentStore:
    """Append-only JSON-lines per collection; latest version wins on read."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._latest: dict[str, dict[str, dict]] = {}
        self._counts: dict[str, int] = {}
        for path in sorted(self.root.glob("*.jsonl")):
            collection = path.stem
            index: dict[str, dict] = {}
            count = 0
            with path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    entry = json.loads(line)
                    count += 1
                    if entry.get("key") is not None:
                        index[entry["key"]] = entry["doc"]
            self._latest[collection] = index
            self._counts[collection] = count

    def _append(self, collection: str, entry: dict) -> None:
        path = self.root / f"{collection}.jsonl"
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")

    def put_doc(self, collection: str, key: str, doc: dict) -> None:
        with self._lock:
            self._append(collection, {"key": key, "ts": time.time(), "doc": doc})
            self._latest.setdefault(collection, {})[key] = doc
            self._counts[collection] = self._counts.get(collection, 0) + 1

    def get_doc(self, collection: str, key: str) -> Optional[dict]:
        with self._lock:
            doc = self._latest.get(collection, {}).get(key)
            return json.loads(json.dumps(doc)) if doc is not None else None

    def append_ledger(self, collection: str, entry: dict) -> None:
        """Keyless append (cost ledger and friends); safe for concurrent callers."""
        with self._lock:
            self._append(collection, {"key": None, "ts": time.time(), "doc": entry})
            self._counts[collection] = self._counts.get(collection, 0) + 1

    def iter_ledger(self, collection: str) -> list[dict]:
        path = self.root / f"{collection}.jsonl"
        if not path.exists():
            return []
        out = []
        with self._lock, path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line)["doc"])
        return out

    def keys(self, collection: str) -> list[str]:
        with self._lock:
            return sorted(self._latest.get(collection, {}))


class MemoryDocumentStore:
    def __init__(self):
        self._lock = threading.Lock()
        self._latest: dict[str, dict[str, dict]] = {}
        self._ledgers: dict[str, list[dict]] = {}

    def put_doc(self, collection: str, key: str, doc: dict) -> None:
        with self._lock:
            self._latest.setdefault(collection, {})[key] = json.loads(json.dumps(doc))

    def get_doc(self, collection: str, key: str) -> Optional[dict]:
        with self._lock:
            doc = self._latest.get(collection, {}).get(key)
            return json.loads(json.dumps(doc)) if doc is not None else None

    def append_ledger(self, collection: str, entry: dict) -> None:
        with self._lock:
            self._ledgers.setdefault(collection, []).append(json.loads(json.dumps(entry)))

    def iter_ledger(self, collection: str) -> list[dict]:
        with self._lock:
            return [json.loads(json.dumps(e)) for e in self._ledgers.get(collection, [])]

    def keys(self, collection: str) -> list[str]:
        with self._lock:
            return sorted(self._latest.get(collection, {}))


class FileEventLog:
    """Append-only activity log on one JSON-lines file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._events: list[ActivityEvent] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._events.append(ActivityEvent.from_dict(json.loads(line)))

    def append(self, event: ActivityEvent) -> str:
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
            self._events.append(event)
        return event.event_id

    def events_for_user(self, user_id: str) -> list[ActivityEvent]:
        with self._lock:
            return sorted(
                (e for e in self._events if e.user_id == user_id),
                key=lambda e: (e.timestamp, e.event_id),
            )

    def all_events(self) -> list[ActivityEvent]:
        with self._lock:
            return sorted(self._events, key=lambda e: (e.timestamp, e.event_id))


class MemoryEventLog:
    def __init__(self):
        self._lock = threading.Lock()
        self._events: list[ActivityEvent] = []

    def append(self, event: ActivityEvent) -> str:
        with self._lock:
            self._events.append(event)
        return event.event_id

    def events_for_user(self, user_id: str) -> list[ActivityEvent]:
        with self._lock:
            return sorted(
                (e for e in self._events if e.user_id == user_id),
                key=lambda e: (e.timestamp, e.event_id),
            )

    def all_events(self) -> list[ActivityEvent]:
        with self._lock:
            return sorted(self._events, key=lambda e: (e.timestamp, e.event_id))
