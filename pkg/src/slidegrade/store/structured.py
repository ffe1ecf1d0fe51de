"""Structured store: users, roles, courses, enrollments, rubric snapshots,
jobs, dedup locks and sessions, on embedded SQLite.

Access discipline: every statement in this module is a module-level
constant executed with bound parameters only. ``tests`` audit this file's
AST, so no f-strings, concatenation or ``.format`` may ever reach an
``execute`` call. Connections are per-thread (WAL mode); multi-statement
invariants run inside ``BEGIN IMMEDIATE`` transactions so concurrent
writers serialize cleanly.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
import uuid
from contextlib import contextmanager
from typing import Optional

from ..errors import NotFound

TERMINAL_STATUSES = ("COMPLETED", "FAILED")

_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    user_id TEXT PRIMARY KEY,
    email TEXT NOT NULL UNIQUE,
    display_name TEXT NOT NULL,
    password_hash TEXT NOT NULL,
    roles TEXT NOT NULL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS courses (
    course_id TEXT PRIMARY KEY,
    course_code TEXT NOT NULL UNIQUE,
    title TEXT NOT NULL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS course_teachers (
    course_id TEXT NOT NULL,
    user_id TEXT NOT NULL,
    PRIMARY KEY (course_id, user_id)
);
CREATE TABLE IF NOT EXISTS enrollments (
    course_id TEXT NOT NULL,
    user_id TEXT NOT NULL,
    PRIMARY KEY (course_id, user_id)
);
CREATE TABLE IF NOT EXISTS rubrics (
    rubric_id TEXT PRIMARY KEY,
    course_id TEXT NOT NULL,
    title TEXT NOT NULL,
    locale_default TEXT NOT NULL,
    current_snapshot_id TEXT NOT NULL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS rubric_snapshots (
    snapshot_id TEXT PRIMARY KEY,
    rubric_id TEXT NOT NULL,
    created_at REAL NOT NULL,
    doc TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS jobs (
    job_id TEXT PRIMARY KEY,
    user_id TEXT NOT NULL,
    course_id TEXT NOT NULL,
    rubric_id TEXT NOT NULL,
    rubric_snapshot_id TEXT NOT NULL,
    source_hash TEXT NOT NULL,
    status TEXT NOT NULL,
    error_code TEXT,
    error_message TEXT,
    created_at REAL NOT NULL,
    updated_at REAL NOT NULL,
    lease_expires_at REAL,
    version INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS job_events (
    job_id TEXT NOT NULL,
    seq INTEGER NOT NULL,
    status TEXT NOT NULL,
    ts REAL NOT NULL,
    PRIMARY KEY (job_id, seq)
);
CREATE TABLE IF NOT EXISTS dedup_locks (
    user_id TEXT NOT NULL,
    source_hash TEXT NOT NULL,
    holder_job_id TEXT NOT NULL,
    acquired_at REAL NOT NULL,
    PRIMARY KEY (user_id, source_hash)
);
CREATE TABLE IF NOT EXISTS sessions (
    token TEXT PRIMARY KEY,
    user_id TEXT NOT NULL,
    issued_at REAL NOT NULL,
    expires_at REAL NOT NULL,
    last_seen_at REAL NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_jobs_user ON jobs (user_id, created_at);
CREATE INDEX IF NOT EXISTS idx_jobs_course ON jobs (course_id, created_at);
"""

_INSERT_USER = (
    "INSERT INTO users (user_id, email, display_name, password_hash, roles, created_at) "
    "VALUES (?, ?, ?, ?, ?, ?)"
)
_SELECT_USER_BY_EMAIL = "SELECT * FROM users WHERE email = ?"
_SELECT_USER = "SELECT * FROM users WHERE user_id = ?"
_UPDATE_USER_NAME = "UPDATE users SET display_name = ? WHERE user_id = ?"
_COUNT_USERS = "SELECT COUNT(*) AS n FROM users"

_INSERT_COURSE = (
    "INSERT INTO courses (course_id, course_code, title, created_at) VALUES (?, ?, ?, ?)"
)
_SELECT_COURSE = "SELECT * FROM courses WHERE course_id = ?"
_SELECT_COURSE_BY_CODE = "SELECT * FROM courses WHERE course_code = ?"
_UPDATE_COURSE_TITLE = "UPDATE courses SET title = ? WHERE course_id = ?"
_SELECT_COURSES = "SELECT * FROM courses ORDER BY course_code"

_INSERT_TEACHER = "INSERT OR IGNORE INTO course_teachers (course_id, user_id) VALUES (?, ?)"
_SELECT_TEACHER = "SELECT 1 AS yes FROM course_teachers WHERE course_id = ? AND user_id = ?"
_SELECT_TEACHER_COURSES = "SELECT course_id FROM course_teachers WHERE user_id = ?"

_INSERT_ENROLLMENT = "INSERT OR IGNORE INTO enrollments (course_id, user_id) VALUES (?, ?)"
_SELECT_ENROLLMENT = "SELECT 1 AS yes FROM enrollments WHERE course_id = ? AND user_id = ?"
_SELECT_ENROLLED = "SELECT user_id FROM enrollments WHERE course_id = ? ORDER BY user_id"

_INSERT_RUBRIC = (
    "INSERT INTO rubrics (rubric_id, course_id, title, locale_default, current_snapshot_id, "
    "created_at) VALUES (?, ?, ?, ?, ?, ?)"
)
_SELECT_RUBRIC = "SELECT * FROM rubrics WHERE rubric_id = ?"
_SELECT_RUBRICS_FOR_COURSE = "SELECT * FROM rubrics WHERE course_id = ? ORDER BY created_at"
_SELECT_RUBRIC_BY_TITLE = "SELECT * FROM rubrics WHERE course_id = ? AND title = ?"
_UPDATE_RUBRIC_HEAD = (
    "UPDATE rubrics SET title = ?, locale_default = ?, current_snapshot_id = ? WHERE rubric_id = ?"
)
_INSERT_SNAPSHOT = (
    "INSERT INTO rubric_snapshots (snapshot_id, rubric_id, created_at, doc) VALUES (?, ?, ?, ?)"
)
_SELECT_SNAPSHOT = "SELECT * FROM rubric_snapshots WHERE snapshot_id = ?"
_SELECT_SNAPSHOTS_FOR_RUBRIC = (
    "SELECT * FROM rubric_snapshots WHERE rubric_id = ? ORDER BY created_at"
)

_INSERT_JOB = (
    "INSERT INTO jobs (job_id, user_id, course_id, rubric_id, rubric_snapshot_id, source_hash, "
    "status, error_code, error_message, created_at, updated_at, lease_expires_at, version) "
    "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)"
)
_SELECT_JOB = "SELECT * FROM jobs WHERE job_id = ?"
_SELECT_JOBS_FOR_USER = "SELECT * FROM jobs WHERE user_id = ? ORDER BY created_at, job_id"
_SELECT_JOBS_FOR_COURSE = "SELECT * FROM jobs WHERE course_id = ? ORDER BY created_at, job_id"
_SELECT_OPEN_JOBS = (
    "SELECT * FROM jobs WHERE status NOT IN ('COMPLETED', 'FAILED') ORDER BY created_at, job_id"
)
_CAS_UPDATE_JOB = (
    "UPDATE jobs SET status = ?, error_code = ?, error_message = ?, updated_at = ?, "
    "lease_expires_at = ?, version = version + 1 WHERE job_id = ? AND version = ?"
)
_MAX_EVENT_SEQ = "SELECT COALESCE(MAX(seq), -1) AS seq FROM job_events WHERE job_id = ?"
_INSERT_JOB_EVENT = "INSERT INTO job_events (job_id, seq, status, ts) VALUES (?, ?, ?, ?)"
_SELECT_JOB_EVENTS = "SELECT * FROM job_events WHERE job_id = ? ORDER BY seq"

_SELECT_LOCK = "SELECT * FROM dedup_locks WHERE user_id = ? AND source_hash = ?"
_INSERT_LOCK = (
    "INSERT INTO dedup_locks (user_id, source_hash, holder_job_id, acquired_at) "
    "VALUES (?, ?, ?, ?)"
)
_DELETE_LOCK = "DELETE FROM dedup_locks WHERE user_id = ? AND source_hash = ? AND holder_job_id = ?"

_INSERT_SESSION = (
    "INSERT INTO sessions (token, user_id, issued_at, expires_at, last_seen_at) "
    "VALUES (?, ?, ?, ?, ?)"
)
_SELECT_SESSION = "SELECT * FROM sessions WHERE token = ?"
_DELETE_SESSION = "DELETE FROM sessions WHERE token = ?"
_TOUCH_SESSION = "UPDATE sessions SET last_seen_at = ? WHERE token = ?"

_BEGIN_IMMEDIATE = "BEGIN IMMEDIATE"


def _row_to_dict(row: sqlite3.Row) -> dict:
    return {key: row[key] for key in row.keys()}


class SqliteStore:
    """Embedded structured store; safe for concurrent callers."""

    def __init__(self, path: str):
        self.path = path
        self._local = threading.local()
        self._bootstrap()

    def _conn(self) -> sqlite3.Connection:
        conn = getattr(self._local, "conn", None)
        if conn is None:
            conn = sqlite3.connect(self.path, timeout=30.0)
            conn.row_factory = sqlite3.Row
            conn.execute("PRAGMA journal_mode=WAL")
            conn.execute("PRAGMA busy_timeout=30000")
            conn.execute("PRAGMA synchronous=NORMAL")
            self._local.conn = conn
        return conn

    def _bootstrap(self) -> None:
        self._conn().executescript(_SCHEMA)
        self._conn().commit()

    @contextmanager
    def _tx(self, immediate: bool = False):
        conn = self._conn()
        if getattr(self._local, "in_atomic", False):
            # joined an enclosing atomic() block; it owns commit/rollback
            yield conn
            return
        if immediate:
            conn.execute(_BEGIN_IMMEDIATE)
        try:
            yield conn
            conn.commit()
        except Exception:
            conn.rollback()
            raise

    @contextmanager
    def atomic(self):
        """All store calls inside this block commit or roll back together
        (used by the all-or-nothing sheet importer)."""
        conn = self._conn()
        conn.execute(_BEGIN_IMMEDIATE)
        self._local.in_atomic = True
        try:
            yield conn
            conn.commit()
        except Exception:
            conn.rollback()
            raise
        finally:
            self._local.in_atomic = False

    def close(self) -> None:
        conn = getattr(self._local, "conn", None)
        if conn is not None:
            conn.close()
            self._local.conn = None

    # --- users ---------------------------------------------------------

    def create_user(self, email: str, display_name: str, password_hash: str,
                    roles: set[str], now: float | None = None) -> str:
        user_id = uuid.uuid4().hex
        with self._tx() as conn:
            conn.execute(
                _INSERT_USER,
                (user_id, email, display_name, password_hash,
                 json.dumps(sorted(roles)), now or time.time()),
            )
        return user_id

    def get_user(self, user_id: str) -> Optional[dict]:
        row = self._conn().execute(_SELECT_USER, (user_id,)).fetchone()
        return self._user_dict(row)

    def get_user_by_email(self, email: str) -> Optional[dict]:
        row = self._conn().execute(_SELECT_USER_BY_EMAIL, (email,)).fetchone()
        return self._user_dict(row)

    def update_display_name(self, user_id: str, display_name: str) -> None:
        with self._tx() as conn:
            conn.execute(_UPDATE_USER_NAME, (display_name, user_id))

    def user_count(self) -> int:
        return int(self._conn().execute(_COUNT_USERS).fetchone()["n"])

    @staticmethod
    def _user_dict(row) -> Optional[dict]:
        if row is None:
            return None
        user = _row_to_dict(row)
        user["roles"] = set(json.loads(user["roles"]))
        return user

    # --- courses, teachers, enrollments --------------------------------

    def create_course(self, course_code: str, title: str, now: float | None = None) -> str:
        course_id = uuid.uuid4().hex
        with self._tx() as conn:
            conn.execute(_INSERT_COURSE, (course_id, course_code, title, now or time.time()))
        return course_id

    def get_course(self, course_id: str) -> Optional[dict]:
        row = self._conn().execute(_SELECT_COURSE, (course_id,)).fetchone()
        return _row_to_dict(row) if row else None

    def get_course_by_code(self, course_code: str) -> Optional[dict]:
        row = self._conn().execute(_SELECT_COURSE_BY_CODE, (course_code,)).fetchone()
        return _row_to_dict(row) if row else None

    def update_course_title(self, course_id: str, title: str) -> None:
        with self._tx() as conn:
            conn.execute(_UPDATE_COURSE_TITLE, (title, course_id))

    def list_courses(self) -> list[dict]:
        return [_row_to_dict(r) for r in self._conn().execute(_SELECT_COURSES)]

    def assign_teacher(self, course_id: str, user_id: str) -> None:
        with self._tx() as conn:
            conn.execute(_INSERT_TEACHER, (course_id, user_id))

    def is_teacher(self, course_id: str, user_id: str) -> bool:
        return self._conn().execute(_SELECT_TEACHER, (course_id, user_id)).fetchone() is not None

    def teacher_courses(self, user_id: str) -> list[str]:
        rows = self._conn().execute(_SELECT_TEACHER_COURSES, (user_id,))
        return [r["course_id"] for r in rows]

    def enroll(self, course_id: str, user_id: str) -> None:
        with self._tx() as conn:
            conn.execute(_INSERT_ENROLLMENT, (course_id, user_id))

    def is_enrolled(self, course_id: str, user_id: str) -> bool:
        return self._conn().execute(_SELECT_ENROLLMENT, (course_id, user_id)).fetchone() is not None

    def enrolled_students(self, course_id: str) -> list[str]:
        rows = self._conn().execute(_SELECT_ENROLLED, (course_id,))
        return [r["user_id"] for r in rows]

    # --- rubrics (immutable snapshots) ----------------------------------

    def create_rubric(self, course_id: str, doc: dict, now: float | None = None) -> tuple[str, str]:
        """Insert a rubric head plus its first snapshot; returns (rubric_id, snapshot_id)."""
        now = now or time.time()
        rubric_id = doc.get("rubric_id") or uuid.uuid4().hex
        snapshot_id = uuid.uuid4().hex
        doc = dict(doc, rubric_id=rubric_id, course_id=course_id)
        with self._tx(immediate=True) as conn:
            conn.execute(
                _INSERT_SNAPSHOT, (snapshot_id, rubric_id, now, json.dumps(doc, sort_keys=True))
            )
            conn.execute(
                _INSERT_RUBRIC,
                (rubric_id, course_id, doc.get("title", ""),
                 doc.get("locale_default", "es"), snapshot_id, now),
            )
        return rubric_id, snapshot_id

    def update_rubric(self, rubric_id: str, doc: dict, now: float | None = None) -> str:
        """Any edit creates a new immutable snapshot; returns the new snapshot id."""
        now = now or time.time()
        head = self.get_rubric(rubric_id)
        if head is None:
            raise NotFound(f"rubric {rubric_id!r} not found")
        snapshot_id = uuid.uuid4().hex
        doc = dict(doc, rubric_id=rubric_id, course_id=head["course_id"])
        with self._tx(immediate=True) as conn:
            conn.execute(
                _INSERT_SNAPSHOT, (snapshot_id, rubric_id, now, json.dumps(doc, sort_keys=True))
            )
            conn.execute(
                _UPDATE_RUBRIC_HEAD,
                (doc.get("title", ""), doc.get("locale_default", "es"), snapshot_id, rubric_id),
            )
        return snapshot_id

    def get_rubric(self, rubric_id: str) -> Optional[dict]:
        row = self._conn().execute(_SELECT_RUBRIC, (rubric_id,)).fetchone()
        return _row_to_dict(row) if row else None

    def find_rubric_by_title(self, course_id: str, title: str) -> Optional[dict]:
        row = self._conn().execute(_SELECT_RUBRIC_BY_TITLE, (course_id, title)).fetchone()
        return _row_to_dict(row) if row else None

    def list_rubrics(self, course_id: str) -> list[dict]:
        return [_row_to_dict(r) for r in self._conn().execute(_SELECT_RUBRICS_FOR_COURSE, (course_id,))]

    def get_snapshot(self, snapshot_id: str) -> Optional[dict]:
        row = self._conn().execute(_SELECT_SNAPSHOT, (snapshot_id,)).fetchone()
        if row is None:
            return None
        record = _row_to_dict(row)
        record["doc"] = json.loads(record["doc"])
        return record

    def list_snapshots(self, rubric_id: str) -> list[dict]:
        out = []
        for row in self._conn().execute(_SELECT_SNAPSHOTS_FOR_RUBRIC, (rubric_id,)):
            record = _row_to_dict(row)
            record["doc"] = json.loads(record["doc"])
            out.append(record)
        return out

    # --- jobs, events, dedup locks --------------------------------------

    def submit_job(self, job: dict, lock_staleness_s: float,
                   now: float | None = None) -> tuple[str, bool]:
        """Atomic dedup-checked submission.

        If an active lock exists for (user_id, source_hash) whose holder
        job is still non-terminal and fresh, returns (holder_id, True) and
        writes nothing. Otherwise inserts the QUEUED job, the lock and the
        creation event in one immediate transaction.
        """
        now = now or time.time()
        user_id, source_hash = job["user_id"], job["source_hash"]
        with self._tx(immediate=True) as conn:
            lock = conn.execute(_SELECT_LOCK, (user_id, source_hash)).fetchone()
            if lock is not None:
                holder = conn.execute(_SELECT_JOB, (lock["holder_job_id"],)).fetchone()
                active = (
                    holder is not None
                    and holder["status"] not in TERMINAL_STATUSES
                    and now - lock["acquired_at"] < lock_staleness_s
                )
                if active:
                    return lock["holder_job_id"], True
                conn.execute(_DELETE_LOCK, (user_id, source_hash, lock["holder_job_id"]))
            conn.execute(
                _INSERT_JOB,
                (job["job_id"], user_id, job["course_id"], job["rubric_id"],
                 job["rubric_snapshot_id"], source_hash, "QUEUED", None, None,
                 now, now, None, 0),
            )
            conn.execute(_INSERT_LOCK, (user_id, source_hash, job["job_id"], now))
            conn.execute(_INSERT_JOB_EVENT, (job["job_id"], 0, "QUEUED", now))
        return job["job_id"], False

    def get_job(self, job_id: str) -> Optional[dict]:
        row = self._conn().execute(_SELECT_JOB, (job_id,)).fetchone()
        return _row_to_dict(row) if row else None

    def jobs_for_user(self, user_id: str) -> list[dict]:
        return [_row_to_dict(r) for r in self._conn().execute(_SELECT_JOBS_FOR_USER, (user_id,))]

    def jobs_for_course(self, course_id: str) -> list[dict]:
        return [_row_to_dict(r) for r in self._conn().execute(_SELECT_JOBS_FOR_COURSE, (course_id,))]

    def open_jobs(self) -> list[dict]:
        return [_row_to_dict(r) for r in self._conn().execute(_SELECT_OPEN_JOBS)]

    def transition_job(
        self,
        job_id: str,
        expected_version: int,
        new_status: str,
        *,
        now: float | None = None,
        error: Optional[tuple[str, str]] = None,
        lease_expires_at: Optional[float] = None,
        record_event: bool = True,
    ) -> Optional[dict]:
        """Compare-and-swap status update; returns the appended event or
        None when the version check lost the race. Terminal transitions
        release the dedup lock in the same transaction."""
        now = now or time.time()
        with self._tx(immediate=True) as conn:
            row = conn.execute(_SELECT_JOB, (job_id,)).fetchone()
            if row is None:
                return None
            # timestamps never run backwards per job
            now = max(now, row["updated_at"])
            cursor = conn.execute(
                _CAS_UPDATE_JOB,
                (new_status, error[0] if error else None, error[1] if error else None,
                 now, lease_expires_at, job_id, expected_version),
            )
            if cursor.rowcount != 1:
                return None
            event = None
            if record_event:
                seq = conn.execute(_MAX_EVENT_SEQ, (job_id,)).fetchone()["seq"] + 1
                conn.execute(_INSERT_JOB_EVENT, (job_id, seq, new_status, now))
                event = {"seq": seq, "status": new_status, "timestamp": now}
            if new_status in TERMINAL_STATUSES:
                conn.execute(_DELETE_LOCK, (row["user_id"], row["source_hash"], job_id))
            return event if record_event else {"seq": None, "status": new_status, "timestamp": now}

    def job_events(self, job_id: str) -> list[dict]:
        return [
            {"seq": r["seq"], "status": r["status"], "timestamp": r["ts"]}
            for r in self._conn().execute(_SELECT_JOB_EVENTS, (job_id,))
        ]

    # --- sessions --------------------------------------------------------

    def create_session(self, token: str, user_id: str, ttl_s: float,
                       now: float | None = None) -> dict:
        now = now or time.time()
        with self._tx() as conn:
            conn.execute(_INSERT_SESSION, (token, user_id, now, now + ttl_s, now))
        return {"token": token, "user_id": user_id, "issued_at": now,
                "expires_at": now + ttl_s, "last_seen_at": now}

    def get_session(self, token: str, now: float | None = None) -> Optional[dict]:
        now = now or time.time()
        row = self._conn().execute(_SELECT_SESSION, (token,)).fetchone()
        if row is None:
            return None
        session = _row_to_dict(row)
        if session["expires_at"] <= now:
            with self._tx() as conn:
                conn.execute(_DELETE_SESSION, (token,))
            return None
        with self._tx() as conn:
            conn.execute(_TOUCH_SESSION, (now, token))
        return session

    def delete_session(self, token: str) -> None:
        with self._tx() as conn:
            conn.execute(_DELETE_SESSION, (token,))
