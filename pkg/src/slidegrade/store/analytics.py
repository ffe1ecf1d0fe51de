"""Engagement analytics over the activity log.

Review-session reconstruction rule: a ``history_open`` starts a session;
heartbeats and the close event extend it while they arrive within the
configured timeout of the previous event; the session ends at
``history_close`` or silently after the timeout, and its duration is the
last accepted event's timestamp minus the open timestamp. An open with no
follow-up therefore yields a 0-second session.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .documents import ActivityEvent

Window = Optional[tuple[Optional[float], Optional[float]]]


@dataclass(frozen=True)
class SessionStats:
    logins: int
    uploads: int
    review_sessions: int
    total_review_duration_s: float

    def to_dict(self) -> dict:
        return {
            "logins": self.logins,
            "uploads": self.uploads,
            "review_sessions": self.review_sessions,
            "total_review_duration_s": self.total_review_duration_s,
        }


def _in_window(ts: float, window: Window) -> bool:
    if window is None:
        return True
    lo, hi = window
    if lo is not None and ts < lo:
        return False
    if hi is not None and ts > hi:
        return False
    return True


def reconstruct_sessions(
    events: Sequence[ActivityEvent], timeout_s: float
) -> list[tuple[float, float]]:
    """(open_ts, last_ts) pairs for one user's chronologically sorted events."""
    sessions: list[tuple[float, float]] = []
    open_ts: Optional[float] = None
    last_ts = 0.0
    for event in events:
        if event.kind == "history_open":
            if open_ts is not None:
                sessions.append((open_ts, last_ts))
            open_ts = event.timestamp
            last_ts = event.timestamp
        elif event.kind == "history_heartbeat":
            if open_ts is None:
                continue
            if event.timestamp - last_ts <= timeout_s:
                last_ts = event.timestamp
            else:
                sessions.append((open_ts, last_ts))
                open_ts = None
        elif event.kind == "history_close":
            if open_ts is None:
                continue
            if event.timestamp - last_ts <= timeout_s:
                last_ts = event.timestamp
            sessions.append((open_ts, last_ts))
            open_ts = None
    if open_ts is not None:
        sessions.append((open_ts, last_ts))
    return sessions


def session_stats(
    events: Iterable[ActivityEvent],
    window: Window = None,
    timeout_s: float = 120.0,
) -> SessionStats:
    """Counts and review-session durations for one user's events.

    A session belongs to the window iff its open event does; logins and
    uploads count by their own timestamps.
    """
    ordered = sorted(events, key=lambda e: (e.timestamp, e.event_id))
    logins = sum(1 for e in ordered if e.kind == "login" and _in_window(e.timestamp, window))
    uploads = sum(1 for e in ordered if e.kind == "upload" and _in_window(e.timestamp, window))
    sessions = [
        (open_ts, last_ts)
        for open_ts, last_ts in reconstruct_sessions(ordered, timeout_s)
        if _in_window(open_ts, window)
    ]
    return SessionStats(
        logins=logins,
        uploads=uploads,
        review_sessions=len(sessions),
        total_review_duration_s=float(sum(last - first for first, last in sessions)),
    )


def mean_stats(per_student: Sequence[SessionStats]) -> dict:
    """Arithmetic mean over students, inactive students included as zeros."""
    n = len(per_student)
    if n == 0:
        return {"logins": 0.0, "uploads": 0.0, "review_sessions": 0.0,
                "total_review_duration_s": 0.0}
    return {
        "logins": sum(s.logins for s in per_student) / n,
        "uploads": sum(s.uploads for s in per_student) / n,
        "review_sessions": sum(s.review_sessions for s in per_student) / n,
        "total_review_duration_s": sum(s.total_review_duration_s for s in per_student) / n,
    }
