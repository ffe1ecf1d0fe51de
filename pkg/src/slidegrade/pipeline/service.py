"""Submission pipeline: enqueue, dedup-lock, background workers, progress.

Job lifecycle: QUEUED -> EXTRACTING -> EVALUATING -> PERSISTING ->
COMPLETED, any non-terminal state may drop to FAILED. Status moves only
through compare-and-swap transitions; every transition appends one
progress event and notifies subscribers, so event streams are strictly
ordered and gap-free.

Deduplication keys on (user_id, SHA-256 of the upload): while a holder
job is non-terminal, identical submissions attach to it instead of doing
new work. Locks release at terminal status or after the staleness
timeout, so resubmission after completion evaluates again.

Workers lease jobs: a crashed worker's lease expires and ``requeue_stale``
re-enqueues the job, where any worker resumes it from its recorded stage.
"""

from __future__ import annotations

import hashlib
import logging
import queue
import threading
import time
from typing import Iterator, Optional

from ..config import AppConfig
from ..deck.parser import parse_deck
from ..errors import (
    Forbidden,
    LimitExceeded,
    NotEnrolled,
    NotFound,
    RubricNotFound,
    SlidegradeError,
)
from ..evaluator.evaluate import Evaluator
from ..features.extract import extract_features
from ..rubric import rubric_from_dict
from ..store.base import Storage
from ..store.structured import TERMINAL_STATUSES
from .progress import ProgressHub

log = logging.getLogger(__name__)

JOB_STATUSES = ("QUEUED", "EXTRACTING", "EVALUATING", "PERSISTING", "COMPLETED", "FAILED")
_STAGE_ORDER = {"QUEUED": 0, "EXTRACTING": 1, "EVALUATING": 2, "PERSISTING": 3, "COMPLETED": 4}
_STOP = object()


def new_job_id() -> str:
    import uuid

    return uuid.uuid4().hex


class Pipeline:
    def __init__(self, storage: Storage, evaluator: Evaluator, config: AppConfig | None = None):
        self.storage = storage
        self.evaluator = evaluator
        self.config = config or AppConfig()
        self.hub = ProgressHub()
        self._queue: queue.Queue = queue.Queue()
        self._queued_ids: set[str] = set()
        self._queued_lock = threading.Lock()
        self._workers: list[threading.Thread] = []

    # --- lifecycle -------------------------------------------------------

    def start(self, worker_count: Optional[int] = None) -> None:
        """Start the worker pool and re-enqueue any persisted open jobs."""
        self.requeue_stale()
        count = worker_count if worker_count is not None else self.config.worker_count
        for i in range(count):
            thread = threading.Thread(
                target=self._worker_loop, name=f"slidegrade-worker-{i}", daemon=True
            )
            thread.start()
            self._workers.append(thread)

    def stop(self) -> None:
        for _ in self._workers:
            self._queue.put(_STOP)
        for thread in self._workers:
            thread.join(timeout=30)
        self._workers = []

    def requeue_stale(self, now: float | None = None) -> int:
        """Re-enqueue QUEUED jobs and non-terminal jobs with expired leases."""
        now = now or time.time()
        requeued = 0
        for job in self.storage.structured.open_jobs():
            if job["status"] == "QUEUED":
                requeued += self._enqueue(job["job_id"])
            else:
                lease = job["lease_expires_at"]
                if lease is None or lease <= now:
                    requeued += self._enqueue(job["job_id"])
        return requeued

    def _enqueue(self, job_id: str) -> int:
        with self._queued_lock:
            if job_id in self._queued_ids:
                return 0
            self._queued_ids.add(job_id)
        self._queue.put(job_id)
        return 1

    def _worker_loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is _STOP:
                return
            with self._queued_lock:
                self._queued_ids.discard(item)
            try:
                self.worker_step(item)
            except Exception:
                # workers must never die; the job itself is marked FAILED inside
                log.exception("worker step crashed for job %s", item)

    # --- submission ------------------------------------------------------

    def submit(self, user_id: str, course_id: str, rubric_id: str, data: bytes) -> tuple[str, bool]:
        """Returns (job_id, attached). attached=True means an active job for
        the same (user, content hash) absorbed this submission."""
        if len(data) > self.config.max_upload_bytes:
            raise LimitExceeded("max_upload_bytes")
        if not self.storage.structured.is_enrolled(course_id, user_id):
            raise NotEnrolled(f"user {user_id!r} is not enrolled in course {course_id!r}")
        rubric = self.storage.structured.get_rubric(rubric_id)
        if rubric is None or rubric["course_id"] != course_id:
            raise RubricNotFound(f"rubric {rubric_id!r} not found in course {course_id!r}")

        source_hash = hashlib.sha256(data).hexdigest()
        self.storage.blobs.put(data)
        job_id, attached = self.storage.structured.submit_job(
            {
                "job_id": new_job_id(),
                "user_id": user_id,
                "course_id": course_id,
                "rubric_id": rubric_id,
                "rubric_snapshot_id": rubric["current_snapshot_id"],
                "source_hash": source_hash,
            },
            lock_staleness_s=self.config.lease_timeout_s,
        )
        self.storage.record_event(user_id, "upload", job_id=job_id, course_id=course_id)
        if not attached:
            self._enqueue(job_id)
        return job_id, attached

    # --- processing ------------------------------------------------------

    def worker_step(self, job_id: str) -> Optional[dict]:
        """Drive one job from its current state to a terminal state."""
        if not self._claim(job_id):
            return self.storage.structured.get_job(job_id)
        try:
            job = self.storage.structured.get_job(job_id)
            blob = self.storage.blobs.get(job["source_hash"])

            deck = parse_deck(blob, self.config)
            features = extract_features(deck, self.config)

            self._advance(job_id, "EVALUATING")
            snapshot = self.storage.structured.get_snapshot(job["rubric_snapshot_id"])
            if snapshot is None:
                raise RubricNotFound(f"rubric snapshot {job['rubric_snapshot_id']!r} missing")
            rubric = rubric_from_dict(snapshot["doc"])
            result = self.evaluator.evaluate(features, rubric)

            self._advance(job_id, "PERSISTING")
            self.storage.store_features(job_id, features.to_canonical_json())
            self.storage.store_evaluation(job_id, result.to_dict())
            meta = result.provider_meta
            self.storage.append_cost(
                {
                    "job_id": job_id,
                    "model_name": meta.model_name,
                    "input_tokens": meta.input_tokens,
                    "output_tokens": meta.output_tokens,
                    "cost_usd": meta.cost_usd,
                }
            )
            self._advance(job_id, "COMPLETED")
        except SlidegradeError as exc:
            self._advance(job_id, "FAILED", error=(exc.code, exc.message))
        except Exception as exc:
            self._advance(job_id, "FAILED", error=("internal", repr(exc)))
        return self.storage.structured.get_job(job_id)

    def _claim(self, job_id: str) -> bool:
        """Exclusive claim: QUEUED jobs transition to EXTRACTING; stalled
        jobs (expired lease) are re-leased at their recorded stage."""
        now = time.time()
        job = self.storage.structured.get_job(job_id)
        if job is None or job["status"] in TERMINAL_STATUSES:
            return False
        lease = now + self.config.lease_timeout_s
        if job["status"] == "QUEUED":
            event = self.storage.structured.transition_job(
                job_id, job["version"], "EXTRACTING", now=now, lease_expires_at=lease
            )
            if event is None:
                return False
            self.hub.publish(job_id, event)
            return True
        if job["lease_expires_at"] is not None and job["lease_expires_at"] > now:
            return False
        taken = self.storage.structured.transition_job(
            job_id, job["version"], job["status"],
            now=now, lease_expires_at=lease, record_event=False,
        )
        return taken is not None

    def _advance(self, job_id: str, to_status: str, error: Optional[tuple[str, str]] = None) -> bool:
        """CAS-advance with retry; no-op when the job already passed the stage."""
        while True:
            job = self.storage.structured.get_job(job_id)
            if job is None or job["status"] in TERMINAL_STATUSES:
                return False
            if to_status != "FAILED" and _STAGE_ORDER[job["status"]] >= _STAGE_ORDER[to_status]:
                return True
            terminal = to_status in TERMINAL_STATUSES
            lease = None if terminal else time.time() + self.config.lease_timeout_s
            event = self.storage.structured.transition_job(
                job_id, job["version"], to_status, error=error, lease_expires_at=lease
            )
            if event is not None:
                self.hub.publish(job_id, event)
                return True

    # --- progress subscription --------------------------------------------

    def subscribe_progress(
        self,
        job_id: str,
        requester_user_id: Optional[str] = None,
        requester_roles: Optional[set[str]] = None,
        poll_interval_s: float = 1.0,
    ) -> Iterator[dict]:
        """All past events immediately, then live ones until terminal status.

        When a requester is given, only the job owner, a teacher of the
        job's course, or an admin may subscribe.
        """
        job = self.storage.structured.get_job(job_id)
        if job is None:
            raise NotFound(f"job {job_id!r} not found")
        if requester_user_id is not None:
            self._check_job_access(job, requester_user_id, requester_roles or set())

        q = self.hub.register(job_id)
        try:
            last_seq = -1
            for event in self.storage.structured.job_events(job_id):
                last_seq = event["seq"]
                yield {"status": event["status"], "timestamp": event["timestamp"], "seq": event["seq"]}
                if event["status"] in TERMINAL_STATUSES:
                    return
            while True:
                try:
                    event = q.get(timeout=poll_interval_s)
                except queue.Empty:
                    # resilience: pick up events the in-memory hub may have
                    # published before registration raced, straight from the DB
                    fresh = [e for e in self.storage.structured.job_events(job_id)
                             if e["seq"] > last_seq]
                    for event in fresh:
                        last_seq = event["seq"]
                        yield {"status": event["status"], "timestamp": event["timestamp"],
                               "seq": event["seq"]}
                        if event["status"] in TERMINAL_STATUSES:
                            return
                    continue
                if event["seq"] <= last_seq:
                    continue
                last_seq = event["seq"]
                yield {"status": event["status"], "timestamp": event["timestamp"], "seq": event["seq"]}
                if event["status"] in TERMINAL_STATUSES:
                    return
        finally:
            self.hub.unregister(job_id, q)

    def _check_job_access(self, job: dict, user_id: str, roles: set[str]) -> None:
        if job["user_id"] == user_id or "admin" in roles:
            return
        if "teacher" in roles and self.storage.structured.is_teacher(job["course_id"], user_id):
            return
        raise Forbidden("not your job")
