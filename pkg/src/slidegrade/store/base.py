"""Storage facade bundling the structured, blob, document and event stores.

Mirrors the hybrid design: transactional relational-style data in SQLite,
JSON payloads / activity logs / original slide files on the document and
blob side. The default layout under one data directory:

    structured.db          SQLite store
    blobs/<xx>/<sha256>    content-addressed originals
    docs/<collection>.jsonl  features, evaluations, cost ledger
    events.jsonl           append-only activity log
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path
from typing import Optional

from ..config import AppConfig
from ..errors import CourseNotFound, NotFound, SlidegradeError
from ..evaluator.schema import validate_response
from ..rubric import aggregate, rubric_from_dict
from .analytics import SessionStats, Window, mean_stats, session_stats
from .blobs import FileBlobStore
from .documents import ActivityEvent, FileDocumentStore, FileEventLog, make_event
from .structured import SqliteStore

FEATURES_COLLECTION = "features"
EVALUATIONS_COLLECTION = "evaluations"
COSTS_COLLECTION = "costs"

EXPORT_VERSION = 1


class Storage:
    def __init__(self, structured: SqliteStore, blobs, documents, events,
                 config: AppConfig | None = None):
        self.structured = structured
        self.blobs = blobs
        self.documents = documents
        self.events = events
        self.config = config or AppConfig()

    @classmethod
    def open(cls, data_dir: str | Path, config: AppConfig | None = None) -> "Storage":
        root = Path(data_dir)
        root.mkdir(parents=True, exist_ok=True)
        return cls(
            structured=SqliteStore(str(root / "structured.db")),
            blobs=FileBlobStore(root / "blobs"),
            documents=FileDocumentStore(root / "docs"),
            events=FileEventLog(root / "events.jsonl"),
            config=config,
        )

    def close(self) -> None:
        self.structured.close()

    # --- activity + analytics -------------------------------------------

    def record_event(self, user_id: str, kind: str, timestamp: float | None = None,
                     job_id: str | None = None, course_id: str | None = None) -> ActivityEvent:
        event = make_event(user_id, kind, timestamp, job_id, course_id)
        self.events.append(event)
        return event

    def session_stats(self, user_id: str, window: Window = None) -> SessionStats:
        return session_stats(
            self.events.events_for_user(user_id),
            window=window,
            timeout_s=self.config.review_session_timeout_s,
        )

    def class_comparison(self, course_id: str, user_id: str, window: Window = None) -> dict:
        """Per-user stats next to the class mean over all enrolled students."""
        if self.structured.get_course(course_id) is None:
            raise CourseNotFound(f"course {course_id!r} not found")
        students = self.structured.enrolled_students(course_id)
        per_student = {sid: self.session_stats(sid, window) for sid in students}
        user = per_student.get(user_id) or self.session_stats(user_id, window)
        return {
            "user": user.to_dict(),
            "class_mean": mean_stats(list(per_student.values())),
            "class_size": len(students),
        }

    # --- evaluation payloads ---------------------------------------------

    def store_features(self, job_id: str, features_canonical_json: str) -> None:
        self.documents.put_doc(FEATURES_COLLECTION, job_id, {"canonical": features_canonical_json})

    def get_features(self, job_id: str) -> Optional[str]:
        doc = self.documents.get_doc(FEATURES_COLLECTION, job_id)
        return doc["canonical"] if doc else None

    def store_evaluation(self, job_id: str, evaluation_doc: dict) -> None:
        self.documents.put_doc(EVALUATIONS_COLLECTION, job_id, evaluation_doc)

    def get_evaluation(self, job_id: str) -> Optional[dict]:
        """Stored evaluations re-validate against their rubric snapshot at
        read time, and their summary must equal a fresh recompute from the
        item scores; a corrupt document raises instead of leaking through."""
        doc = self.documents.get_doc(EVALUATIONS_COLLECTION, job_id)
        if doc is None:
            return None
        job = self.structured.get_job(job_id)
        if job is not None:
            snapshot = self.structured.get_snapshot(job["rubric_snapshot_id"])
            if snapshot is not None:
                rubric = rubric_from_dict(snapshot["doc"])
                _, errors = validate_response(json.dumps(doc), rubric)
                if errors:
                    raise SlidegradeError(
                        f"stored evaluation for job {job_id} no longer validates: {errors[:3]}"
                    )
                stored = doc.get("summary")
                if stored is not None:
                    scores = {item["item_id"]: item["score"] for item in doc["items"]}
                    fresh = aggregate(rubric, scores)
                    if (stored.get("overall_score") != fresh.overall_display
                            or stored.get("percentage") != fresh.percentage_display):
                        raise SlidegradeError(
                            f"stored summary for job {job_id} disagrees with recompute"
                        )
        return doc

    def append_cost(self, entry: dict) -> None:
        self.documents.append_ledger(COSTS_COLLECTION, entry)

    def cost_ledger(self) -> list[dict]:
        return self.documents.iter_ledger(COSTS_COLLECTION)

    # --- export -----------------------------------------------------------

    def export_archive(self, target_dir: str | Path) -> dict:
        """Portable archive: JSON lines per table/collection plus raw blobs."""
        target = Path(target_dir)
        target.mkdir(parents=True, exist_ok=True)
        counts: dict[str, int] = {}

        def dump(name: str, rows: list[dict]) -> None:
            with (target / f"{name}.jsonl").open("w", encoding="utf-8") as fh:
                for row in rows:
                    fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False, default=list) + "\n")
            counts[name] = len(rows)

        s = self.structured
        dump("courses", s.list_courses())
        users = []
        enrollments = []
        teachers = []
        for course in s.list_courses():
            for uid in s.enrolled_students(course["course_id"]):
                enrollments.append({"course_id": course["course_id"], "user_id": uid})
        seen_users = set()
        for row in enrollments:
            if row["user_id"] not in seen_users:
                seen_users.add(row["user_id"])
                user = s.get_user(row["user_id"])
                if user:
                    users.append(user)
        dump("enrollments", enrollments)
        dump("users", users)
        dump("teachers", teachers)
        rubrics = []
        snapshots = []
        for course in s.list_courses():
            for rubric in s.list_rubrics(course["course_id"]):
                rubrics.append(rubric)
                snapshots.extend(s.list_snapshots(rubric["rubric_id"]))
        dump("rubrics", rubrics)
        dump("rubric_snapshots", snapshots)
        jobs = []
        job_events = []
        for course in s.list_courses():
            for job in s.jobs_for_course(course["course_id"]):
                jobs.append(job)
                for event in s.job_events(job["job_id"]):
                    job_events.append({"job_id": job["job_id"], **event})
        dump("jobs", jobs)
        dump("job_events", job_events)
        dump("events", [e.to_dict() for e in self.events.all_events()])
        for collection in (FEATURES_COLLECTION, EVALUATIONS_COLLECTION):
            rows = [
                {"key": key, "doc": self.documents.get_doc(collection, key)}
                for key in self.documents.keys(collection)
            ]
            dump(collection, rows)
        dump(COSTS_COLLECTION, self.cost_ledger())

        blob_dir = target / "blobs"
        blob_dir.mkdir(exist_ok=True)
        blob_count = 0
        for ref in self.blobs.refs():
            try:
                data = self.blobs.get(ref)
            except NotFound:
                continue
            (blob_dir / ref).write_bytes(data)
            blob_count += 1
        counts["blobs"] = blob_count

        manifest = {"export_version": EXPORT_VERSION, "counts": counts}
        (target / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
        return manifest


def wipe_data_dir(data_dir: str | Path) -> None:
    """Remove a storage directory tree (test helper)."""
    shutil.rmtree(data_dir, ignore_errors=True)
