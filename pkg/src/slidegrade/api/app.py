"""HTTP boundary: authentication, RBAC, uploads, progress streaming,
feedback retrieval, rubric and cohort management, analytics, batch import.

All state-changing endpoints are idempotent or dedup-aware (uploads attach
via the content-hash lock, imports upsert on natural keys). Responses
carry both feedback locales; the UI picks the display language.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from ..config import AppConfig
from ..errors import (
    Forbidden,
    LimitExceeded,
    NotFound,
    RubricError,
    SlidegradeError,
)
from ..rubric import Rubric, RubricItem, rubric_to_dict, validate_rubric
from ..store.base import EVALUATIONS_COLLECTION
from ..store.security import hash_password, new_session_token, verify_password
from .imports import SHEET_KINDS, import_sheet
from .middleware import AuditMiddleware, BodyLimitMiddleware, RateLimitMiddleware
from .multipart import MultipartError, parse_multipart
from .rbac import allowed
from .services import Services, create_services

PPTX_MIME = "application/vnd.openxmlformats-officedocument.presentationml.presentation"
ZIP_MAGIC = b"PK\x03\x04"

TELEMETRY_KINDS = ("history_open", "history_heartbeat", "history_close", "feedback_view")


@dataclass(frozen=True)
class Identity:
    user_id: Optional[str]
    roles: frozenset
    email: str = ""
    display_name: str = ""

    @property
    def is_anonymous(self) -> bool:
        return self.user_id is None


ANONYMOUS = Identity(user_id=None, roles=frozenset())


class LoginBody(BaseModel):
    email: str
    password: str


class EventBody(BaseModel):
    kind: str
    job_id: Optional[str] = None
    course_id: Optional[str] = None


class RubricItemBody(BaseModel):
    criterion: str
    level_descriptors: list[str]
    weight: float = 1.0
    item_id: Optional[str] = None


class RubricBody(BaseModel):
    course_id: str
    title: str
    locale_default: str = "es"
    items: list[RubricItemBody] = Field(default_factory=list)


class ApiError(SlidegradeError):
    """Handler-level error carrying an explicit HTTP status."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


def _status_for(exc: SlidegradeError) -> int:
    if isinstance(exc, ApiError):
        return exc.status
    if isinstance(exc, LimitExceeded):
        return 413
    if isinstance(exc, NotFound):
        return 404
    if isinstance(exc, Forbidden):
        return 403
    if isinstance(exc, RubricError):
        return 422
    return 422


def create_app(config: AppConfig | None = None, services: Services | None = None) -> FastAPI:
    services = services or create_services(config)
    config = services.config
    storage = services.storage
    pipeline = services.pipeline

    app = FastAPI(title="slidegrade", version="0.1.0", docs_url=None, redoc_url=None)
    app.state.services = services

    # --- auth plumbing ---------------------------------------------------

    def identify(request: Request) -> Identity:
        token = ""
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            token = header[7:].strip()
        if not token:
            token = request.cookies.get("slidegrade_session", "")
        if not token:
            return ANONYMOUS
        session = storage.structured.get_session(token)
        if session is None:
            return ANONYMOUS
        user = storage.structured.get_user(session["user_id"])
        if user is None:
            return ANONYMOUS
        request.scope["slidegrade_user"] = user["email"]
        return Identity(
            user_id=user["user_id"],
            roles=frozenset(user["roles"]),
            email=user["email"],
            display_name=user["display_name"],
        )

    def require(family: str):
        def dependency(request: Request) -> Identity:
            identity = identify(request)
            if not allowed(family, identity.roles):
                if identity.is_anonymous:
                    raise ApiError(401, "Unauthenticated", "authentication required")
                raise ApiError(403, "Forbidden", f"role not permitted for {family}")
            return identity

        return Depends(dependency)

    @app.exception_handler(SlidegradeError)
    async def _domain_error(request: Request, exc: SlidegradeError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": getattr(exc, "code", "error"), "message": exc.message},
        )

    @app.exception_handler(MultipartError)
    async def _multipart_error(request: Request, exc: MultipartError):
        return JSONResponse(status_code=422, content={"error": "BadMultipart", "message": str(exc)})

    # --- helpers ----------------------------------------------------------

    def _get_job_checked(job_id: str, identity: Identity) -> dict:
        job = storage.structured.get_job(job_id)
        if job is None:
            raise ApiError(404, "NotFound", f"job {job_id!r} not found")
        if job["user_id"] == identity.user_id or "admin" in identity.roles:
            return job
        if "teacher" in identity.roles and storage.structured.is_teacher(
            job["course_id"], identity.user_id
        ):
            return job
        raise ApiError(403, "Forbidden", "not your submission")

    def _job_payload(job: dict, include_events: bool = False) -> dict:
        payload = {
            "job_id": job["job_id"],
            "user_id": job["user_id"],
            "course_id": job["course_id"],
            "rubric_id": job["rubric_id"],
            "rubric_snapshot_id": job["rubric_snapshot_id"],
            "source_hash": job["source_hash"],
            "status": job["status"],
            "created_at": job["created_at"],
            "updated_at": job["updated_at"],
            "error": (
                {"code": job["error_code"], "message": job["error_message"]}
                if job["error_code"]
                else None
            ),
        }
        if job["status"] == "COMPLETED":
            doc = storage.documents.get_doc(EVALUATIONS_COLLECTION, job["job_id"])
            if doc is not None:
                payload["summary"] = doc.get("summary")
        if include_events:
            payload["progress_events"] = [
                {"status": e["status"], "timestamp": e["timestamp"]}
                for e in storage.structured.job_events(job["job_id"])
            ]
        return payload

    async def _read_capped_body(request: Request) -> bytes:
        chunks = []
        async for chunk in request.stream():
            chunks.append(chunk)
        return b"".join(chunks)

    def _teaches_or_admin(identity: Identity, course_id: str) -> None:
        if "admin" in identity.roles:
            return
        if "teacher" in identity.roles and storage.structured.is_teacher(course_id, identity.user_id):
            return
        raise ApiError(403, "Forbidden", "not a teacher of this course")

    # --- health ------------------------------------------------------------

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    # --- auth ---------------------------------------------------------------

    @app.post("/api/auth/login")
    def login(body: LoginBody):
        user = storage.structured.get_user_by_email(body.email)
        if user is None or not verify_password(body.password, user["password_hash"]):
            raise ApiError(401, "InvalidCredentials", "invalid email or password")
        token = new_session_token()
        storage.structured.create_session(token, user["user_id"], config.session_ttl_s)
        storage.record_event(user["user_id"], "login")
        return {
            "token": token,
            "user": {
                "user_id": user["user_id"],
                "email": user["email"],
                "display_name": user["display_name"],
                "roles": sorted(user["roles"]),
            },
        }

    @app.post("/api/auth/logout", status_code=204)
    def logout(request: Request, identity: Identity = require("auth_logout")):
        header = request.headers.get("authorization", "")
        token = header[7:].strip() if header.lower().startswith("bearer ") else ""
        if token:
            storage.structured.delete_session(token)
        return Response(status_code=204)

    # --- courses visible to the caller -----------------------------------------

    @app.get("/api/courses")
    def list_courses(identity: Identity = require("courses_read")):
        """Courses scoped to the identity (enrolled / taught / all for
        admins), each with its selectable rubrics; drives the upload form."""
        if "admin" in identity.roles:
            course_ids = [c["course_id"] for c in storage.structured.list_courses()]
        else:
            course_ids = list(storage.structured.teacher_courses(identity.user_id))
            for course in storage.structured.list_courses():
                if storage.structured.is_enrolled(course["course_id"], identity.user_id):
                    if course["course_id"] not in course_ids:
                        course_ids.append(course["course_id"])
        courses = []
        for cid in course_ids:
            course = storage.structured.get_course(cid)
            if course is None:
                continue
            courses.append(
                {
                    "course_id": cid,
                    "course_code": course["course_code"],
                    "title": course["title"],
                    "rubrics": [
                        {"rubric_id": head["rubric_id"], "title": head["title"]}
                        for head in storage.structured.list_rubrics(cid)
                    ],
                }
            )
        return {"courses": courses}

    # --- submissions ---------------------------------------------------------

    @app.post("/api/submissions")
    async def create_submission(request: Request, identity: Identity = require("submissions_create")):
        body = await _read_capped_body(request)
        parts = parse_multipart(body, request.headers.get("content-type", ""))
        file_part = parts.get("file")
        if file_part is None or file_part.filename is None:
            raise ApiError(422, "MissingFile", "multipart field 'file' is required")
        course_id = parts["course_id"].text if "course_id" in parts else ""
        rubric_id = parts["rubric_id"].text if "rubric_id" in parts else ""
        if not course_id or not rubric_id:
            raise ApiError(422, "MissingField", "course_id and rubric_id are required")
        if file_part.content[:4] != ZIP_MAGIC:
            raise ApiError(422, "NotAZipArchive", "upload does not look like a .pptx (ZIP) file")
        job_id, attached = pipeline.submit(identity.user_id, course_id, rubric_id, file_part.content)
        return {"job_id": job_id, "attached": attached}

    @app.get("/api/submissions")
    def list_submissions(
        identity: Identity = require("submissions_read"),
        course_id: Optional[str] = Query(default=None),
    ):
        if course_id is not None:
            _teaches_or_admin(identity, course_id)
            jobs = storage.structured.jobs_for_course(course_id)
        elif "admin" in identity.roles:
            jobs = []
            for course in storage.structured.list_courses():
                jobs.extend(storage.structured.jobs_for_course(course["course_id"]))
        elif "teacher" in identity.roles and "student" not in identity.roles:
            jobs = []
            for cid in storage.structured.teacher_courses(identity.user_id):
                jobs.extend(storage.structured.jobs_for_course(cid))
        else:
            jobs = storage.structured.jobs_for_user(identity.user_id)
        return {"submissions": [_job_payload(job) for job in jobs]}

    @app.get("/api/submissions/{job_id}")
    def get_submission(job_id: str, identity: Identity = require("submissions_read")):
        job = _get_job_checked(job_id, identity)
        return _job_payload(job, include_events=True)

    @app.get("/api/submissions/{job_id}/feedback")
    def get_feedback(job_id: str, identity: Identity = require("submissions_read")):
        job = _get_job_checked(job_id, identity)
        evaluation = storage.get_evaluation(job_id)
        if evaluation is None:
            raise ApiError(404, "NotFound", f"no feedback stored for job {job_id!r}")
        snapshot = storage.structured.get_snapshot(job["rubric_snapshot_id"])
        return {
            "job_id": job_id,
            "status": job["status"],
            "evaluation": evaluation,
            "rubric_snapshot": snapshot["doc"] if snapshot else None,
            "rubric_snapshot_id": job["rubric_snapshot_id"],
        }

    @app.get("/api/submissions/{job_id}/features")
    def get_features(job_id: str, identity: Identity = require("submissions_read")):
        _get_job_checked(job_id, identity)
        canonical = storage.get_features(job_id)
        if canonical is None:
            raise ApiError(404, "NotFound", f"no features stored for job {job_id!r}")
        return Response(content=canonical, media_type="application/json")

    @app.get("/api/submissions/{job_id}/deck")
    def get_deck(job_id: str, identity: Identity = require("submissions_read")):
        job = _get_job_checked(job_id, identity)
        data = storage.blobs.get(job["source_hash"])
        return Response(content=data, media_type=PPTX_MIME)

    @app.get("/api/submissions/{job_id}/events")
    def stream_events(job_id: str, identity: Identity = require("submissions_read")):
        _get_job_checked(job_id, identity)

        def sse():
            for event in pipeline.subscribe_progress(job_id):
                data = json.dumps(
                    {"status": event["status"], "timestamp": event["timestamp"]}, sort_keys=True
                )
                yield f"id: {event['seq']}\nevent: status\ndata: {data}\n\n"

        return StreamingResponse(
            sse(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    # --- rubrics ---------------------------------------------------------------

    def _build_rubric(body: RubricBody, rubric_id: str = "pending") -> Rubric:
        items = tuple(
            RubricItem(
                item_id=item.item_id or f"item-{i + 1}",
                criterion=item.criterion,
                level_descriptors=tuple(item.level_descriptors),
                weight=item.weight,
            )
            for i, item in enumerate(body.items)
        )
        return Rubric(
            rubric_id=rubric_id,
            course_id=body.course_id,
            title=body.title,
            items=items,
            locale_default=body.locale_default,
        )

    @app.post("/api/rubrics", status_code=201)
    def create_rubric(body: RubricBody, identity: Identity = require("rubrics_manage")):
        course = storage.structured.get_course(body.course_id)
        if course is None:
            raise ApiError(404, "CourseNotFound", f"course {body.course_id!r} not found")
        _teaches_or_admin(identity, body.course_id)
        rubric = _build_rubric(body)
        problems = validate_rubric(rubric)
        if problems:
            return JSONResponse(status_code=422, content={"error": "InvalidRubric",
                                                          "validation_errors": problems})
        doc = rubric_to_dict(rubric)
        doc.pop("rubric_id", None)
        rubric_id, snapshot_id = storage.structured.create_rubric(body.course_id, doc)
        return {"rubric_id": rubric_id, "snapshot_id": snapshot_id}

    @app.put("/api/rubrics/{rubric_id}")
    def update_rubric(rubric_id: str, body: RubricBody,
                      identity: Identity = require("rubrics_manage")):
        head = storage.structured.get_rubric(rubric_id)
        if head is None:
            raise ApiError(404, "RubricNotFound", f"rubric {rubric_id!r} not found")
        _teaches_or_admin(identity, head["course_id"])
        rubric = _build_rubric(body, rubric_id)
        problems = validate_rubric(rubric)
        if problems:
            return JSONResponse(status_code=422, content={"error": "InvalidRubric",
                                                          "validation_errors": problems})
        doc = rubric_to_dict(rubric)
        snapshot_id = storage.structured.update_rubric(rubric_id, doc)
        return {"rubric_id": rubric_id, "snapshot_id": snapshot_id}

    @app.get("/api/rubrics")
    def list_rubrics(identity: Identity = require("rubrics_manage"),
                     course_id: Optional[str] = Query(default=None)):
        if course_id is not None:
            _teaches_or_admin(identity, course_id)
            course_ids = [course_id]
        elif "admin" in identity.roles:
            course_ids = [c["course_id"] for c in storage.structured.list_courses()]
        else:
            course_ids = storage.structured.teacher_courses(identity.user_id)
        rubrics = []
        for cid in course_ids:
            for head in storage.structured.list_rubrics(cid):
                snapshot = storage.structured.get_snapshot(head["current_snapshot_id"])
                rubrics.append(
                    {
                        "rubric_id": head["rubric_id"],
                        "course_id": head["course_id"],
                        "title": head["title"],
                        "locale_default": head["locale_default"],
                        "current_snapshot_id": head["current_snapshot_id"],
                        "current": snapshot["doc"] if snapshot else None,
                    }
                )
        return {"rubrics": rubrics}

    @app.get("/api/rubrics/{rubric_id}")
    def get_rubric(rubric_id: str, identity: Identity = require("rubrics_manage")):
        head = storage.structured.get_rubric(rubric_id)
        if head is None:
            raise ApiError(404, "RubricNotFound", f"rubric {rubric_id!r} not found")
        _teaches_or_admin(identity, head["course_id"])
        snapshots = storage.structured.list_snapshots(rubric_id)
        return {
            "rubric_id": rubric_id,
            "course_id": head["course_id"],
            "title": head["title"],
            "locale_default": head["locale_default"],
            "current_snapshot_id": head["current_snapshot_id"],
            "snapshots": [
                {"snapshot_id": s["snapshot_id"], "created_at": s["created_at"], "doc": s["doc"]}
                for s in snapshots
            ],
        }

    # --- analytics ----------------------------------------------------------

    def _window(from_ts: Optional[float], to_ts: Optional[float]):
        if from_ts is None and to_ts is None:
            return None
        return (from_ts, to_ts)

    @app.get("/api/analytics/students/{student_id}")
    def student_analytics(
        student_id: str,
        identity: Identity = require("analytics_read"),
        from_ts: Optional[float] = Query(default=None),
        to_ts: Optional[float] = Query(default=None),
    ):
        if "admin" not in identity.roles:
            shares = any(
                storage.structured.is_enrolled(cid, student_id)
                for cid in storage.structured.teacher_courses(identity.user_id)
            )
            if not shares:
                raise ApiError(403, "Forbidden", "student not in any of your courses")
        stats = storage.session_stats(student_id, _window(from_ts, to_ts))
        return {"user_id": student_id, "stats": stats.to_dict()}

    @app.get("/api/analytics/course/{course_id}/comparison")
    def course_comparison(
        course_id: str,
        user_id: str = Query(...),
        identity: Identity = require("analytics_read"),
        from_ts: Optional[float] = Query(default=None),
        to_ts: Optional[float] = Query(default=None),
    ):
        _teaches_or_admin(identity, course_id)
        result = storage.class_comparison(course_id, user_id, _window(from_ts, to_ts))
        return {"course_id": course_id, "user_id": user_id, **result}

    # --- admin import ----------------------------------------------------------

    @app.post("/api/admin/import")
    async def admin_import(request: Request, identity: Identity = require("admin_import")):
        body = await _read_capped_body(request)
        parts = parse_multipart(body, request.headers.get("content-type", ""))
        file_part = parts.get("file")
        if file_part is None:
            raise ApiError(422, "MissingFile", "multipart field 'file' is required")
        kind = parts["kind"].text if "kind" in parts else request.query_params.get("kind", "")
        if kind not in SHEET_KINDS:
            raise ApiError(422, "UnknownSheetKind", f"kind must be one of {SHEET_KINDS}")
        report = import_sheet(storage, file_part.content, kind, file_part.filename, config)
        return report

    # --- UI telemetry ------------------------------------------------------------

    @app.post("/api/events", status_code=204)
    def ingest_event(body: EventBody, identity: Identity = require("events_ingest")):
        if body.kind not in TELEMETRY_KINDS:
            raise ApiError(422, "UnknownEventKind", f"kind must be one of {TELEMETRY_KINDS}")
        storage.record_event(
            identity.user_id, body.kind, job_id=body.job_id, course_id=body.course_id
        )
        return Response(status_code=204)

    # --- middleware stack (innermost added first) -------------------------------

    app.add_middleware(BodyLimitMiddleware, config=config)
    app.add_middleware(RateLimitMiddleware, config=config, limiter=services.limiter)
    app.add_middleware(AuditMiddleware, config=config)
    if config.cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[config.cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    ui_dir = Path(getattr(config, "ui_dist_dir", "") or "")
    if ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
