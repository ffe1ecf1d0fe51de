"""API integration tests over the in-process stack with mock provider."""

from __future__ import annotations

import asyncio
import json
import time

import pytest

import corpus
from conftest import PASSWORD, login, make_stack
from fixture_decks import simple_deck
from slidegrade.api.rbac import PERMISSION_MATRIX


def upload(stack, headers, data: bytes, course_id=None, rubric_id=None):
    return stack.client.post(
        "/api/submissions",
        headers=headers,
        files={"file": ("deck.pptx", data)},
        data={
            "course_id": course_id or stack.seed["course_id"],
            "rubric_id": rubric_id or stack.seed["rubric_id"],
        },
    )


def wait_status(stack, headers, job_id, want="COMPLETED", timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        response = stack.client.get(f"/api/submissions/{job_id}", headers=headers)
        assert response.status_code == 200
        status = response.json()["status"]
        if status == want:
            return response.json()
        if status == "FAILED" and want != "FAILED":
            raise AssertionError(f"job failed: {response.json()['error']}")
        time.sleep(0.05)
    raise AssertionError(f"timed out waiting for {want}")


# --- auth -----------------------------------------------------------------

def test_login_logout_roundtrip(stack):
    headers = login(stack, "student")
    response = stack.client.post("/api/auth/logout", headers=headers)
    assert response.status_code == 204
    response = stack.client.get("/api/submissions", headers=headers)
    assert response.status_code == 401  # token revoked instantly


def test_bad_password_is_401(stack):
    response = stack.client.post(
        "/api/auth/login", json={"email": "ana@example.edu", "password": "wrong"}
    )
    assert response.status_code == 401


def test_login_injection_attempt_mutates_nothing(stack):
    before = stack.services.storage.structured.user_count()
    response = stack.client.post(
        "/api/auth/login", json={"email": "' OR 1=1--", "password": "x"}
    )
    assert response.status_code == 401
    assert stack.services.storage.structured.user_count() == before


def test_expired_session_rejected(tmp_path):
    stack = make_stack(tmp_path, config_overrides={"session_ttl_s": 0.05})
    try:
        headers = login(stack, "student")
        time.sleep(0.1)
        assert stack.client.get("/api/submissions", headers=headers).status_code == 401
    finally:
        stack.services.pipeline.stop()
        stack.services.storage.close()


# --- student upload flow ------------------------------------------------------

def test_upload_process_feedback_cycle(stack):
    headers = login(stack, "student")
    response = upload(stack, headers, corpus.f1_basic())
    assert response.status_code == 200, response.text
    body = response.json()
    assert body["attached"] is False
    job_id = body["job_id"]

    final = wait_status(stack, headers, job_id)
    assert [e["status"] for e in final["progress_events"]] == [
        "QUEUED", "EXTRACTING", "EVALUATING", "PERSISTING", "COMPLETED",
    ]
    assert final["summary"]["percentage"] == 40.0  # mock rule on F1

    feedback = stack.client.get(f"/api/submissions/{job_id}/feedback", headers=headers)
    assert feedback.status_code == 200
    doc = feedback.json()
    assert doc["evaluation"]["summary"]["percentage"] == 40.0
    assert doc["rubric_snapshot"]["items"][0]["criterion"] == "Structure"
    for item in doc["evaluation"]["items"]:
        assert item["feedback"]["es"] and item["feedback"]["en"]
    for locale in ("es", "en"):
        block = doc["evaluation"]["general"][locale]
        assert block["strengths"] and block["improvements"] and block["actions"]

    features = stack.client.get(f"/api/submissions/{job_id}/features", headers=headers)
    assert features.status_code == 200
    assert json.loads(features.text)["features_schema"] == 1

    deck = stack.client.get(f"/api/submissions/{job_id}/deck", headers=headers)
    assert deck.status_code == 200
    assert deck.content == corpus.f1_basic()

    history = stack.client.get("/api/submissions", headers=headers)
    assert [s["job_id"] for s in history.json()["submissions"]] == [job_id]


def test_upload_records_upload_event(stack):
    headers = login(stack, "student")
    upload(stack, headers, corpus.f1_basic())
    events = stack.services.storage.events.events_for_user(stack.seed["student"])
    assert [e.kind for e in events] == ["login", "upload"]


def test_upload_not_a_zip_rejected_422(stack):
    headers = login(stack, "student")
    response = upload(stack, headers, b"clearly not a zip file")
    assert response.status_code == 422


def test_upload_above_cap_is_413_by_content_length(tmp_path):
    stack = make_stack(tmp_path, config_overrides={"max_upload_bytes": 10_000})
    try:
        headers = login(stack, "student")
        response = upload(stack, headers, b"PK\x03\x04" + b"x" * 20_000)
        assert response.status_code == 413
    finally:
        stack.services.pipeline.stop()
        stack.services.storage.close()


def test_upload_unknown_rubric_404(stack):
    headers = login(stack, "student")
    response = upload(stack, headers, corpus.f1_basic(), rubric_id="bogus")
    assert response.status_code == 404


def test_duplicate_upload_attaches(tmp_path):
    # workers held back so the first job is still active when the second
    # identical upload arrives
    stack = make_stack(tmp_path, start_workers=False)
    try:
        headers = login(stack, "student")
        data = corpus.f3_numbers()
        first = upload(stack, headers, data).json()
        second = upload(stack, headers, data).json()
        assert second["job_id"] == first["job_id"]
        assert second["attached"] is True
    finally:
        stack.services.pipeline.stop()
        stack.services.storage.close()


# --- SSE progress stream ----------------------------------------------------------

def test_sse_stream_replays_history_and_closes(stack):
    headers = login(stack, "student")
    job_id = upload(stack, headers, corpus.f1_basic()).json()["job_id"]
    wait_status(stack, headers, job_id)
    events = []
    with stack.client.stream(
        "GET", f"/api/submissions/{job_id}/events", headers=headers
    ) as response:
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/event-stream")
        for line in response.iter_lines():
            if line.startswith("data: "):
                events.append(json.loads(line[6:]))
    assert [e["status"] for e in events] == [
        "QUEUED", "EXTRACTING", "EVALUATING", "PERSISTING", "COMPLETED",
    ]
    timestamps = [e["timestamp"] for e in events]
    assert timestamps == sorted(timestamps)


def test_sse_foreign_student_403(stack):
    headers = login(stack, "student")
    job_id = upload(stack, headers, corpus.f1_basic()).json()["job_id"]
    other = login(stack, "student2")
    response = stack.client.get(f"/api/submissions/{job_id}/events", headers=other)
    assert response.status_code == 403


def test_sse_unknown_job_404(stack):
    headers = login(stack, "student")
    assert stack.client.get("/api/submissions/nope/events", headers=headers).status_code == 404


# --- ownership ---------------------------------------------------------------------

def test_student_cannot_read_other_students_feedback(stack):
    headers = login(stack, "student")
    job_id = upload(stack, headers, corpus.f1_basic()).json()["job_id"]
    wait_status(stack, headers, job_id)
    other = login(stack, "student2")
    assert stack.client.get(f"/api/submissions/{job_id}", headers=other).status_code == 403
    assert (
        stack.client.get(f"/api/submissions/{job_id}/feedback", headers=other).status_code == 403
    )


def test_teacher_of_course_can_read_student_submission(stack):
    headers = login(stack, "student")
    job_id = upload(stack, headers, corpus.f1_basic()).json()["job_id"]
    wait_status(stack, headers, job_id)
    teacher = login(stack, "teacher")
    assert stack.client.get(f"/api/submissions/{job_id}", headers=teacher).status_code == 200
    listing = stack.client.get(
        "/api/submissions", headers=teacher,
        params={"course_id": stack.seed["course_id"]},
    )
    assert [s["job_id"] for s in listing.json()["submissions"]] == [job_id]


# --- RBAC matrix sweep ----------------------------------------------------------------

def _family_probe(stack, family: str, headers: dict):
    course = stack.seed["course_id"]
    client = stack.client
    if family == "auth_login":
        return client.post("/api/auth/login",
                           json={"email": "ana@example.edu", "password": PASSWORD})
    if family == "auth_logout":
        return client.post("/api/auth/logout", headers=headers)
    if family == "courses_read":
        return client.get("/api/courses", headers=headers)
    if family == "submissions_create":
        return client.post(
            "/api/submissions", headers=headers,
            files={"file": ("d.pptx", corpus.f1_basic())},
            data={"course_id": course, "rubric_id": stack.seed["rubric_id"]},
        )
    if family == "submissions_read":
        return client.get("/api/submissions", headers=headers)
    if family == "rubrics_manage":
        return client.get("/api/rubrics", headers=headers)
    if family == "analytics_read":
        return client.get(
            f"/api/analytics/course/{course}/comparison",
            headers=headers, params={"user_id": stack.seed["student"]},
        )
    if family == "admin_import":
        return client.post(
            "/api/admin/import", headers=headers,
            files={"file": ("s.csv", b"email,display_name,course_code\n")},
            data={"kind": "students"},
        )
    if family == "events_ingest":
        return client.post("/api/events", headers=headers, json={"kind": "feedback_view"})
    raise AssertionError(f"no probe for family {family}")


def test_rbac_matrix_exhaustive_sweep(stack):
    """Every (role, family) cell of the documented matrix matches the API."""
    role_headers = {
        "anonymous": {},
        "student": login(stack, "student"),
        "teacher": login(stack, "teacher"),
        "admin": login(stack, "admin"),
    }
    deviations = []
    for family, permitted in PERMISSION_MATRIX.items():
        for role, headers in role_headers.items():
            if family == "auth_logout" and role != "anonymous":
                headers = login(stack, role if role != "anonymous" else "student")
            response = _family_probe(stack, family, headers)
            denied = response.status_code in (401, 403)
            expected_allow = role in permitted
            if denied == expected_allow:
                deviations.append((family, role, response.status_code))
    assert deviations == []


def test_courses_listing_scoped_by_identity(stack):
    student = login(stack, "student")
    body = stack.client.get("/api/courses", headers=student).json()
    assert [c["course_id"] for c in body["courses"]] == [stack.seed["course_id"]]
    rubrics = body["courses"][0]["rubrics"]
    assert [r["rubric_id"] for r in rubrics] == [stack.seed["rubric_id"]]

    outsider_course = stack.services.storage.structured.create_course("OTHER1", "Other")
    teacher = login(stack, "teacher")
    teacher_courses = {c["course_id"] for c in
                       stack.client.get("/api/courses", headers=teacher).json()["courses"]}
    assert stack.seed["course_id"] in teacher_courses
    assert outsider_course not in teacher_courses

    admin = login(stack, "admin")
    admin_courses = {c["course_id"] for c in
                     stack.client.get("/api/courses", headers=admin).json()["courses"]}
    assert outsider_course in admin_courses


def test_deny_by_default_unknown_family():
    from slidegrade.api.rbac import allowed

    assert allowed("not_a_family", {"admin"}) is False
    assert allowed("submissions_read", set()) is False


# --- rubric management -----------------------------------------------------------------

def _rubric_body(stack, title="New rubric", criterion="Clarity"):
    return {
        "course_id": stack.seed["course_id"],
        "title": title,
        "locale_default": "es",
        "items": [
            {"criterion": criterion, "level_descriptors": ["1", "2", "3", "4", "5"],
             "weight": 1.0}
        ],
    }


def test_rubric_create_edit_snapshots(stack):
    teacher = login(stack, "teacher")
    created = stack.client.post("/api/rubrics", headers=teacher, json=_rubric_body(stack))
    assert created.status_code == 201, created.text
    rubric_id = created.json()["rubric_id"]
    snap1 = created.json()["snapshot_id"]

    edited = stack.client.put(
        f"/api/rubrics/{rubric_id}", headers=teacher,
        json=_rubric_body(stack, criterion="Edited criterion"),
    )
    assert edited.status_code == 200
    snap2 = edited.json()["snapshot_id"]
    assert snap2 != snap1

    detail = stack.client.get(f"/api/rubrics/{rubric_id}", headers=teacher).json()
    assert detail["current_snapshot_id"] == snap2
    assert len(detail["snapshots"]) == 2
    assert detail["snapshots"][0]["doc"]["items"][0]["criterion"] == "Clarity"


def test_rubric_validation_errors_rendered(stack):
    teacher = login(stack, "teacher")
    body = _rubric_body(stack)
    body["items"][0]["level_descriptors"] = ["only", "four", "levels", "here"]
    response = stack.client.post("/api/rubrics", headers=teacher, json=body)
    assert response.status_code == 422
    assert any("exactly 5 level descriptors" in e for e in response.json()["validation_errors"])


def test_rubric_edit_leaves_past_evaluation_snapshot_intact(stack):
    student = login(stack, "student")
    job_id = upload(stack, student, corpus.f1_basic()).json()["job_id"]
    wait_status(stack, student, job_id)
    before = stack.client.get(f"/api/submissions/{job_id}/feedback", headers=student).json()

    teacher = login(stack, "teacher")
    body = {
        "course_id": stack.seed["course_id"],
        "title": "Presentation rubric v2",
        "locale_default": "es",
        "items": [
            {"criterion": f"Rewritten {i}", "level_descriptors": ["1", "2", "3", "4", "5"],
             "weight": 1.0, "item_id": f"item-{i + 1}"}
            for i in range(4)
        ],
    }
    response = stack.client.put(
        f"/api/rubrics/{stack.seed['rubric_id']}", headers=teacher, json=body
    )
    assert response.status_code == 200

    after = stack.client.get(f"/api/submissions/{job_id}/feedback", headers=student).json()
    assert after["rubric_snapshot"] == before["rubric_snapshot"]
    assert after["rubric_snapshot"]["items"][0]["criterion"] == "Structure"


# --- analytics endpoints --------------------------------------------------------------

def test_student_analytics_and_comparison(stack):
    storage = stack.services.storage
    sid, sid2 = stack.seed["student"], stack.seed["student2"]
    for i in range(4):
        storage.record_event(sid, "upload", timestamp=float(i + 1))
    teacher = login(stack, "teacher")
    response = stack.client.get(f"/api/analytics/students/{sid}", headers=teacher)
    assert response.status_code == 200
    assert response.json()["stats"]["uploads"] == 4

    comparison = stack.client.get(
        f"/api/analytics/course/{stack.seed['course_id']}/comparison",
        headers=teacher, params={"user_id": sid},
    ).json()
    assert comparison["class_mean"]["uploads"] == 2.0  # (4 + 0) / 2
    assert comparison["user"]["uploads"] == 4
    assert comparison["class_size"] == 2


def test_analytics_window_params(stack):
    storage = stack.services.storage
    sid = stack.seed["student"]
    storage.record_event(sid, "upload", timestamp=10.0)
    storage.record_event(sid, "upload", timestamp=1000.0)
    teacher = login(stack, "teacher")
    response = stack.client.get(
        f"/api/analytics/students/{sid}", headers=teacher,
        params={"from_ts": 500.0, "to_ts": 2000.0},
    )
    assert response.json()["stats"]["uploads"] == 1


def test_teacher_cannot_see_foreign_student_analytics(stack):
    outsider = stack.services.storage.structured.create_user(
        "out@x.io", "Out", "h", {"student"}
    )
    teacher = login(stack, "teacher")
    response = stack.client.get(f"/api/analytics/students/{outsider}", headers=teacher)
    assert response.status_code == 403


# --- telemetry ingestion -------------------------------------------------------------

def test_event_ingestion_end_to_end_session(stack):
    headers = login(stack, "student")
    base = time.time()
    for kind in ("history_open", "history_heartbeat", "history_heartbeat", "history_close"):
        response = stack.client.post("/api/events", headers=headers, json={"kind": kind})
        assert response.status_code == 204
    stats = stack.services.storage.session_stats(stack.seed["student"])
    assert stats.review_sessions == 1
    assert stats.total_review_duration_s < time.time() - base + 1.0


def test_event_ingestion_rejects_non_telemetry_kinds(stack):
    headers = login(stack, "student")
    response = stack.client.post("/api/events", headers=headers, json={"kind": "login"})
    assert response.status_code == 422


# --- rate limiting -------------------------------------------------------------------

def test_login_rate_limit_five_per_minute(tmp_path):
    stack = make_stack(tmp_path, start_workers=False,
                       config_overrides={"login_attempts_per_minute": 5})
    try:
        statuses = [
            stack.client.post(
                "/api/auth/login", json={"email": "ana@example.edu", "password": "bad"}
            ).status_code
            for _ in range(100)
        ]
        assert statuses.count(429) >= 95
        assert all(s in (401, 429) for s in statuses)
    finally:
        stack.services.pipeline.stop()
        stack.services.storage.close()


def test_general_rate_limit_configurable(tmp_path):
    stack = make_stack(tmp_path, config_overrides={"requests_per_minute": 3},
                       start_workers=False)
    try:
        statuses = [stack.client.get("/api/health").status_code for _ in range(10)]
        assert statuses.count(429) >= 6
    finally:
        stack.services.pipeline.stop()
        stack.services.storage.close()


# --- streaming body cap (instrumented) --------------------------------------------------

def test_body_cap_aborts_before_buffering_completes(tmp_path):
    """Without a Content-Length header the app must stop reading the body
    stream once the cap is crossed: consumed bytes stay far below the full
    body size, and the client still gets a 413."""
    stack = make_stack(tmp_path, config_overrides={"max_upload_bytes": 50_000},
                       start_workers=False)
    cap = 50_000 + 64 * 1024
    chunk = b"x" * 8192
    total_chunks = 200  # ~1.6 MB body, far above the cap
    consumed = {"bytes": 0, "chunks": 0}
    token = login(stack, "student")["Authorization"]

    async def run() -> int:
        sent = {"count": 0}

        async def receive():
            if sent["count"] < total_chunks:
                sent["count"] += 1
                consumed["chunks"] += 1
                consumed["bytes"] += len(chunk)
                return {"type": "http.request", "body": chunk,
                        "more_body": sent["count"] < total_chunks}
            return {"type": "http.request", "body": b"", "more_body": False}

        status = {}

        async def send(message):
            if message["type"] == "http.response.start":
                status["code"] = message["status"]

        scope = {
            "type": "http",
            "asgi": {"version": "3.0"},
            "http_version": "1.1",
            "method": "POST",
            "scheme": "http",
            "path": "/api/submissions",
            "raw_path": b"/api/submissions",
            "query_string": b"",
            "root_path": "",
            "headers": [
                (b"host", b"testserver"),
                (b"authorization", token.encode("latin-1")),
                (b"content-type", b"multipart/form-data; boundary=xyz"),
                # no content-length: forces the streaming path
            ],
            "client": ("instrumented", 1234),
            "server": ("testserver", 80),
        }
        await stack.app(scope, receive, send)
        return status.get("code", 0)

    try:
        status = asyncio.new_event_loop().run_until_complete(run())
        assert status == 413
        assert consumed["bytes"] < cap + 2 * len(chunk)
        assert consumed["chunks"] < total_chunks
    finally:
        stack.services.pipeline.stop()
        stack.services.storage.close()


# --- misc -------------------------------------------------------------------------------

def test_health_endpoint_is_public(stack):
    assert stack.client.get("/api/health").json() == {"status": "ok"}


def test_404_for_unknown_submission(stack):
    headers = login(stack, "student")
    assert stack.client.get("/api/submissions/unknown", headers=headers).status_code == 404


def test_audit_log_line_per_request(stack, caplog):
    import logging

    with caplog.at_level(logging.INFO, logger="slidegrade.audit"):
        stack.client.get("/api/health")
    lines = [json.loads(r.message) for r in caplog.records
             if r.name == "slidegrade.audit"]
    assert any(l["path"] == "/api/health" and l["status"] == 200 for l in lines)
