"""Shared fixtures: an in-process API stack with mock provider and seeded
users/course/rubric, plus the fixture deck corpus."""

from __future__ import annotations

import sys
from pathlib import Path
from types import SimpleNamespace

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fastapi.testclient import TestClient

from slidegrade.api.app import create_app
from slidegrade.api.services import create_services
from slidegrade.config import AppConfig
from slidegrade.evaluator.providers import MockProvider
from slidegrade.store.base import Storage
from slidegrade.store.security import hash_password

PASSWORD = "correct-horse-battery"

RUBRIC_ITEMS_4 = [
    {"criterion": c, "level_descriptors": [f"level {s} for {c}" for s in range(1, 6)],
     "weight": 1.0}
    for c in ("Structure", "Typography", "References", "Visual design")
]


def seed_basic(storage: Storage, config: AppConfig) -> dict:
    """Admin, teacher, two students, one course, one 4-item rubric."""
    s = storage.structured
    pw = hash_password(PASSWORD, config)
    admin = s.create_user("ada@example.edu", "Ada Admin", pw, {"admin"})
    teacher = s.create_user("tom@example.edu", "Tom Teacher", pw, {"teacher"})
    student = s.create_user("ana@example.edu", "Ana Student", pw, {"student"})
    student2 = s.create_user("ben@example.edu", "Ben Student", pw, {"student"})
    course = s.create_course("TEL101", "Telecommunication Projects")
    s.assign_teacher(course, teacher)
    s.enroll(course, student)
    s.enroll(course, student2)
    rubric_doc = {
        "rubric_schema": 1,
        "title": "Presentation rubric",
        "locale_default": "es",
        "items": [
            {"item_id": f"item-{i + 1}", **item} for i, item in enumerate(RUBRIC_ITEMS_4)
        ],
    }
    rubric_id, snapshot_id = s.create_rubric(course, rubric_doc)
    return {
        "admin": admin,
        "teacher": teacher,
        "student": student,
        "student2": student2,
        "course_id": course,
        "rubric_id": rubric_id,
        "snapshot_id": snapshot_id,
        "emails": {
            "admin": "ada@example.edu",
            "teacher": "tom@example.edu",
            "student": "ana@example.edu",
            "student2": "ben@example.edu",
        },
    }


def make_stack(tmp_path, config_overrides=None, provider=None, start_workers=True):
    overrides = {
        "data_dir": str(tmp_path / "data"),
        "requests_per_minute": 1_000_000,
        "login_attempts_per_minute": 1_000,  # rate-limit tests override this back down
        "worker_count": 2,
    }
    overrides.update(config_overrides or {})
    config = AppConfig(**overrides)
    provider = provider or MockProvider()
    services = create_services(config, provider=provider)
    seed = seed_basic(services.storage, config)
    if start_workers:
        services.pipeline.start()
    app = create_app(services=services)
    client = TestClient(app, raise_server_exceptions=True)
    return SimpleNamespace(
        client=client, services=services, seed=seed, provider=provider, config=config, app=app
    )


@pytest.fixture
def stack(tmp_path):
    s = make_stack(tmp_path)
    yield s
    s.services.pipeline.stop()
    s.services.storage.close()


def login(stack, who: str) -> dict:
    """Login as one of the seeded identities; returns Authorization headers."""
    email = stack.seed["emails"][who]
    response = stack.client.post(
        "/api/auth/login", json={"email": email, "password": PASSWORD}
    )
    assert response.status_code == 200, response.text
    return {"Authorization": f"Bearer {response.json()['token']}"}
