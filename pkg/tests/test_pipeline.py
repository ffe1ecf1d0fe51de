"""Pipeline tests: state machine, dedup locking, progress, liveness."""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import pytest

import corpus
from fixture_decks import simple_deck
from slidegrade.config import AppConfig
from slidegrade.errors import Forbidden, NotEnrolled, NotFound, RubricNotFound
from slidegrade.evaluator.evaluate import Evaluator
from slidegrade.evaluator.providers import MockProvider, ProviderConfig, ScriptedProvider
from slidegrade.pipeline.service import Pipeline
from slidegrade.store.base import Storage

CONFIG = AppConfig(worker_count=2)


@pytest.fixture
def env(tmp_path):
    storage = Storage.open(tmp_path / "data", CONFIG)
    provider = MockProvider()
    evaluator = Evaluator(provider, ProviderConfig.from_app_config(CONFIG))
    pipeline = Pipeline(storage, evaluator, CONFIG)
    s = storage.structured
    course = s.create_course("C1", "Course")
    user = s.create_user("stu@x.io", "Stu", "h", {"student"})
    s.enroll(course, user)
    rubric_doc = {
        "title": "R", "locale_default": "es",
        "items": [
            {"item_id": f"i{k}", "criterion": f"c{k}",
             "level_descriptors": ["a", "b", "c", "d", "e"], "weight": 1.0}
            for k in range(1, 5)
        ],
    }
    rubric_id, snapshot_id = s.create_rubric(course, rubric_doc)

    class Env:
        pass

    e = Env()
    e.storage, e.provider, e.pipeline = storage, provider, pipeline
    e.course, e.user, e.rubric, e.snapshot = course, user, rubric_id, snapshot_id
    yield e
    pipeline.stop()
    storage.close()


def test_submit_creates_queued_job(env):
    job_id, attached = env.pipeline.submit(env.user, env.course, env.rubric, corpus.f1_basic())
    assert attached is False
    job = env.storage.structured.get_job(job_id)
    assert job["status"] == "QUEUED"
    assert job["rubric_snapshot_id"] == env.snapshot
    events = env.storage.structured.job_events(job_id)
    assert [e["status"] for e in events] == ["QUEUED"]


def test_submit_checks_enrollment_and_rubric(env):
    with pytest.raises(NotEnrolled):
        env.pipeline.submit("ghost-user", env.course, env.rubric, corpus.f1_basic())
    with pytest.raises(RubricNotFound):
        env.pipeline.submit(env.user, env.course, "missing-rubric", corpus.f1_basic())


def test_worker_step_happy_path_five_events(env):
    job_id, _ = env.pipeline.submit(env.user, env.course, env.rubric, corpus.f1_basic())
    job = env.pipeline.worker_step(job_id)
    assert job["status"] == "COMPLETED"
    events = env.storage.structured.job_events(job_id)
    assert [e["status"] for e in events] == [
        "QUEUED", "EXTRACTING", "EVALUATING", "PERSISTING", "COMPLETED",
    ]
    timestamps = [e["timestamp"] for e in events]
    assert timestamps == sorted(timestamps)
    assert env.storage.get_features(job_id) is not None
    assert env.storage.get_evaluation(job_id) is not None
    assert len(env.storage.cost_ledger()) == 1


def test_corrupt_bytes_fail_at_extracting(env):
    job_id, _ = env.pipeline.submit(env.user, env.course, env.rubric, b"PK\x03\x04 not a deck")
    job = env.pipeline.worker_step(job_id)
    assert job["status"] == "FAILED"
    assert job["error_code"] == "NotAZipArchive"
    statuses = [e["status"] for e in env.storage.structured.job_events(job_id)]
    assert statuses == ["QUEUED", "EXTRACTING", "FAILED"]


def test_garbage_provider_fails_at_evaluating(tmp_path):
    storage = Storage.open(tmp_path / "data2", CONFIG)
    provider = ScriptedProvider(["garbage"] * 5)
    pipeline = Pipeline(storage, Evaluator(provider, ProviderConfig.from_app_config(CONFIG)),
                        CONFIG)
    s = storage.structured
    course = s.create_course("C", "C")
    user = s.create_user("u@x.io", "U", "h", {"student"})
    s.enroll(course, user)
    rubric_id, _ = s.create_rubric(course, {
        "title": "R", "locale_default": "es",
        "items": [{"item_id": "i1", "criterion": "c",
                   "level_descriptors": ["a", "b", "c", "d", "e"], "weight": 1.0}]})
    job_id, _ = pipeline.submit(user, course, rubric_id, corpus.f1_basic())
    job = pipeline.worker_step(job_id)
    assert job["status"] == "FAILED"
    assert job["error_code"] == "SchemaInvalidAfterRepairs"
    statuses = [e["status"] for e in storage.structured.job_events(job_id)]
    assert statuses == ["QUEUED", "EXTRACTING", "EVALUATING", "FAILED"]
    storage.close()


def test_duplicate_submission_attaches_while_active(env):
    data = corpus.f1_basic()
    first, attached_first = env.pipeline.submit(env.user, env.course, env.rubric, data)
    second, attached_second = env.pipeline.submit(env.user, env.course, env.rubric, data)
    assert attached_first is False
    assert attached_second is True
    assert first == second


def test_resubmission_after_completion_evaluates_again(env):
    data = corpus.f1_basic()
    first, _ = env.pipeline.submit(env.user, env.course, env.rubric, data)
    env.pipeline.worker_step(first)
    assert env.storage.structured.get_job(first)["status"] == "COMPLETED"
    second, attached = env.pipeline.submit(env.user, env.course, env.rubric, data)
    assert attached is False
    assert second != first
    env.pipeline.worker_step(second)
    assert env.provider.invocations == 2


def test_different_users_same_bytes_both_evaluate(env):
    other = env.storage.structured.create_user("stu2@x.io", "S2", "h", {"student"})
    env.storage.structured.enroll(env.course, other)
    data = corpus.f1_basic()
    a, att_a = env.pipeline.submit(env.user, env.course, env.rubric, data)
    b, att_b = env.pipeline.submit(other, env.course, env.rubric, data)
    assert att_a is False and att_b is False
    assert a != b


def test_concurrent_identical_submissions_dedup_linearizable(env):
    """16 concurrent identical submissions: one job, fifteen attaches,
    exactly one provider invocation after processing."""
    data = corpus.f1_basic()

    def submit(_):
        return env.pipeline.submit(env.user, env.course, env.rubric, data)

    with ThreadPoolExecutor(max_workers=16) as pool:
        results = list(pool.map(submit, range(16)))

    job_ids = {job_id for job_id, _ in results}
    attached_flags = [attached for _, attached in results]
    assert len(job_ids) == 1
    assert attached_flags.count(False) == 1
    assert attached_flags.count(True) == 15
    job_id = job_ids.pop()
    env.pipeline.worker_step(job_id)
    assert env.provider.invocations == 1
    assert env.storage.structured.get_job(job_id)["status"] == "COMPLETED"


def test_subscribe_after_completion_replays_history_then_closes(env):
    job_id, _ = env.pipeline.submit(env.user, env.course, env.rubric, corpus.f1_basic())
    env.pipeline.worker_step(job_id)
    events = list(env.pipeline.subscribe_progress(job_id))
    assert [e["status"] for e in events] == [
        "QUEUED", "EXTRACTING", "EVALUATING", "PERSISTING", "COMPLETED",
    ]


def test_subscribe_live_receives_each_transition_once_in_order(env):
    latency_provider = MockProvider(latency_range_s=(0.05, 0.1), seed=1)
    env.pipeline.evaluator = Evaluator(latency_provider, ProviderConfig.from_app_config(CONFIG))
    job_id, _ = env.pipeline.submit(env.user, env.course, env.rubric, corpus.f1_basic())

    received = []
    done = threading.Event()

    def subscriber():
        for event in env.pipeline.subscribe_progress(job_id, poll_interval_s=0.05):
            received.append(event)
        done.set()

    thread = threading.Thread(target=subscriber)
    thread.start()
    time.sleep(0.05)
    env.pipeline.worker_step(job_id)
    assert done.wait(timeout=10)
    thread.join()
    statuses = [e["status"] for e in received]
    assert statuses == ["QUEUED", "EXTRACTING", "EVALUATING", "PERSISTING", "COMPLETED"]
    seqs = [e["seq"] for e in received]
    assert seqs == sorted(set(seqs))


def test_subscribe_unknown_job_raises(env):
    with pytest.raises(NotFound):
        list(env.pipeline.subscribe_progress("missing"))


def test_subscribe_rbac_foreign_student_forbidden(env):
    stranger = env.storage.structured.create_user("x2@x.io", "X", "h", {"student"})
    job_id, _ = env.pipeline.submit(env.user, env.course, env.rubric, corpus.f1_basic())
    with pytest.raises(Forbidden):
        list(env.pipeline.subscribe_progress(job_id, requester_user_id=stranger,
                                             requester_roles={"student"}))
    # the owner, a course teacher, and an admin may subscribe
    teacher = env.storage.structured.create_user("t@x.io", "T", "h", {"teacher"})
    env.storage.structured.assign_teacher(env.course, teacher)
    env.pipeline.worker_step(job_id)
    assert list(env.pipeline.subscribe_progress(job_id, requester_user_id=env.user,
                                                requester_roles={"student"}))
    assert list(env.pipeline.subscribe_progress(job_id, requester_user_id=teacher,
                                                requester_roles={"teacher"}))


def test_worker_pool_processes_queue(env):
    env.pipeline.start(worker_count=2)
    ids = [
        env.pipeline.submit(env.user, env.course, env.rubric, simple_deck([f"deck {i} text"]))[0]
        for i in range(6)
    ]
    deadline = time.time() + 30
    while time.time() < deadline:
        statuses = [env.storage.structured.get_job(j)["status"] for j in ids]
        if all(s == "COMPLETED" for s in statuses):
            break
        time.sleep(0.05)
    assert all(env.storage.structured.get_job(j)["status"] == "COMPLETED" for j in ids)


def test_fifo_per_user_order(env):
    """Jobs complete in submission order for a single user when one worker
    drains the queue."""
    ids = [
        env.pipeline.submit(env.user, env.course, env.rubric, simple_deck([f"fifo {i}"]))[0]
        for i in range(4)
    ]
    env.pipeline.start(worker_count=1)
    deadline = time.time() + 30
    while time.time() < deadline:
        if all(env.storage.structured.get_job(j)["status"] == "COMPLETED" for j in ids):
            break
        time.sleep(0.05)
    completion = [
        (env.storage.structured.get_job(j)["updated_at"], j) for j in ids
    ]
    assert [j for _, j in sorted(completion)] == ids


def test_requeue_after_worker_death_resumes_job(env):
    """A job claimed by a dead worker (expired lease) is re-leased and
    completes; no job is lost."""
    job_id, _ = env.pipeline.submit(env.user, env.course, env.rubric, corpus.f1_basic())
    # simulate a worker that claimed the job and died mid-extraction
    job = env.storage.structured.get_job(job_id)
    event = env.storage.structured.transition_job(
        job_id, job["version"], "EXTRACTING", lease_expires_at=time.time() + 0.05
    )
    assert event is not None
    time.sleep(0.1)  # lease expires
    # process restart: a fresh pipeline over the same persistent records
    pipeline = Pipeline(env.storage, env.pipeline.evaluator, CONFIG)
    assert pipeline.requeue_stale() == 1
    pipeline.start(worker_count=1)
    deadline = time.time() + 30
    while time.time() < deadline:
        if env.storage.structured.get_job(job_id)["status"] == "COMPLETED":
            break
        time.sleep(0.05)
    pipeline.stop()
    final = env.storage.structured.get_job(job_id)
    assert final["status"] == "COMPLETED"
    statuses = [e["status"] for e in env.storage.structured.job_events(job_id)]
    assert statuses == ["QUEUED", "EXTRACTING", "EVALUATING", "PERSISTING", "COMPLETED"]


def test_startup_rescan_picks_up_persisted_queued_jobs(env):
    job_id, _ = env.pipeline.submit(env.user, env.course, env.rubric, corpus.f1_basic())
    # a fresh pipeline over the same storage (process restart)
    fresh = Pipeline(env.storage, env.pipeline.evaluator, CONFIG)
    assert fresh.requeue_stale() == 1
    fresh.start(worker_count=1)
    deadline = time.time() + 30
    while time.time() < deadline:
        if env.storage.structured.get_job(job_id)["status"] == "COMPLETED":
            break
        time.sleep(0.05)
    fresh.stop()
    assert env.storage.structured.get_job(job_id)["status"] == "COMPLETED"


def test_active_lease_blocks_duplicate_claim(env):
    job_id, _ = env.pipeline.submit(env.user, env.course, env.rubric, corpus.f1_basic())
    job = env.storage.structured.get_job(job_id)
    env.storage.structured.transition_job(
        job_id, job["version"], "EXTRACTING", lease_expires_at=time.time() + 900
    )
    assert env.pipeline._claim(job_id) is False  # lease still fresh


def test_job_record_shape_matches_contract(env):
    job_id, _ = env.pipeline.submit(env.user, env.course, env.rubric, corpus.f1_basic())
    env.pipeline.worker_step(job_id)
    job = env.storage.structured.get_job(job_id)
    for field in ("job_id", "user_id", "course_id", "rubric_snapshot_id", "source_hash",
                  "status", "created_at", "updated_at"):
        assert field in job
    evaluation = env.storage.get_evaluation(job_id)
    summary = evaluation["summary"]
    assert set(summary["item_scores"]) == {"i1", "i2", "i3", "i4"}
    assert 20.0 <= summary["percentage"] <= 100.0
    meta = evaluation["provider_meta"]
    assert meta["repair_attempts"] == 0
    assert meta["cost_usd"] >= 0.0
    json.dumps(evaluation)  # JSON-serializable end to end
