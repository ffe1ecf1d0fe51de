"""CLI tests: extract/evaluate/import/export, exit codes, stdout contract."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

import corpus
from fixture_sheets import csv_bytes
from slidegrade.cli import main

DECKS = Path(__file__).parent / "decks"
GOLDENS = Path(__file__).parent / "goldens"


@pytest.fixture
def runner():
    return CliRunner()


def _config_file(tmp_path, **overrides) -> str:
    path = tmp_path / "config.json"
    base = {"data_dir": str(tmp_path / "data")}
    base.update(overrides)
    path.write_text(json.dumps(base))
    return str(path)


def test_extract_json_matches_golden(runner, tmp_path):
    result = runner.invoke(main, ["extract", str(DECKS / "f1.pptx"), "--json"])
    assert result.exit_code == 0, result.stderr
    golden = (GOLDENS / "f1.json").read_text(encoding="utf-8")
    assert result.stdout == golden


def test_extract_human_summary(runner):
    result = runner.invoke(main, ["extract", str(DECKS / "f1.pptx")])
    assert result.exit_code == 0
    assert "slides=3" in result.stdout
    assert "words=10" in result.stdout


def test_extract_missing_file_exit_1_names_path(runner):
    result = runner.invoke(main, ["extract", "missing.pptx"])
    assert result.exit_code == 1
    assert "missing.pptx" in result.stderr


def test_extract_not_a_deck_exit_1_typed_message(runner, tmp_path):
    bad = tmp_path / "junk.pptx"
    bad.write_bytes(b"hello")
    result = runner.invoke(main, ["extract", str(bad)])
    assert result.exit_code == 1
    assert result.stderr.startswith("NotAZipArchive:")


def test_usage_error_exit_2(runner):
    result = runner.invoke(main, ["extract"])  # missing argument
    assert result.exit_code == 2


def test_evaluate_mock_deterministic(runner, tmp_path):
    rubric_path = tmp_path / "rubric.json"
    rubric_path.write_text(json.dumps({
        "rubric_id": "r1", "course_id": "c1", "title": "CLI rubric",
        "locale_default": "es",
        "items": [
            {"item_id": f"i{k}", "criterion": f"Criterion {k}",
             "level_descriptors": ["1", "2", "3", "4", "5"], "weight": 1.0}
            for k in range(1, 5)
        ],
    }))
    args = ["evaluate", str(DECKS / "f1.pptx"), "--rubric", str(rubric_path), "--mock"]
    first = runner.invoke(main, args)
    assert first.exit_code == 0, first.stderr
    doc = json.loads(first.stdout)
    assert [item["score"] for item in doc["items"]] == [2, 2, 2, 2]
    assert doc["summary"]["percentage"] == 40.0
    second = runner.invoke(main, args)
    assert json.loads(second.stdout)["items"] == doc["items"]


def test_evaluate_invalid_rubric_exit_1(runner, tmp_path):
    rubric_path = tmp_path / "rubric.json"
    rubric_path.write_text(json.dumps({
        "title": "bad", "items": [
            {"item_id": "i1", "criterion": "c",
             "level_descriptors": ["only", "four", "levels", "x"], "weight": 1.0}
        ],
    }))
    result = runner.invoke(
        main, ["evaluate", str(DECKS / "f1.pptx"), "--rubric", str(rubric_path), "--mock"]
    )
    assert result.exit_code == 1
    assert "InvalidRubric" in result.stderr


def test_json_stdout_always_parses(runner, tmp_path):
    """stdout of --json commands is machine-consumable JSON, nothing else."""
    for deck in sorted(DECKS.glob("*.pptx")):
        result = runner.invoke(main, ["extract", str(deck), "--json"])
        assert result.exit_code == 0
        json.loads(result.stdout)


def test_import_and_export_roundtrip(runner, tmp_path):
    config = _config_file(tmp_path)
    courses = tmp_path / "courses.csv"
    courses.write_bytes(csv_bytes([["course_code", "title"], ["CLI100", "CLI Course"]]))
    result = runner.invoke(main, ["--config", config, "import", str(courses),
                                  "--kind", "courses"])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report["applied"] is True and report["created"] == 1

    students = tmp_path / "students.csv"
    students.write_bytes(csv_bytes([
        ["email", "display_name", "course_code"],
        ["cli@uni.edu", "CLI Student", "CLI100"],
    ]))
    result = runner.invoke(main, ["--config", config, "import", str(students),
                                  "--kind", "students"])
    assert result.exit_code == 0, result.stderr

    export_dir = tmp_path / "export"
    result = runner.invoke(main, ["--config", config, "export", str(export_dir)])
    assert result.exit_code == 0
    manifest = json.loads(result.stdout)
    assert manifest["counts"]["courses"] == 1
    assert (export_dir / "users.jsonl").exists()


def test_import_failed_sheet_exit_1(runner, tmp_path):
    config = _config_file(tmp_path)
    bad = tmp_path / "students.csv"
    bad.write_bytes(csv_bytes([
        ["email", "display_name", "course_code"],
        ["broken", "X", "NOPE"],
    ]))
    result = runner.invoke(main, ["--config", config, "import", str(bad),
                                  "--kind", "students"])
    assert result.exit_code == 1
    report = json.loads(result.stdout)
    assert report["applied"] is False


def test_unknown_config_key_rejected(runner, tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"data_dir": str(tmp_path), "no_such_key": 1}))
    result = runner.invoke(main, ["--config", str(path), "extract",
                                  str(DECKS / "f1.pptx")])
    assert result.exit_code == 1
    assert "no_such_key" in result.stderr


def test_config_env_and_flag_precedence(tmp_path, monkeypatch):
    from slidegrade.config import load_config

    path = tmp_path / "config.json"
    path.write_text(json.dumps({"bind_port": 1000, "provider_model": "from-file"}))
    env = {"SLIDEGRADE_BIND_PORT": "2000", "PROVIDER_MODEL": "from-env"}
    config = load_config(str(path), env=env)
    assert config.bind_port == 2000           # env beats file
    assert config.provider_model == "from-env"  # documented bare alias works
    config = load_config(str(path), env=env, overrides={"bind_port": 3000})
    assert config.bind_port == 3000           # flag beats env
