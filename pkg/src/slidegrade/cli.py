"""Command-line front door.

Machine output (feature JSON, evaluation JSON, reports) goes to stdout;
human diagnostics go to stderr. Exit codes: 0 ok, 1 domain error, 2 usage
error. ``SLIDEGRADE_CONFIG`` (or ``--config``) points at the flat JSON
config file; flags override env which overrides the file.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import AppConfig, load_config
from .errors import SlidegradeError


def _fail(exc: SlidegradeError) -> None:
    click.echo(f"{exc.code}: {exc.message}", err=True)
    sys.exit(1)


def _load(config_path: str | None, **overrides) -> AppConfig:
    try:
        return load_config(config_path, overrides={k: v for k, v in overrides.items()})
    except SlidegradeError as exc:
        _fail(exc)
        raise AssertionError("unreachable")


def _read_file(path: str) -> bytes:
    p = Path(path)
    if not p.is_file():
        click.echo(f"NotFound: no such file: {path}", err=True)
        sys.exit(1)
    return p.read_bytes()


@click.group()
@click.option("--config", "config_path", type=str, default=None, help="Path to the JSON config file.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None):
    """Rubric-based scoring and bilingual feedback for slide decks."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@main.command()
@click.option("--host", type=str, default=None)
@click.option("--port", type=int, default=None)
@click.option("--mock", is_flag=True, default=False, help="Use the deterministic mock provider.")
@click.pass_context
def serve(ctx, host, port, mock):
    """Run the API server until interrupted."""
    import logging

    import uvicorn

    from .api.app import create_app
    from .api.services import create_services
    from .evaluator.providers import MockProvider

    config = _load(ctx.obj["config_path"], bind_host=host, bind_port=port)
    if config.audit_log_path:
        handler = logging.FileHandler(config.audit_log_path)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logging.getLogger("slidegrade.audit").addHandler(handler)
    services = create_services(config, provider=MockProvider() if mock else None)
    services.pipeline.start()
    app = create_app(services=services)
    try:
        uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_level="info")
    finally:
        services.close()


@main.command()
@click.argument("pptx", type=str)
@click.option("--json", "as_json", is_flag=True, default=False,
              help="Print the canonical feature JSON.")
@click.pass_context
def extract(ctx, pptx, as_json):
    """Extract deck features offline."""
    from .deck.parser import parse_deck
    from .features.extract import extract_features

    config = _load(ctx.obj["config_path"])
    data = _read_file(pptx)
    try:
        deck = parse_deck(data, config)
        features = extract_features(deck, config)
    except SlidegradeError as exc:
        _fail(exc)
        return
    if as_json:
        click.echo(features.to_canonical_json())
    else:
        totals = features.totals
        click.echo(
            f"slides={totals.slide_count} words={totals.word_total} "
            f"images={totals.image_total} references={totals.reference_total} "
            f"numbered={'yes' if features.all_slides_numbered else 'no'}"
        )


@main.command()
@click.argument("pptx", type=str)
@click.option("--rubric", "rubric_path", required=True, type=str,
              help="Rubric JSON file (rubric_schema 1).")
@click.option("--mock", is_flag=True, default=False, help="Use the deterministic mock provider.")
@click.pass_context
def evaluate(ctx, pptx, rubric_path, mock):
    """Evaluate a deck against a rubric; prints the evaluation JSON."""
    from .deck.parser import parse_deck
    from .evaluator.evaluate import Evaluator
    from .evaluator.providers import ProviderConfig, make_provider
    from .features.extract import extract_features
    from .rubric import rubric_from_dict, validate_rubric

    config = _load(ctx.obj["config_path"])
    data = _read_file(pptx)
    try:
        rubric_doc = json.loads(_read_file(rubric_path).decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        click.echo(f"InvalidRubric: rubric file is not valid JSON: {exc}", err=True)
        sys.exit(1)
    rubric = rubric_from_dict(rubric_doc)
    problems = validate_rubric(rubric)
    if problems:
        click.echo("InvalidRubric: " + "; ".join(problems), err=True)
        sys.exit(1)
    try:
        deck = parse_deck(data, config)
        features = extract_features(deck, config)
        provider = make_provider(config, mock=mock)
        evaluator = Evaluator(provider, ProviderConfig.from_app_config(config),
                              concurrency=config.provider_concurrency)
        result = evaluator.evaluate(features, rubric)
    except SlidegradeError as exc:
        _fail(exc)
        return
    click.echo(json.dumps(result.to_dict(), sort_keys=True, ensure_ascii=False))


@main.command(name="import")
@click.argument("file", type=str)
@click.option("--kind", required=True,
              type=click.Choice(["students", "courses", "rubrics"]))
@click.pass_context
def import_cmd(ctx, file, kind):
    """Import a students/courses/rubrics sheet (CSV or XLSX) into the store."""
    from .api.imports import import_sheet
    from .store.base import Storage

    config = _load(ctx.obj["config_path"])
    data = _read_file(file)
    storage = Storage.open(config.data_dir, config)
    try:
        report = import_sheet(storage, data, kind, filename=file, config=config)
    except SlidegradeError as exc:
        _fail(exc)
        return
    finally:
        storage.close()
    click.echo(json.dumps(report, sort_keys=True, ensure_ascii=False))
    if not report["applied"]:
        sys.exit(1)


@main.command()
@click.argument("target_dir", type=str)
@click.pass_context
def export(ctx, target_dir):
    """Write a portable archive (JSON lines + blobs) of the store."""
    from .store.base import Storage

    config = _load(ctx.obj["config_path"])
    storage = Storage.open(config.data_dir, config)
    try:
        manifest = storage.export_archive(target_dir)
    except SlidegradeError as exc:
        _fail(exc)
        return
    finally:
        storage.close()
    click.echo(json.dumps(manifest, sort_keys=True))


if __name__ == "__main__":
    main()
