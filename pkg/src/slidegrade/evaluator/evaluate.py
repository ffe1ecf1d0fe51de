"""Evaluation driver: prompt, call, validate, repair, recompute, account.

Provider-claimed aggregates are never trusted; the summary is recomputed
locally from the item scores ("trust but recompute"). Repair round-trips
re-send the validator's error list together with the expected schema, at
most ``max_repair_attempts`` times.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Optional

from ..errors import ItemCoverageMismatch, SchemaInvalidAfterRepairs
from ..features.extract import DeckFeatures
from ..rubric import Rubric, ScoreSummary, aggregate
from .prompt import PromptBundle, build_prompt
from .providers import Provider, ProviderConfig
from .schema import coverage_only, validate_response


@dataclass(frozen=True)
class ItemResult:
    item_id: str
    score: int
    feedback_es: str
    feedback_en: str


@dataclass(frozen=True)
class ProviderMeta:
    model_name: str
    input_tokens: int
    output_tokens: int
    cost_usd: float
    latency_ms: int
    repair_attempts: int


@dataclass(frozen=True)
class EvaluationResult:
    item_results: tuple[ItemResult, ...]
    general_feedback: dict           # {"es": {...}, "en": {...}}
    summary: ScoreSummary            # recomputed locally, never provider-claimed
    provider_meta: ProviderMeta

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "items": [
                {
                    "item_id": r.item_id,
                    "score": r.score,
                    "feedback": {"es": r.feedback_es, "en": r.feedback_en},
                }
                for r in self.item_results
            ],
            "general": self.general_feedback,
            "summary": self.summary.to_dict(),
            "provider_meta": {
                "model_name": self.provider_meta.model_name,
                "input_tokens": self.provider_meta.input_tokens,
                "output_tokens": self.provider_meta.output_tokens,
                "cost_usd": self.provider_meta.cost_usd,
                "latency_ms": self.provider_meta.latency_ms,
                "repair_attempts": self.provider_meta.repair_attempts,
            },
        }


def account_cost(input_tokens: int, output_tokens: int, config: ProviderConfig) -> float:
    """cost = input/1000 * price_in + output/1000 * price_out."""
    return (
        input_tokens / 1000.0 * config.price_per_1k_input_usd
        + output_tokens / 1000.0 * config.price_per_1k_output_usd
    )


def _repair_message(errors: list[str], schema_text: str) -> str:
    listed = "\n".join(f"- {e}" for e in errors)
    return (
        "Your previous reply failed validation with these errors:\n"
        f"{listed}\n\n"
        "Reply again with exactly one JSON object conforming to this schema, "
        "nothing else:\n"
        f"{schema_text}"
    )


class Evaluator:
    """Runs evaluations against one provider with a shared concurrency cap."""

    def __init__(self, provider: Provider, config: ProviderConfig, concurrency: int = 4):
        self.provider = provider
        self.config = config
        self._semaphore = threading.BoundedSemaphore(max(1, concurrency))

    def evaluate(self, features: DeckFeatures | dict, rubric: Rubric) -> EvaluationResult:
        return evaluate(features, rubric, self.provider, self.config, self._semaphore)


def evaluate(
    features: DeckFeatures | dict,
    rubric: Rubric,
    provider: Provider,
    config: ProviderConfig,
    semaphore: Optional[threading.BoundedSemaphore] = None,
) -> EvaluationResult:
    """One full evaluation; raises the typed provider/schema errors."""
    bundle: PromptBundle = build_prompt(rubric, features)
    messages = [{"role": "user", "content": bundle.rendered}]

    input_tokens = 0
    output_tokens = 0
    latency_ms = 0
    errors: list[str] = []
    max_rounds = 1 + max(0, config.max_repair_attempts)

    for round_index in range(max_rounds):
        started = time.monotonic()
        if semaphore is not None:
            with semaphore:
                reply = provider.complete(messages)
        else:
            reply = provider.complete(messages)
        latency_ms += int((time.monotonic() - started) * 1000)
        if reply.input_tokens is not None:
            input_tokens += reply.input_tokens
        if reply.output_tokens is not None:
            output_tokens += reply.output_tokens

        candidate, errors = validate_response(reply.text, rubric)
        if not errors:
            assert candidate is not None
            return _build_result(
                candidate,
                rubric,
                model_name=reply.model_name,
                input_tokens=input_tokens,
                output_tokens=output_tokens,
                cost_usd=account_cost(input_tokens, output_tokens, config),
                latency_ms=latency_ms,
                repair_attempts=round_index,
            )
        if round_index + 1 < max_rounds:
            messages = messages + [
                {"role": "assistant", "content": reply.text},
                {"role": "user", "content": _repair_message(errors, bundle.output_schema)},
            ]

    attempts = max_rounds - 1
    if coverage_only(errors):
        raise ItemCoverageMismatch(attempts, errors)
    raise SchemaInvalidAfterRepairs(attempts, errors)


def _build_result(
    candidate: dict,
    rubric: Rubric,
    *,
    model_name: str,
    input_tokens: int,
    output_tokens: int,
    cost_usd: float,
    latency_ms: int,
    repair_attempts: int,
) -> EvaluationResult:
    by_id = {entry["item_id"]: entry for entry in candidate["items"]}
    item_results = tuple(
        ItemResult(
            item_id=item.item_id,
            score=by_id[item.item_id]["score"],
            feedback_es=by_id[item.item_id]["feedback"]["es"],
            feedback_en=by_id[item.item_id]["feedback"]["en"],
        )
        for item in rubric.items
    )
    summary = aggregate(rubric, {r.item_id: r.score for r in item_results})
    general = {
        locale: {
            "strengths": candidate["general"][locale]["strengths"],
            "improvements": candidate["general"][locale]["improvements"],
            "actions": candidate["general"][locale]["actions"],
        }
        for locale in ("es", "en")
    }
    return EvaluationResult(
        item_results=item_results,
        general_feedback=general,
        summary=summary,
        provider_meta=ProviderMeta(
            model_name=model_name,
            input_tokens=input_tokens,
            output_tokens=output_tokens,
            cost_usd=cost_usd,
            latency_ms=latency_ms,
            repair_attempts=repair_attempts,
        ),
    )
