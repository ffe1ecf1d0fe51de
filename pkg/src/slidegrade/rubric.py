"""Rubrics: teacher-defined 5-point Likert criteria and the scoring math.

This module owns the aggregate arithmetic. Everything downstream (the
evaluator, the API, the UI) treats these numbers as authoritative and
never recomputes them elsewhere.

Aggregation: overall = sum(weight_i * score_i) / sum(weight_i), and
percentage = overall / 5 * 100. With the minimum item score of 1 the
percentage floor is 20, kept deliberately so displayed percentages stay
consistent with the Likert semantics.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping

from .errors import MissingItemScore, ScoreOutOfRange, UnknownItemScore

RUBRIC_SCHEMA_VERSION = 1
LIKERT_MIN, LIKERT_MAX = 1, 5
DESCRIPTORS_PER_ITEM = 5
MAX_ITEMS = 50


@dataclass(frozen=True)
class RubricItem:
    item_id: str
    criterion: str
    level_descriptors: tuple[str, ...]   # exactly 5, worst (1) to best (5)
    weight: float = 1.0


@dataclass(frozen=True)
class Rubric:
    rubric_id: str
    course_id: str
    title: str
    items: tuple[RubricItem, ...]
    locale_default: str = "es"


@dataclass(frozen=True)
class ScoreSummary:
    item_scores: dict
    overall_score: float        # unrounded
    percentage: float           # unrounded, in [20, 100]

    @property
    def overall_display(self) -> float:
        return round_half_up(self.overall_score, 2)

    @property
    def percentage_display(self) -> float:
        return round_half_up(self.percentage, 2)

    def to_dict(self) -> dict:
        return {
            "item_scores": dict(sorted(self.item_scores.items())),
            "overall_score": self.overall_display,
            "percentage": self.percentage_display,
        }


def round_half_up(value: float, places: int) -> float:
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def validate_rubric(rubric: Rubric) -> list[str]:
    """Field-level validation errors; an empty list means the rubric is valid."""
    errors: list[str] = []
    if not rubric.title or not rubric.title.strip():
        errors.append("title must be non-empty")
    if rubric.locale_default not in ("es", "en"):
        errors.append("locale_default must be 'es' or 'en'")
    if not rubric.items:
        errors.append("rubric must have at least one item")
    if len(rubric.items) > MAX_ITEMS:
        errors.append(f"rubric must have at most {MAX_ITEMS} items")
    seen: set[str] = set()
    for pos, item in enumerate(rubric.items):
        where = f"item {pos + 1}"
        if not item.item_id:
            errors.append(f"{where}: empty item id")
        elif item.item_id in seen:
            errors.append(f"{where}: duplicate item id {item.item_id!r}")
        seen.add(item.item_id)
        if not item.criterion or not item.criterion.strip():
            errors.append(f"{where}: criterion must be non-empty")
        if len(item.level_descriptors) != DESCRIPTORS_PER_ITEM:
            errors.append(f"{where}: item must have exactly 5 level descriptors")
        elif any(not d.strip() for d in item.level_descriptors):
            errors.append(f"{where}: level descriptors must be non-empty")
        if not (item.weight > 0):
            errors.append(f"{where}: weight must be > 0")
    return errors


def aggregate(rubric: Rubric, item_scores: Mapping[str, int]) -> ScoreSummary:
    """Weighted-mean summary over exactly the rubric's items.

    Raises MissingItemScore / UnknownItemScore on coverage gaps and
    ScoreOutOfRange for non-integer or out-of-band scores.
    """
    item_ids = {item.item_id for item in rubric.items}
    for item_id in item_scores:
        if item_id not in item_ids:
            raise UnknownItemScore(item_id)
    weighted_sum = 0.0
    weight_sum = 0.0
    for item in rubric.items:
        if item.item_id not in item_scores:
            raise MissingItemScore(item.item_id)
        score = item_scores[item.item_id]
        if isinstance(score, bool) or not isinstance(score, int):
            raise ScoreOutOfRange(item.item_id, score)
        if not LIKERT_MIN <= score <= LIKERT_MAX:
            raise ScoreOutOfRange(item.item_id, score)
        weighted_sum += item.weight * score
        weight_sum += item.weight
    overall = weighted_sum / weight_sum
    return ScoreSummary(
        item_scores=dict(item_scores),
        overall_score=overall,
        percentage=overall / LIKERT_MAX * 100.0,
    )


# --- JSON wire form (versioned; shared by the API, importer and prompts) ----

def rubric_to_dict(rubric: Rubric) -> dict:
    return {
        "rubric_schema": RUBRIC_SCHEMA_VERSION,
        "rubric_id": rubric.rubric_id,
        "course_id": rubric.course_id,
        "title": rubric.title,
        "locale_default": rubric.locale_default,
        "items": [
            {
                "item_id": item.item_id,
                "criterion": item.criterion,
                "level_descriptors": list(item.level_descriptors),
                "weight": item.weight,
            }
            for item in rubric.items
        ],
    }


def rubric_from_dict(doc: Mapping) -> Rubric:
    items = tuple(
        RubricItem(
            item_id=str(raw["item_id"]),
            criterion=str(raw["criterion"]),
            level_descriptors=tuple(str(d) for d in raw["level_descriptors"]),
            weight=float(raw.get("weight", 1.0)),
        )
        for raw in doc.get("items", [])
    )
    return Rubric(
        rubric_id=str(doc.get("rubric_id") or uuid.uuid4().hex),
        course_id=str(doc.get("course_id", "")),
        title=str(doc.get("title", "")),
        items=items,
        locale_default=str(doc.get("locale_default", "es")),
    )
