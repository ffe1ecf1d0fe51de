"""Strict JSON wire schema for evaluation responses, with salvage parsing.

The demanded structure is::

    {"schema": 1,
     "items": [{"item_id": str, "score": int 1..5,
                "feedback": {"es": str, "en": str}}],
     "general": {"es": {"strengths": str, "improvements": str, "actions": str},
                 "en": {...}}}

``validate_response`` parses strictly first (no trailing text), then makes
one salvage pass extracting the largest balanced JSON object before
declaring failure. It never raises on arbitrary input; it returns the
parsed candidate (or None) plus a structured error list that is fed
verbatim into repair prompts.
"""

from __future__ import annotations

import json
from typing import Optional

from ..rubric import LIKERT_MAX, LIKERT_MIN, Rubric

RESPONSE_SCHEMA_VERSION = 1
LOCALES = ("es", "en")
GENERAL_FIELDS = ("strengths", "improvements", "actions")

# Error-string prefix marking item-coverage problems (vs structural ones).
COVERAGE_PREFIX = "items coverage: "


def first_balanced_object(text: str) -> Optional[str]:
    """The first balanced ``{...}`` span in ``text``, string-aware."""
    start = text.find("{")
    if start < 0:
        return None
    depth = 0
    in_string = False
    escaped = False
    for j in range(start, len(text)):
        ch = text[j]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : j + 1]
    return None


def extract_balanced_object(text: str) -> Optional[str]:
    """The largest balanced ``{...}`` span in ``text``, string-aware."""
    best: Optional[str] = None
    i, n = 0, len(text)
    while i < n:
        if text[i] != "{":
            i += 1
            continue
        depth = 0
        in_string = False
        escaped = False
        for j in range(i, n):
            ch = text[j]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    span = text[i : j + 1]
                    if best is None or len(span) > len(best):
                        best = span
                    break
        i += 1
    return best


def _parse(raw: str) -> tuple[Optional[dict], Optional[str]]:
    try:
        value = json.loads(raw)
        if isinstance(value, dict):
            return value, None
        return None, f"top-level JSON value must be an object, got {type(value).__name__}"
    except (json.JSONDecodeError, RecursionError) as exc:
        first_error = f"not valid JSON: {exc}"
    salvaged = extract_balanced_object(raw)
    if salvaged is not None:
        try:
            value = json.loads(salvaged)
            if isinstance(value, dict):
                return value, None
        except (json.JSONDecodeError, RecursionError):
            pass
    return None, first_error


def _check_nonempty_str(value, path: str, errors: list[str]) -> None:
    if not isinstance(value, str) or not value.strip():
        errors.append(f"{path}: missing or empty string")


def validate_response(raw, rubric: Rubric) -> tuple[Optional[dict], list[str]]:
    """Validate provider output against the wire schema and the rubric's items.

    Returns (candidate, errors); candidate is the parsed object when JSON
    parsing succeeded (even if structurally invalid), errors is empty iff
    the candidate fully conforms.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8", errors="replace")
    if not isinstance(raw, str):
        return None, ["response must be a string"]

    candidate, parse_error = _parse(raw)
    if candidate is None:
        return None, [parse_error or "not valid JSON"]

    errors: list[str] = []
    if candidate.get("schema") != RESPONSE_SCHEMA_VERSION:
        errors.append(f"schema: must be the integer {RESPONSE_SCHEMA_VERSION}")

    items = candidate.get("items")
    seen_ids: list[str] = []
    if not isinstance(items, list):
        errors.append("items: missing or not a list")
    else:
        for pos, entry in enumerate(items):
            path = f"items[{pos}]"
            if not isinstance(entry, dict):
                errors.append(f"{path}: must be an object")
                continue
            item_id = entry.get("item_id")
            if not isinstance(item_id, str) or not item_id:
                errors.append(f"{path}.item_id: missing or empty")
            else:
                seen_ids.append(item_id)
            score = entry.get("score")
            if isinstance(score, bool) or not isinstance(score, int):
                errors.append(f"{path}.score: must be an integer")
            elif not LIKERT_MIN <= score <= LIKERT_MAX:
                errors.append(f"{path}.score: out of range [{LIKERT_MIN},{LIKERT_MAX}]")
            feedback = entry.get("feedback")
            if not isinstance(feedback, dict):
                errors.append(f"{path}.feedback: missing or not an object")
            else:
                for locale in LOCALES:
                    _check_nonempty_str(feedback.get(locale), f"{path}.feedback.{locale}", errors)

        expected = [item.item_id for item in rubric.items]
        for item_id in expected:
            if item_id not in seen_ids:
                errors.append(f"{COVERAGE_PREFIX}missing item_id {item_id!r}")
        counts: dict[str, int] = {}
        for item_id in seen_ids:
            counts[item_id] = counts.get(item_id, 0) + 1
        for item_id, count in counts.items():
            if item_id not in expected:
                errors.append(f"{COVERAGE_PREFIX}unknown item_id {item_id!r}")
            elif count > 1:
                errors.append(f"{COVERAGE_PREFIX}item_id {item_id!r} appears {count} times")

    general = candidate.get("general")
    if not isinstance(general, dict):
        errors.append("general: missing or not an object")
    else:
        for locale in LOCALES:
            block = general.get(locale)
            if not isinstance(block, dict):
                errors.append(f"general.{locale}: missing or not an object")
                continue
            for fieldname in GENERAL_FIELDS:
                _check_nonempty_str(block.get(fieldname), f"general.{locale}.{fieldname}", errors)

    return candidate, errors


def coverage_only(errors: list[str]) -> bool:
    """True when every validation error is an item-coverage error."""
    return bool(errors) and all(e.startswith(COVERAGE_PREFIX) for e in errors)
