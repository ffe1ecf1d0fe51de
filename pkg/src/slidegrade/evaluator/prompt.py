"""Five-block prompt assembly: system role, calculation rules, input data,
expected output schema, strict output constraints.

The rendered prompt is a pure function of the rubric snapshot and the
canonical feature JSON, so identical inputs yield identical prompts (and
stable token estimates).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..features.extract import DeckFeatures
from ..jsonutil import canonical_json
from ..rubric import LIKERT_MAX, LIKERT_MIN, Rubric, rubric_to_dict

BLOCK_TITLES = (
    "System Role",
    "Calculation Rules",
    "Input Data",
    "Expected Output JSON Schema",
    "Strict Output Constraints",
)

CHARS_PER_TOKEN = 4  # estimate only; real counts come from provider usage


@dataclass(frozen=True)
class PromptBundle:
    system_role: str
    calculation_rules: str
    input_data: str
    output_schema: str
    strict_constraints: str
    rendered: str
    input_token_estimate: int


def _schema_text(rubric: Rubric, locale_pair: tuple[str, str]) -> str:
    lo, hi = locale_pair
    item_lines = ",\n".join(
        f'    {{"item_id": "{item.item_id}", "score": "<integer {LIKERT_MIN}-{LIKERT_MAX}>", '
        f'"feedback": {{"{lo}": "<string>", "{hi}": "<string>"}}}}'
        for item in rubric.items
    )
    general = (
        f'"{lo}": {{"strengths": "<string>", "improvements": "<string>", "actions": "<string>"}},\n'
        f'    "{hi}": {{"strengths": "<string>", "improvements": "<string>", "actions": "<string>"}}'
    )
    return (
        "{\n"
        '  "schema": 1,\n'
        '  "items": [\n' + item_lines + "\n  ],\n"
        '  "general": {\n    ' + general + "\n  }\n"
        "}"
    )


def build_prompt(
    rubric: Rubric,
    features: DeckFeatures | dict,
    locale_pair: tuple[str, str] = ("es", "en"),
) -> PromptBundle:
    """Assemble the deterministic five-block prompt for one evaluation."""
    features_dict = features.to_dict() if isinstance(features, DeckFeatures) else features
    lo, hi = locale_pair

    system_role = (
        "You are an expert university evaluator in presentation assessment. "
        "You assess student slide decks against the teacher's rubric, strictly, "
        "fairly, and with actionable pedagogy."
    )
    calculation_rules = (
        f"Score every rubric item with an integer from {LIKERT_MIN} (worst) to {LIKERT_MAX} (best), "
        "matching the item's level descriptors.\n"
        "The backend recomputes all aggregates with these formulas; do not include aggregates:\n"
        "  overall_score = sum(weight_i * score_i) / sum(weight_i)\n"
        f"  percentage = overall_score / {LIKERT_MAX} * 100\n"
        f"Write every feedback field twice, in locales '{lo}' and '{hi}'.\n"
        "General feedback has three paragraphs: strengths, areas for improvement, "
        "and concrete actions to enhance the slides. Item feedback explains how to "
        "improve that specific criterion."
    )
    input_data = (
        "RUBRIC:\n"
        + canonical_json(rubric_to_dict(rubric))
        + "\nFEATURES:\n"
        + canonical_json(features_dict)
    )
    output_schema = _schema_text(rubric, locale_pair)
    strict_constraints = (
        "Return exactly one JSON object conforming to the schema above. "
        "No prose, no markdown fences, no comments, no trailing text. "
        "Scores are bare integers. All feedback strings must be non-empty."
    )

    blocks = (system_role, calculation_rules, input_data, output_schema, strict_constraints)
    rendered = "\n\n".join(
        f"## {title}\n{body}" for title, body in zip(BLOCK_TITLES, blocks)
    )
    return PromptBundle(
        system_role=system_role,
        calculation_rules=calculation_rules,
        input_data=input_data,
        output_schema=output_schema,
        strict_constraints=strict_constraints,
        rendered=rendered,
        input_token_estimate=len(rendered) // CHARS_PER_TOKEN,
    )
