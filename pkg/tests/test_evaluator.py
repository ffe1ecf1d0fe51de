"""Evaluator tests: prompt assembly, response validation, repair loop,
mock determinism and cost accounting."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import corpus
from slidegrade.config import AppConfig
from slidegrade.deck.parser import parse_deck
from slidegrade.errors import ItemCoverageMismatch, ProviderUnreachable, SchemaInvalidAfterRepairs
from slidegrade.evaluator.evaluate import Evaluator, account_cost, evaluate
from slidegrade.evaluator.prompt import BLOCK_TITLES, build_prompt
from slidegrade.evaluator.providers import MockProvider, ProviderConfig, ScriptedProvider
from slidegrade.evaluator.schema import extract_balanced_object, validate_response
from slidegrade.features.extract import extract_features
from test_rubric import make_rubric

CONFIG = ProviderConfig.from_app_config(AppConfig())


def features_f1():
    return extract_features(parse_deck(corpus.f1_basic()))


def valid_payload(rubric, score=4):
    return {
        "schema": 1,
        "items": [
            {
                "item_id": item.item_id,
                "score": score,
                "feedback": {"es": f"es {item.item_id}", "en": f"en {item.item_id}"},
            }
            for item in rubric.items
        ],
        "general": {
            "es": {"strengths": "s", "improvements": "i", "actions": "a"},
            "en": {"strengths": "s", "improvements": "i", "actions": "a"},
        },
    }


# --- prompt ------------------------------------------------------------------

def test_prompt_contains_all_five_blocks_once_in_order():
    bundle = build_prompt(make_rubric([1.0] * 4), features_f1())
    positions = [bundle.rendered.find(f"## {title}") for title in BLOCK_TITLES]
    assert all(p >= 0 for p in positions)
    assert positions == sorted(positions)
    for title in BLOCK_TITLES:
        assert bundle.rendered.count(f"## {title}") == 1


def test_prompt_is_deterministic():
    rubric = make_rubric([1.0, 2.0])
    feats = features_f1()
    assert build_prompt(rubric, feats).rendered == build_prompt(rubric, feats).rendered


def test_output_schema_lists_exactly_one_slot_per_item():
    rubric = make_rubric([1.0] * 4)
    bundle = build_prompt(rubric, features_f1())
    assert bundle.output_schema.count('"item_id"') == 4
    for item in rubric.items:
        assert f'"{item.item_id}"' in bundle.output_schema


def test_prompt_renders_for_minimal_deck():
    from fixture_decks import SlideSpec, build_pptx

    feats = extract_features(parse_deck(build_pptx([SlideSpec(shapes=[])])))
    assert feats.totals.word_total == 0
    bundle = build_prompt(make_rubric([1.0]), feats)
    for title in BLOCK_TITLES:
        assert f"## {title}" in bundle.rendered


def test_prompt_embeds_evaluator_persona_and_formulas():
    bundle = build_prompt(make_rubric([1.0]), features_f1())
    assert "expert university evaluator in presentation assessment" in bundle.system_role
    assert "sum(weight_i * score_i) / sum(weight_i)" in bundle.calculation_rules
    assert "overall_score / 5 * 100" in bundle.calculation_rules


def test_token_estimate_is_chars_over_four():
    bundle = build_prompt(make_rubric([1.0]), features_f1())
    assert bundle.input_token_estimate == len(bundle.rendered) // 4


# --- validate_response ----------------------------------------------------------

def test_exact_conformant_json_accepted():
    rubric = make_rubric([1.0] * 3)
    candidate, errors = validate_response(json.dumps(valid_payload(rubric)), rubric)
    assert errors == []
    assert candidate["schema"] == 1


def test_score_out_of_range_flagged():
    rubric = make_rubric([1.0])
    payload = valid_payload(rubric)
    payload["items"][0]["score"] = 6
    _, errors = validate_response(json.dumps(payload), rubric)
    assert any("out of range [1,5]" in e for e in errors)


def test_missing_spanish_general_feedback_named_by_path():
    rubric = make_rubric([1.0])
    payload = valid_payload(rubric)
    del payload["general"]["es"]["strengths"]
    _, errors = validate_response(json.dumps(payload), rubric)
    assert any("general.es.strengths" in e for e in errors)


def test_prose_wrapped_json_salvaged():
    rubric = make_rubric([1.0])
    raw = "Sure! Here is the evaluation:\n" + json.dumps(valid_payload(rubric)) + "\nHope it helps."
    candidate, errors = validate_response(raw, rubric)
    assert errors == []
    assert candidate is not None


def test_truncated_json_rejected():
    rubric = make_rubric([1.0])
    raw = json.dumps(valid_payload(rubric))[:40]
    candidate, errors = validate_response(raw, rubric)
    assert candidate is None
    assert errors and "not valid JSON" in errors[0]


def test_duplicate_and_unknown_items_flagged():
    rubric = make_rubric([1.0, 1.0])
    payload = valid_payload(rubric)
    payload["items"].append(payload["items"][0])
    payload["items"].append(
        {"item_id": "ghost", "score": 3, "feedback": {"es": "x", "en": "y"}}
    )
    _, errors = validate_response(json.dumps(payload), rubric)
    assert any("appears 2 times" in e for e in errors)
    assert any("unknown item_id 'ghost'" in e for e in errors)


def test_boolean_score_rejected():
    rubric = make_rubric([1.0])
    payload = valid_payload(rubric)
    payload["items"][0]["score"] = True
    _, errors = validate_response(json.dumps(payload), rubric)
    assert any("must be an integer" in e for e in errors)


def test_validation_idempotent_on_serialized_candidate():
    rubric = make_rubric([1.0, 1.0])
    raw = json.dumps(valid_payload(rubric))
    candidate, errors = validate_response(raw, rubric)
    assert errors == []
    again, errors2 = validate_response(json.dumps(candidate), rubric)
    assert errors2 == []
    assert again == candidate


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=512))
def test_fuzz_validate_never_crashes_on_bytes(raw):
    candidate, errors = validate_response(raw, make_rubric([1.0]))
    assert isinstance(errors, list)
    assert candidate is None or isinstance(candidate, dict)


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=512))
def test_fuzz_validate_never_crashes_on_text(raw):
    candidate, errors = validate_response(raw, make_rubric([1.0]))
    assert isinstance(errors, list)


def test_balanced_object_extractor_respects_strings():
    text = 'junk {"a": "closing } inside", "b": {"c": 1}} trailing'
    span = extract_balanced_object(text)
    assert json.loads(span) == {"a": "closing } inside", "b": {"c": 1}}


# --- evaluate loop ----------------------------------------------------------------

def test_mock_evaluation_is_deterministic_and_recomputed():
    rubric = make_rubric([1.0] * 4)
    feats = features_f1()
    result = evaluate(feats, rubric, MockProvider(), CONFIG)
    # mock rule: clamp(1,5, 1 + (10 % 50)//10 + 0) = 2 for F1 (10 words, unnumbered)
    assert [r.score for r in result.item_results] == [2, 2, 2, 2]
    assert result.summary.overall_score == 2.0
    assert result.summary.percentage == 40.0
    assert result.provider_meta.repair_attempts == 0
    again = evaluate(feats, rubric, MockProvider(), CONFIG)
    assert [r.score for r in again.item_results] == [r.score for r in result.item_results]
    assert again.general_feedback == result.general_feedback


def test_mock_scores_numbered_deck_higher():
    rubric = make_rubric([1.0] * 4)
    feats = extract_features(parse_deck(corpus.f3_numbers()))
    # word_total 8, numbered: clamp(1,5, 1 + 0 + 1) = 2
    result = evaluate(feats, rubric, MockProvider(), CONFIG)
    assert [r.score for r in result.item_results] == [2, 2, 2, 2]


def test_summary_recomputed_not_trusted():
    rubric = make_rubric([1.0] * 4)
    payload = valid_payload(rubric)
    for entry, score in zip(payload["items"], (5, 5, 4, 5)):
        entry["score"] = score
    payload["summary"] = {"overall_score": 1.0, "percentage": 20.0}  # provider lies
    provider = ScriptedProvider([json.dumps(payload)])
    result = evaluate(features_f1(), rubric, provider, CONFIG)
    assert result.summary.percentage == 95.0
    assert result.summary.overall_score == 4.75


def test_repair_roundtrip_includes_errors_and_schema():
    rubric = make_rubric([1.0])
    bad = valid_payload(rubric)
    bad["items"][0]["score"] = 9
    provider = ScriptedProvider([json.dumps(bad), json.dumps(valid_payload(rubric))])
    result = evaluate(features_f1(), rubric, provider, CONFIG)
    assert result.provider_meta.repair_attempts == 1
    assert len(provider.calls) == 2
    repair_prompt = provider.calls[1][-1]["content"]
    assert "out of range [1,5]" in repair_prompt
    assert '"schema": 1' in repair_prompt


def test_irreparable_output_fails_after_exactly_two_repairs():
    rubric = make_rubric([1.0])
    provider = ScriptedProvider(["garbage", "more garbage", "still garbage", "never seen"])
    with pytest.raises(SchemaInvalidAfterRepairs) as exc_info:
        evaluate(features_f1(), rubric, provider, CONFIG)
    assert exc_info.value.attempts == 2
    assert len(provider.calls) == 3  # 1 + max_repair_attempts
    assert exc_info.value.last_errors


def test_repair_budget_zero_disables_repairs():
    rubric = make_rubric([1.0])
    config = ProviderConfig.from_app_config(AppConfig(max_repair_attempts=0))
    provider = ScriptedProvider(["garbage", json.dumps(valid_payload(rubric))])
    with pytest.raises(SchemaInvalidAfterRepairs):
        evaluate(features_f1(), rubric, provider, config)
    assert len(provider.calls) == 1


def test_pure_coverage_mismatch_raises_dedicated_error():
    rubric = make_rubric([1.0, 1.0])
    wrong = valid_payload(make_rubric([1.0]))  # valid shape, wrong item set
    wrong["items"][0]["item_id"] = "not-in-rubric"
    provider = ScriptedProvider([json.dumps(wrong)] * 3)
    with pytest.raises(ItemCoverageMismatch):
        evaluate(features_f1(), rubric, provider, CONFIG)


def test_provider_exceptions_propagate():
    provider = ScriptedProvider([ProviderUnreachable("down")])
    with pytest.raises(ProviderUnreachable):
        evaluate(features_f1(), make_rubric([1.0]), provider, CONFIG)


def test_result_document_roundtrip_revalidates():
    rubric = make_rubric([1.0, 1.0])
    result = evaluate(features_f1(), rubric, MockProvider(), CONFIG)
    doc = result.to_dict()
    _, errors = validate_response(json.dumps(doc), rubric)
    assert errors == []
    assert doc["summary"]["overall_score"] == result.summary.overall_display


def test_evaluator_concurrency_cap_respected():
    import threading

    rubric = make_rubric([1.0])
    feats = features_f1()
    active = []
    peak = []
    lock = threading.Lock()

    class GaugeProvider(MockProvider):
        def complete(self, messages):
            with lock:
                active.append(1)
                peak.append(len(active))
            try:
                import time

                time.sleep(0.02)
                return super().complete(messages)
            finally:
                with lock:
                    active.pop()

    evaluator = Evaluator(GaugeProvider(), CONFIG, concurrency=2)
    threads = [
        threading.Thread(target=lambda: evaluator.evaluate(feats, rubric)) for _ in range(8)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert max(peak) <= 2


# --- cost accounting ----------------------------------------------------------------

def test_zero_tokens_zero_cost():
    assert account_cost(0, 0, CONFIG) == 0.0


def test_unit_price_case():
    config = ProviderConfig(
        url="x", model="m", api_key_env="K",
        price_per_1k_input_usd=0.002, price_per_1k_output_usd=0.01,
    )
    assert account_cost(1000, 0, config) == pytest.approx(0.002)


def test_reference_prices_land_in_paper_cost_band():
    # documented reference pair: 0.0025 / 0.0075 USD per 1k tokens
    cost = account_cost(18_000, 2_550, CONFIG)
    assert 0.06 <= cost <= 0.07


def test_tokens_accumulate_across_repair_rounds():
    rubric = make_rubric([1.0])

    class UsageProvider:
        model_name = "usage"

        def __init__(self):
            self.calls = 0

        def complete(self, messages):
            from slidegrade.evaluator.providers import ProviderReply

            self.calls += 1
            text = "nope" if self.calls == 1 else json.dumps(valid_payload(rubric))
            return ProviderReply(text=text, input_tokens=100, output_tokens=10,
                                 model_name=self.model_name)

    result = evaluate(features_f1(), rubric, UsageProvider(), CONFIG)
    assert result.provider_meta.input_tokens == 200
    assert result.provider_meta.output_tokens == 20
    assert result.provider_meta.cost_usd == pytest.approx(
        200 / 1000 * 0.0025 + 20 / 1000 * 0.0075
    )
