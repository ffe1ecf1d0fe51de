"""LLM provider abstraction: HTTP chat-completions transport plus the
deterministic mock used by the whole offline test suite.

Swapping the real provider for the mock changes transport only; every
other code path (prompting, validation, repair, aggregation, accounting)
is identical.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol

import httpx

from ..config import AppConfig
from ..errors import ProviderTimeout, ProviderUnreachable
from ..jsonutil import dumps
from .schema import first_balanced_object


@dataclass(frozen=True)
class ProviderConfig:
    url: str
    model: str
    api_key_env: str
    price_per_1k_input_usd: float
    price_per_1k_output_usd: float
    timeout_s: float = 60.0
    max_repair_attempts: int = 2

    @classmethod
    def from_app_config(cls, cfg: AppConfig) -> "ProviderConfig":
        return cls(
            url=cfg.provider_url,
            model=cfg.provider_model,
            api_key_env=cfg.provider_api_key_env,
            price_per_1k_input_usd=cfg.price_per_1k_input_usd,
            price_per_1k_output_usd=cfg.price_per_1k_output_usd,
            timeout_s=cfg.provider_timeout_s,
            max_repair_attempts=cfg.max_repair_attempts,
        )


@dataclass(frozen=True)
class ProviderReply:
    text: str
    input_tokens: Optional[int]
    output_tokens: Optional[int]
    model_name: str


class Provider(Protocol):
    def complete(self, messages: list[dict]) -> ProviderReply: ...


class HttpChatProvider:
    """Outbound HTTPS to any chat-completions-style JSON endpoint."""

    def __init__(self, config: ProviderConfig):
        self.config = config
        self._client = httpx.Client(timeout=config.timeout_s)

    def complete(self, messages: list[dict]) -> ProviderReply:
        headers = {}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            response = self._client.post(
                self.config.url,
                json={"model": self.config.model, "messages": messages},
                headers=headers,
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(f"provider timed out after {self.config.timeout_s}s") from exc
        except httpx.HTTPError as exc:
            raise ProviderUnreachable(f"provider transport error: {exc}") from exc
        if response.status_code != 200:
            raise ProviderUnreachable(f"provider returned HTTP {response.status_code}")
        try:
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderUnreachable(f"provider returned an unexpected payload: {exc}") from exc
        usage = payload.get("usage") or {}
        return ProviderReply(
            text=text,
            input_tokens=_maybe_int(usage.get("prompt_tokens")),
            output_tokens=_maybe_int(usage.get("completion_tokens")),
            model_name=str(payload.get("model", self.config.model)),
        )

    def close(self) -> None:
        self._client.close()


def _maybe_int(value) -> Optional[int]:
    try:
        return int(value) if value is not None else None
    except (TypeError, ValueError):
        return None


def _clamp(lo: int, hi: int, value: int) -> int:
    return max(lo, min(hi, value))


def _section_json(prompt: str, marker: str) -> dict:
    """First balanced JSON object following ``marker`` in the prompt."""
    pos = prompt.find(marker)
    if pos < 0:
        return {}
    start = prompt.find("{", pos + len(marker))
    if start < 0:
        return {}
    span = first_balanced_object(prompt[start:])
    if span is None:
        return {}
    try:
        value = json.loads(span)
        return value if isinstance(value, dict) else {}
    except json.JSONDecodeError:
        return {}


class MockProvider:
    """Deterministic offline provider.

    Scoring rule (documented contract for goldens): every item scores
    ``clamp(1, 5, 1 + (word_total mod 50) // 10 + (1 if all slides are
    numbered else 0))``. Feedback strings are templated from the feature
    payload embedded in the prompt, so identical inputs yield identical
    responses. Optional latency is drawn from a seeded RNG.
    """

    model_name = "mock-evaluator"

    def __init__(
        self,
        latency_range_s: Optional[tuple[float, float]] = None,
        seed: int = 0,
    ):
        self.latency_range_s = latency_range_s
        self._rng = random.Random(seed)
        self._lock = threading.Lock()
        self.invocations = 0

    def complete(self, messages: list[dict]) -> ProviderReply:
        with self._lock:
            self.invocations += 1
            delay = (
                self._rng.uniform(*self.latency_range_s) if self.latency_range_s else 0.0
            )
        if delay > 0:
            time.sleep(delay)

        prompt = messages[0]["content"] if messages else ""
        rubric = _section_json(prompt, "RUBRIC:\n")
        features = _section_json(prompt, "FEATURES:\n")
        totals = features.get("totals") or {}
        word_total = int(totals.get("word_total", 0))
        slide_count = int(totals.get("slide_count", 0))
        numbered = bool(features.get("all_slides_numbered", False))
        score = _clamp(1, 5, 1 + (word_total % 50) // 10 + (1 if numbered else 0))

        items = []
        for item in rubric.get("items", []):
            criterion = str(item.get("criterion", ""))
            items.append(
                {
                    "item_id": item.get("item_id", ""),
                    "score": score,
                    "feedback": {
                        "es": f"Criterio '{criterion}': la presentación tiene {word_total} "
                              f"palabras en {slide_count} diapositivas; revisa este criterio.",
                        "en": f"Criterion '{criterion}': the deck has {word_total} words "
                              f"across {slide_count} slides; review this criterion.",
                    },
                }
            )
        numbered_es = "numeradas" if numbered else "sin numerar"
        numbered_en = "numbered" if numbered else "unnumbered"
        body = {
            "schema": 1,
            "items": items,
            "general": {
                "es": {
                    "strengths": f"Estructura clara con {slide_count} diapositivas {numbered_es}.",
                    "improvements": f"Ajusta la densidad de texto ({word_total} palabras en total).",
                    "actions": "Revisa tipografía, numeración y referencias antes de presentar.",
                },
                "en": {
                    "strengths": f"Clear structure with {slide_count} {numbered_en} slides.",
                    "improvements": f"Tune the text density ({word_total} words in total).",
                    "actions": "Review typography, numbering and references before presenting.",
                },
            },
        }
        text = dumps(body)
        prompt_chars = sum(len(m.get("content", "")) for m in messages)
        return ProviderReply(
            text=text,
            input_tokens=prompt_chars // 4,
            output_tokens=len(text) // 4,
            model_name=self.model_name,
        )


class ScriptedProvider:
    """Test provider replaying a fixed sequence of raw outputs.

    Entries may be strings (returned verbatim) or exceptions (raised).
    When the script is exhausted the last entry repeats.
    """

    model_name = "scripted"

    def __init__(self, replies: list):
        if not replies:
            raise ValueError("ScriptedProvider needs at least one reply")
        self._replies = list(replies)
        self._lock = threading.Lock()
        self.calls: list[list[dict]] = []

    def complete(self, messages: list[dict]) -> ProviderReply:
        with self._lock:
            self.calls.append(messages)
            index = min(len(self.calls) - 1, len(self._replies) - 1)
        reply = self._replies[index]
        if isinstance(reply, Exception):
            raise reply
        return ProviderReply(
            text=reply,
            input_tokens=None,
            output_tokens=None,
            model_name=self.model_name,
        )


def make_provider(cfg: AppConfig, mock: bool = False) -> Provider:
    """Provider per config: ``provider_url == "mock"`` selects the mock."""
    if mock or cfg.provider_url.strip().lower() == "mock":
        return MockProvider()
    return HttpChatProvider(ProviderConfig.from_app_config(cfg))
