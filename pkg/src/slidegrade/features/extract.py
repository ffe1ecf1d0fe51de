"""Deck feature extraction: the quantitative payload fed to the evaluator
and shown on the dashboards.

``extract_features`` is a pure function of the DeckModel: the same deck
always yields byte-identical canonical JSON (``features_schema: 1``).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..config import AppConfig
from ..deck.model import DeckModel
from ..jsonutil import canonical_json
from .images import characterize_image
from .references import ReferenceInfo, detect_references

FEATURES_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SlideFeatures:
    slide_index: int
    word_count: int
    min_font_size_pt: float
    max_font_size_pt: float
    fonts_used: frozenset[str]
    has_slide_number: bool
    image_classes: tuple[str, ...]
    reference_count: int


@dataclass(frozen=True)
class DeckTotals:
    word_total: int
    slide_count: int
    image_total: int
    reference_total: int


@dataclass(frozen=True)
class DeckFeatures:
    per_slide: tuple[SlideFeatures, ...]
    references: tuple[ReferenceInfo, ...]
    totals: DeckTotals
    all_slides_numbered: bool
    source_hash: str
    byte_size: int

    def to_dict(self) -> dict:
        return {
            "features_schema": FEATURES_SCHEMA_VERSION,
            "source_hash": self.source_hash,
            "byte_size": self.byte_size,
            "totals": {
                "word_total": self.totals.word_total,
                "slide_count": self.totals.slide_count,
                "image_total": self.totals.image_total,
                "reference_total": self.totals.reference_total,
            },
            "all_slides_numbered": self.all_slides_numbered,
            "per_slide": [
                {
                    "slide_index": s.slide_index,
                    "word_count": s.word_count,
                    "min_font_size_pt": s.min_font_size_pt,
                    "max_font_size_pt": s.max_font_size_pt,
                    "fonts_used": sorted(s.fonts_used),
                    "has_slide_number": s.has_slide_number,
                    "image_classes": list(s.image_classes),
                    "reference_count": s.reference_count,
                }
                for s in self.per_slide
            ],
            "references": [
                {"slide_index": r.slide_index, "raw_text": r.raw_text, "kind": r.kind}
                for r in self.references
            ],
        }

    def to_canonical_json(self) -> str:
        return canonical_json(self.to_dict())


def count_words(text: str) -> int:
    """Whitespace-delimited tokens holding at least one alphanumeric char."""
    return sum(1 for token in text.split() if any(ch.isalnum() for ch in token))


def extract_features(deck: DeckModel, config: AppConfig | None = None) -> DeckFeatures:
    """Deterministic per-slide and per-deck features for one parsed deck."""
    config = config or AppConfig()
    references = detect_references(deck)
    refs_by_slide: dict[int, int] = {}
    for ref in references:
        refs_by_slide[ref.slide_index] = refs_by_slide.get(ref.slide_index, 0) + 1

    per_slide: list[SlideFeatures] = []
    for slide in deck.slides:
        words = sum(count_words(run.text) for run in slide.text_runs)
        sizes = [run.resolved_font_size_pt for run in slide.text_runs if count_words(run.text) > 0]
        per_slide.append(
            SlideFeatures(
                slide_index=slide.index,
                word_count=words,
                min_font_size_pt=min(sizes) if sizes else 0.0,
                max_font_size_pt=max(sizes) if sizes else 0.0,
                fonts_used=frozenset(run.resolved_font_name for run in slide.text_runs),
                has_slide_number=slide.has_slide_number_placeholder,
                image_classes=tuple(
                    characterize_image(img, config).classification for img in slide.images
                ),
                reference_count=refs_by_slide.get(slide.index, 0),
            )
        )

    totals = DeckTotals(
        word_total=sum(s.word_count for s in per_slide),
        slide_count=len(per_slide),
        image_total=sum(len(s.image_classes) for s in per_slide),
        reference_total=len(references),
    )
    return DeckFeatures(
        per_slide=tuple(per_slide),
        references=tuple(references),
        totals=totals,
        all_slides_numbered=all(s.has_slide_number for s in per_slide) and bool(per_slide),
        source_hash=deck.source_hash,
        byte_size=deck.byte_size,
    )
