from .extract import DeckFeatures, DeckTotals, SlideFeatures, count_words, extract_features
from .images import IMAGE_CLASSES, ImageFeatures, characterize_image, edge_density, to_grayscale
from .references import (
    REFERENCE_KINDS,
    ReferenceInfo,
    classify_reference,
    detect_references,
)

__all__ = [
    "DeckFeatures",
    "DeckTotals",
    "SlideFeatures",
    "count_words",
    "extract_features",
    "IMAGE_CLASSES",
    "ImageFeatures",
    "characterize_image",
    "edge_density",
    "to_grayscale",
    "REFERENCE_KINDS",
    "ReferenceInfo",
    "classify_reference",
    "detect_references",
]
