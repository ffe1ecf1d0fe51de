"""In-memory deck model produced by the parser.

All models are immutable after construction and safe to share across
threads. ``ImageAsset.pixel_data`` holds a decoded HxWx3 uint8 RGB array
(marked read-only) or ``None`` when the image format is unsupported or the
bytes are undecodable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

IMAGE_FORMATS = ("png", "jpeg", "gif", "bmp", "other")


@dataclass(frozen=True)
class TextRun:
    text: str
    font_name: Optional[str]          # explicit typeface on the run, if any
    font_size_pt: Optional[float]     # explicit size on the run, if any
    resolved_font_size_pt: float      # after inheritance resolution, always > 0
    resolved_font_name: str
    is_title: bool


@dataclass(frozen=True, eq=False)
class ImageAsset:
    slide_index: int
    format: str                       # one of IMAGE_FORMATS
    width_px: int
    height_px: int
    pixel_data: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.pixel_data is not None:
            self.pixel_data.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, ImageAsset):
            return NotImplemented
        if (self.slide_index, self.format, self.width_px, self.height_px) != (
            other.slide_index, other.format, other.width_px, other.height_px
        ):
            return False
        if (self.pixel_data is None) != (other.pixel_data is None):
            return False
        return self.pixel_data is None or bool(np.array_equal(self.pixel_data, other.pixel_data))


@dataclass(frozen=True)
class LineInfo:
    """One paragraph of slide text, kept for reference detection."""

    text: str
    has_hyperlink: bool
    is_title: bool


@dataclass(frozen=True)
class FrameInfo:
    """One text frame's joined text and vertical position, for the
    slide-number heuristic. ``top_fraction`` is the frame top edge divided
    by the slide height, or None when the shape carries no geometry."""

    text: str
    top_fraction: Optional[float]


@dataclass(frozen=True)
class SlideModel:
    index: int                        # 1-based, contiguous
    text_runs: tuple[TextRun, ...]
    images: tuple[ImageAsset, ...]
    hyperlinks: tuple[str, ...]       # raw external URIs, first-appearance order
    has_slide_number_placeholder: bool
    lines: tuple[LineInfo, ...] = field(default=())
    frames: tuple[FrameInfo, ...] = field(default=())
    has_native_slide_number: bool = False

    @property
    def title_text(self) -> str:
        return " ".join(l.text for l in self.lines if l.is_title and l.text).strip()


@dataclass(frozen=True)
class DeckModel:
    slide_count: int
    slides: tuple[SlideModel, ...]
    source_hash: str                  # SHA-256 hex of the exact uploaded bytes
    byte_size: int

    def __post_init__(self):
        if self.slide_count != len(self.slides):
            raise ValueError("slide_count must equal len(slides)")
