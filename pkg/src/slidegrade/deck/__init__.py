from .model import DeckModel, FrameInfo, ImageAsset, LineInfo, SlideModel, TextRun
from .parser import RunContext, detect_slide_number, parse_deck, resolve_font_size

__all__ = [
    "DeckModel",
    "FrameInfo",
    "ImageAsset",
    "LineInfo",
    "SlideModel",
    "TextRun",
    "RunContext",
    "detect_slide_number",
    "parse_deck",
    "resolve_font_size",
]
