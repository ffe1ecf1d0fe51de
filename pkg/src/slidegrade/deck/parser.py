"""`.pptx` container parsing: slides, text runs, fonts, images, hyperlinks.

The parser walks the raw XML parts (no rendering): presentation part for
slide order and geometry, per-slide parts for shape trees, relationship
parts for hyperlink and image targets, and the layout/master chain for
font inheritance. Parsing is deterministic and never raises anything but
the typed ``DeckParseError``/``LimitExceeded`` family, whatever the input
bytes.
"""

from __future__ import annotations

import hashlib
import io
import posixpath
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
from PIL import Image

from ..config import AppConfig
from ..errors import DeckParseError, LimitExceeded, MissingPresentationPart, SlidegradeError
from ..ooxml import (
    REL_TYPE_HYPERLINK,
    REL_TYPE_IMAGE,
    REL_TYPE_SLIDE,
    REL_TYPE_SLIDE_LAYOUT,
    REL_TYPE_SLIDE_MASTER,
    BoundedArchive,
    qn,
    read_relationships,
)
from .model import DeckModel, FrameInfo, ImageAsset, LineInfo, SlideModel, TextRun

PRESENTATION_PART = "ppt/presentation.xml"

SLIDE_NUMBER_TEXT_RE = re.compile(r"^\s*\d+\s*(/\s*\d+\s*)?$")

_TITLE_TYPES = {"title", "ctrTitle"}
_BODY_TYPES = {"body", "subTitle", "obj"}

_EXT_FORMAT = {
    ".png": "png",
    ".jpg": "jpeg",
    ".jpeg": "jpeg",
    ".jpe": "jpeg",
    ".gif": "gif",
    ".bmp": "bmp",
    ".dib": "bmp",
}


def _ph_info(sp) -> tuple[Optional[str], Optional[str]]:
    """Placeholder (type, idx) of a shape, or (None, None)."""
    ph = sp.find(f"{qn('p:nvSpPr')}/{qn('p:nvPr')}/{qn('p:ph')}")
    if ph is None:
        return None, None
    return ph.get("type") or "body", ph.get("idx")


def _ph_match_keys(ph_type: str, ph_idx: Optional[str]) -> list[tuple[str, Optional[str]]]:
    """Candidate lookup keys on layout/master, most specific first."""
    keys: list[tuple[str, Optional[str]]] = []
    if ph_idx is not None:
        keys.append((ph_type, ph_idx))
        keys.append(("*", ph_idx))
    keys.append((ph_type, None))
    if ph_type == "ctrTitle":
        keys.append(("title", None))
    if ph_type in ("subTitle", "obj"):
        keys.append(("body", None))
    return keys


def _lvl_props(container, lvl: int):
    """The a:lvl{N}pPr element for a 0-based paragraph level, if present."""
    if container is None:
        return None
    return container.find(qn(f"a:lvl{lvl + 1}pPr"))


def _defrpr_size(props) -> Optional[float]:
    if props is None:
        return None
    defrpr = props.find(qn("a:defRPr"))
    if defrpr is None:
        return None
    return _sz_to_pt(defrpr.get("sz"))


def _defrpr_font(props) -> Optional[str]:
    if props is None:
        return None
    defrpr = props.find(qn("a:defRPr"))
    if defrpr is None:
        return None
    latin = defrpr.find(qn("a:latin"))
    return latin.get("typeface") if latin is not None else None


def _sz_to_pt(raw: Optional[str]) -> Optional[float]:
    """OOXML font sizes are hundredths of a point."""
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        return None
    return value / 100.0 if value > 0 else None


@dataclass
class _PartStyles:
    """Placeholder list-styles of one layout or master part."""

    placeholders: dict  # (type, idx|None) -> lstStyle element
    txstyles: Optional[object] = None  # master-only p:txStyles element

    def lookup(self, keys):
        for key in keys:
            if key in self.placeholders:
                yield self.placeholders[key]

    def txstyle_for(self, ph_type: Optional[str]):
        if self.txstyles is None:
            return None
        if ph_type in _TITLE_TYPES:
            return self.txstyles.find(qn("p:titleStyle"))
        if ph_type in _BODY_TYPES:
            return self.txstyles.find(qn("p:bodyStyle"))
        return self.txstyles.find(qn("p:otherStyle"))


def _collect_part_styles(root) -> _PartStyles:
    placeholders: dict = {}
    for sp in root.iter(qn("p:sp")):
        ph_type, ph_idx = _ph_info(sp)
        if ph_type is None:
            continue
        lst = sp.find(f"{qn('p:txBody')}/{qn('a:lstStyle')}")
        if lst is None:
            continue
        for key in ((ph_type, ph_idx), (ph_type, None), ("*", ph_idx)):
            placeholders.setdefault(key, lst)
    txstyles = root.find(qn("p:txStyles"))
    return _PartStyles(placeholders=placeholders, txstyles=txstyles)


@dataclass
class RunContext:
    """Everything the font-resolution chain can consult for one run.

    Chain, first explicit value wins: run -> paragraph default -> the
    shape's own list style on the slide -> matching layout placeholder ->
    matching master placeholder (including the master's per-family text
    styles) -> presentation default text style -> configured global
    default.
    """

    run_size_pt: Optional[float]
    run_font: Optional[str]
    para_size_pt: Optional[float]
    para_font: Optional[str]
    level: int
    shape_lststyle: Optional[object]
    ph_type: Optional[str]
    ph_idx: Optional[str]
    layout_styles: Optional[_PartStyles]
    master_styles: Optional[_PartStyles]
    presentation_defaults: Optional[object]


def resolve_font_size(ctx: RunContext, config: AppConfig) -> float:
    """First explicit size on the inheritance chain; the configured global
    default terminates the chain, so this always returns a positive value."""
    for value in _chain_values(ctx, _defrpr_size, ctx.run_size_pt, ctx.para_size_pt):
        if value is not None and value > 0:
            return value
    return config.default_font_size_pt


def resolve_font_name(ctx: RunContext, config: AppConfig) -> str:
    for value in _chain_values(ctx, _defrpr_font, ctx.run_font, ctx.para_font):
        if value:
            return value
    return config.default_font_name


def _chain_values(ctx: RunContext, extract, run_value, para_value):
    yield run_value
    yield para_value
    yield extract(_lvl_props(ctx.shape_lststyle, ctx.level))
    if ctx.ph_type is not None:
        keys = _ph_match_keys(ctx.ph_type, ctx.ph_idx)
        if ctx.layout_styles is not None:
            for lst in ctx.layout_styles.lookup(keys):
                yield extract(_lvl_props(lst, ctx.level))
        if ctx.master_styles is not None:
            for lst in ctx.master_styles.lookup(keys):
                yield extract(_lvl_props(lst, ctx.level))
    if ctx.master_styles is not None:
        yield extract(_lvl_props(ctx.master_styles.txstyle_for(ctx.ph_type), ctx.level))
    yield extract(_lvl_props(ctx.presentation_defaults, ctx.level))


def detect_slide_number(slide: SlideModel, config: AppConfig | None = None) -> bool:
    """True iff a native slide-number placeholder/field exists on the slide
    or its layout, or some text frame holds only ``N`` or ``N / M`` and its
    top edge sits in the configured bottom band of the slide."""
    config = config or AppConfig()
    if slide.has_native_slide_number:
        return True
    cutoff = 1.0 - config.slide_number_bottom_fraction
    for frame in slide.frames:
        if frame.top_fraction is None or frame.top_fraction < cutoff:
            continue
        if SLIDE_NUMBER_TEXT_RE.fullmatch(frame.text):
            return True
    return False


def parse_deck(data: bytes, config: AppConfig | None = None) -> DeckModel:
    """Parse `.pptx` bytes into a DeckModel.

    Raises NotAZipArchive, MissingPresentationPart, XmlMalformed or
    LimitExceeded; arbitrary junk input never escapes as anything else.
    """
    config = config or AppConfig()
    if len(data) > config.max_upload_bytes:
        raise LimitExceeded("max_upload_bytes")
    try:
        return _parse(data, config)
    except SlidegradeError:
        raise
    except Exception as exc:  # malformed-but-valid XML shapes, bad numerics, ...
        raise DeckParseError(f"unparseable presentation: {exc!r}") from exc


def _parse(data: bytes, config: AppConfig) -> DeckModel:
    archive = BoundedArchive(data, config.max_zip_parts, config.max_inflation_ratio)
    if PRESENTATION_PART not in archive:
        raise MissingPresentationPart("no ppt/presentation.xml part (not a .pptx)")

    pres = archive.read_xml(PRESENTATION_PART)
    pres_rels = read_relationships(archive, PRESENTATION_PART)

    slide_size = pres.find(qn("p:sldSz"))
    slide_cy = _to_int(slide_size.get("cy")) if slide_size is not None else 6_858_000
    presentation_defaults = pres.find(qn("p:defaultTextStyle"))

    slide_parts: list[str] = []
    id_list = pres.find(qn("p:sldIdLst"))
    if id_list is not None:
        for sld_id in id_list.findall(qn("p:sldId")):
            rid = sld_id.get(qn("r:id"))
            rel = pres_rels.get(rid)
            if rel and rel["type"] == REL_TYPE_SLIDE and rel["abs_target"] in archive:
                slide_parts.append(rel["abs_target"])
    if not slide_parts:
        # fall back to rels order for decks with no explicit id list
        slide_parts = [
            r["abs_target"]
            for r in pres_rels.values()
            if r["type"] == REL_TYPE_SLIDE and r["abs_target"] in archive
        ]
    if not slide_parts:
        raise MissingPresentationPart("presentation lists no slides")

    styles_cache: dict[str, _PartStyles] = {}
    slides = []
    for index, part in enumerate(slide_parts, start=1):
        slides.append(
            _parse_slide(archive, part, index, slide_cy, presentation_defaults, styles_cache, config)
        )

    return DeckModel(
        slide_count=len(slides),
        slides=tuple(slides),
        source_hash=hashlib.sha256(data).hexdigest(),
        byte_size=len(data),
    )


def _part_styles(archive: BoundedArchive, part: Optional[str], cache: dict) -> Optional[_PartStyles]:
    if part is None or part not in archive:
        return None
    if part not in cache:
        cache[part] = _collect_part_styles(archive.read_xml(part))
    return cache[part]


def _parse_slide(
    archive: BoundedArchive,
    part: str,
    index: int,
    slide_cy: int,
    presentation_defaults,
    styles_cache: dict,
    config: AppConfig,
) -> SlideModel:
    root = archive.read_xml(part)
    rels = read_relationships(archive, part)

    layout_part = next(
        (r["abs_target"] for r in rels.values() if r["type"] == REL_TYPE_SLIDE_LAYOUT), None
    )
    master_part = None
    layout_has_sldnum = False
    if layout_part is not None and layout_part in archive:
        layout_root = archive.read_xml(layout_part)
        layout_has_sldnum = _has_sldnum_placeholder(layout_root)
        layout_rels = read_relationships(archive, layout_part)
        master_part = next(
            (r["abs_target"] for r in layout_rels.values() if r["type"] == REL_TYPE_SLIDE_MASTER),
            None,
        )
    layout_styles = _part_styles(archive, layout_part, styles_cache)
    master_styles = _part_styles(archive, master_part, styles_cache)

    runs: list[TextRun] = []
    lines: list[LineInfo] = []
    frames: list[FrameInfo] = []
    hyperlinks: list[str] = []
    images: list[ImageAsset] = []
    has_native = _has_sldnum_placeholder(root) or layout_has_sldnum

    tree = root.find(f"{qn('p:cSld')}/{qn('p:spTree')}")
    if tree is None:
        tree = []

    for sp in tree:
        if sp.tag == qn("p:pic"):
            asset = _parse_picture(archive, sp, rels, index)
            if asset is not None:
                images.append(asset)
            continue
        if sp.tag != qn("p:sp"):
            continue

        ph_type, ph_idx = _ph_info(sp)
        is_title = ph_type in _TITLE_TYPES
        body = sp.find(qn("p:txBody"))
        if body is None:
            continue
        shape_lst = body.find(qn("a:lstStyle"))
        frame_paragraph_texts: list[str] = []

        for para in body.findall(qn("a:p")):
            ppr = para.find(qn("a:pPr"))
            level = _to_int(ppr.get("lvl")) if ppr is not None and ppr.get("lvl") else 0
            para_defrpr = ppr.find(qn("a:defRPr")) if ppr is not None else None
            para_size = _sz_to_pt(para_defrpr.get("sz")) if para_defrpr is not None else None
            para_font = None
            if para_defrpr is not None:
                latin = para_defrpr.find(qn("a:latin"))
                para_font = latin.get("typeface") if latin is not None else None

            para_texts: list[str] = []
            para_has_link = False
            for child in para:
                if child.tag == qn("a:r"):
                    text_el = child.find(qn("a:t"))
                    if text_el is None:
                        continue
                    text = text_el.text or ""
                    rpr = child.find(qn("a:rPr"))
                    run_size = _sz_to_pt(rpr.get("sz")) if rpr is not None else None
                    run_font = None
                    link_uri = None
                    if rpr is not None:
                        latin = rpr.find(qn("a:latin"))
                        run_font = latin.get("typeface") if latin is not None else None
                        link_uri = _hyperlink_target(rpr, rels)
                    if link_uri:
                        para_has_link = True
                        if link_uri not in hyperlinks:
                            hyperlinks.append(link_uri)
                    ctx = RunContext(
                        run_size_pt=run_size,
                        run_font=run_font,
                        para_size_pt=para_size,
                        para_font=para_font,
                        level=max(0, min(level, 8)),
                        shape_lststyle=shape_lst,
                        ph_type=ph_type,
                        ph_idx=ph_idx,
                        layout_styles=layout_styles,
                        master_styles=master_styles,
                        presentation_defaults=presentation_defaults,
                    )
                    runs.append(
                        TextRun(
                            text=text,
                            font_name=run_font,
                            font_size_pt=run_size,
                            resolved_font_size_pt=resolve_font_size(ctx, config),
                            resolved_font_name=resolve_font_name(ctx, config),
                            is_title=is_title,
                        )
                    )
                    para_texts.append(text)
                elif child.tag == qn("a:fld"):
                    if child.get("type") == "slidenum":
                        has_native = True
                elif child.tag == qn("a:br"):
                    para_texts.append(" ")
            line_text = "".join(para_texts).strip()
            if line_text or para_has_link:
                lines.append(LineInfo(text=line_text, has_hyperlink=para_has_link, is_title=is_title))
            frame_paragraph_texts.append("".join(para_texts).strip())

        frames.append(
            FrameInfo(
                text="\n".join(t for t in frame_paragraph_texts if t),
                top_fraction=_frame_top_fraction(sp, slide_cy),
            )
        )

    slide = SlideModel(
        index=index,
        text_runs=tuple(runs),
        images=tuple(images),
        hyperlinks=tuple(hyperlinks),
        has_slide_number_placeholder=False,  # recomputed below
        lines=tuple(lines),
        frames=tuple(frames),
        has_native_slide_number=has_native,
    )
    detected = detect_slide_number(slide, config)
    return SlideModel(
        index=slide.index,
        text_runs=slide.text_runs,
        images=slide.images,
        hyperlinks=slide.hyperlinks,
        has_slide_number_placeholder=detected,
        lines=slide.lines,
        frames=slide.frames,
        has_native_slide_number=has_native,
    )


def _has_sldnum_placeholder(root) -> bool:
    for ph in root.iter(qn("p:ph")):
        if ph.get("type") == "sldNum":
            return True
    return False


def _hyperlink_target(rpr, rels) -> Optional[str]:
    link = rpr.find(qn("a:hlinkClick"))
    if link is None:
        return None
    rid = link.get(qn("r:id"))
    rel = rels.get(rid)
    if rel and rel["type"] == REL_TYPE_HYPERLINK and rel["external"]:
        return rel["target"]
    return None


def _frame_top_fraction(sp, slide_cy: int) -> Optional[float]:
    off = sp.find(f"{qn('p:spPr')}/{qn('a:xfrm')}/{qn('a:off')}")
    if off is None or slide_cy <= 0:
        return None
    y = _to_int(off.get("y"))
    return y / slide_cy


def _parse_picture(archive: BoundedArchive, pic, rels, slide_index: int) -> Optional[ImageAsset]:
    blip = pic.find(f"{qn('p:blipFill')}/{qn('a:blip')}")
    if blip is None:
        return None
    rid = blip.get(qn("r:embed")) or blip.get(qn("r:link"))
    rel = rels.get(rid)
    if rel is None or rel["type"] != REL_TYPE_IMAGE or rel["external"]:
        return None
    target = rel["abs_target"]
    if target not in archive:
        return None
    ext = posixpath.splitext(target)[1].lower()
    fmt = _EXT_FORMAT.get(ext, "other")
    raw = archive.read(target)
    pixels = None
    width = height = 0
    if fmt != "other":
        try:
            with Image.open(io.BytesIO(raw)) as img:
                rgb = img.convert("RGB")
                pixels = np.asarray(rgb, dtype=np.uint8)
            height, width = pixels.shape[0], pixels.shape[1]
            if width * height == 0:
                pixels = None
                width = height = 0
        except Exception:
            pixels = None
            width = height = 0
    return ImageAsset(
        slide_index=slide_index, format=fmt, width_px=width, height_px=height, pixel_data=pixels
    )


def _to_int(raw: Optional[str]) -> int:
    try:
        return int(raw) if raw is not None else 0
    except ValueError:
        return 0
