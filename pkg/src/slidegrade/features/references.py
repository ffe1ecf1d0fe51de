"""Reference detection and rule-table classification.

Detection scope: every non-title line on a slide titled "References",
"Referencias", "Bibliografía" (or unaccented variants), plus any line in
the deck whose text contains a URI or DOI or whose runs carry a hyperlink.

Classification walks a fixed rule table, first match wins, so every input
maps to exactly one kind.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..deck.model import DeckModel

REFERENCE_KINDS = ("hyperlink", "journal_article", "book", "legal_document", "other")

REFERENCE_SLIDE_TITLES = {
    "references",
    "referencias",
    "bibliografía",
    "bibliografia",
    "reference list",
}

URI_RE = re.compile(r"\b[a-zA-Z][a-zA-Z0-9+.-]*://\S+")
DOI_RE = re.compile(r"\b10\.\d{4,9}/\S+")
JOURNAL_TOKEN_RE = re.compile(r"\b(?:vol\.|pp\.)", re.IGNORECASE)
ISBN_RE = re.compile(r"\bISBN(?:-1[03])?:?\s*(?=[\d Xx-]{10,17}\b)[\d-]{9,16}[\dXx]\b")
LEGAL_KEYWORDS = ("BOE", "Ley", "Real Decreto", "Directive", "Regulation (EU)")


@dataclass(frozen=True)
class ReferenceInfo:
    slide_index: int
    raw_text: str
    kind: str


def classify_reference(text: str, is_hyperlink: bool) -> str:
    """Rule table, in order: hyperlink, journal article, book, legal, other."""
    if is_hyperlink or URI_RE.search(text):
        return "hyperlink"
    if DOI_RE.search(text) or JOURNAL_TOKEN_RE.search(text):
        return "journal_article"
    if ISBN_RE.search(text):
        return "book"
    if any(keyword in text for keyword in LEGAL_KEYWORDS):
        return "legal_document"
    return "other"


def _is_reference_slide(title_text: str) -> bool:
    return title_text.strip().casefold() in REFERENCE_SLIDE_TITLES


def detect_references(deck: DeckModel) -> list[ReferenceInfo]:
    """All reference lines in the deck, in slide and line order."""
    refs: list[ReferenceInfo] = []
    for slide in deck.slides:
        on_reference_slide = _is_reference_slide(slide.title_text)
        for line in slide.lines:
            if line.is_title:
                continue
            in_scope = (
                (on_reference_slide and bool(line.text))
                or line.has_hyperlink
                or URI_RE.search(line.text) is not None
                or DOI_RE.search(line.text) is not None
            )
            if not in_scope:
                continue
            refs.append(
                ReferenceInfo(
                    slide_index=slide.index,
                    raw_text=line.text,
                    kind=classify_reference(line.text, line.has_hyperlink),
                )
            )
    return refs
