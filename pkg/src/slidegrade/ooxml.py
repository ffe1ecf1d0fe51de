"""Bounded ZIP + XML access shared by the deck parser and the XLSX importer.

OOXML documents (`.pptx`, `.xlsx`) are ZIP containers of related XML parts.
All decompression here is budgeted: part count, per-archive inflated size
and the inflation ratio against the compressed payload are capped so that
crafted archives fail fast with ``LimitExceeded`` instead of exhausting
memory.
"""

from __future__ import annotations

import io
import posixpath
import zipfile
import xml.etree.ElementTree as ET

from .errors import LimitExceeded, NotAZipArchive, XmlMalformed

_CHUNK = 64 * 1024

# Relationship and drawing namespaces used across OOXML part types.
NS = {
    "a": "http://schemas.openxmlformats.org/drawingml/2006/main",
    "p": "http://schemas.openxmlformats.org/presentationml/2006/main",
    "r": "http://schemas.openxmlformats.org/officeDocument/2006/relationships",
    "rel": "http://schemas.openxmlformats.org/package/2006/relationships",
    "s": "http://schemas.openxmlformats.org/spreadsheetml/2006/main",
}

REL_TYPE_SLIDE = NS["r"] + "/slide"
REL_TYPE_SLIDE_LAYOUT = NS["r"] + "/slideLayout"
REL_TYPE_SLIDE_MASTER = NS["r"] + "/slideMaster"
REL_TYPE_IMAGE = NS["r"] + "/image"
REL_TYPE_HYPERLINK = NS["r"] + "/hyperlink"


def qn(prefixed: str) -> str:
    """'p:sld' -> '{presentationml-uri}sld'."""
    prefix, local = prefixed.split(":")
    return "{%s}%s" % (NS[prefix], local)


class BoundedArchive:
    """Read-only view over an OOXML ZIP with decompression budgets."""

    def __init__(self, data: bytes, max_parts: int, max_inflation_ratio: float):
        if not data:
            raise NotAZipArchive("empty input")
        try:
            self._zip = zipfile.ZipFile(io.BytesIO(data))
            infos = self._zip.infolist()
        except (zipfile.BadZipFile, OSError, ValueError, NotImplementedError) as exc:
            raise NotAZipArchive(f"not a ZIP archive: {exc}") from exc
        if len(infos) > max_parts:
            raise LimitExceeded("max_zip_parts")
        self._names = {i.filename for i in infos if not i.is_dir()}
        self._budget = max(1, int(max_inflation_ratio * len(data)))
        self._cache: dict[str, bytes] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._names

    def names(self) -> set[str]:
        return set(self._names)

    def read(self, name: str) -> bytes:
        """Read one part, charging its inflated size against the budget."""
        if name in self._cache:
            return self._cache[name]
        if name not in self._names:
            raise KeyError(name)
        chunks = []
        try:
            with self._zip.open(name) as fh:
                while True:
                    chunk = fh.read(_CHUNK)
                    if not chunk:
                        break
                    self._budget -= len(chunk)
                    if self._budget < 0:
                        raise LimitExceeded("max_inflation_ratio")
                    chunks.append(chunk)
        except LimitExceeded:
            raise
        except (zipfile.BadZipFile, OSError, ValueError, NotImplementedError, EOFError) as exc:
            raise NotAZipArchive(f"corrupt ZIP member {name!r}: {exc}") from exc
        data = b"".join(chunks)
        self._cache[name] = data
        return data

    def read_xml(self, name: str) -> ET.Element:
        data = self.read(name)
        try:
            return ET.fromstring(data)
        except ET.ParseError as exc:
            raise XmlMalformed(name, f"malformed XML in part {name!r}: {exc}") from exc


def read_relationships(archive: BoundedArchive, part_name: str) -> dict[str, dict]:
    """Map rId -> {type, target, external, abs_target} for one part's rels."""
    folder, base = posixpath.split(part_name)
    rels_name = posixpath.join(folder, "_rels", base + ".rels")
    if rels_name not in archive:
        return {}
    root = archive.read_xml(rels_name)
    rels: dict[str, dict] = {}
    for node in root.findall(qn("rel:Relationship")):
        rid = node.get("Id")
        target = node.get("Target", "")
        external = node.get("TargetMode") == "External"
        if rid is None:
            continue
        abs_target = target if external else posixpath.normpath(posixpath.join(folder, target))
        rels[rid] = {
            "type": node.get("Type", ""),
            "target": target,
            "external": external,
            "abs_target": abs_target,
        }
    return rels
