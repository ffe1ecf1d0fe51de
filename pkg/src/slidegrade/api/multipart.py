"""Small multipart/form-data parser for the upload and import endpoints.

Bodies arrive pre-capped by the streaming size guard, so parsing a fully
buffered payload here is bounded. Handles the subset browsers and HTTP
clients actually emit: one boundary, content-disposition with name and
optional filename, CRLF separators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

_BOUNDARY_RE = re.compile(r'boundary="?([^";]+)"?', re.IGNORECASE)
_NAME_RE = re.compile(r'name="([^"]*)"')
_FILENAME_RE = re.compile(r'filename="([^"]*)"')


@dataclass(frozen=True)
class FormPart:
    name: str
    filename: Optional[str]
    content: bytes

    @property
    def text(self) -> str:
        return self.content.decode("utf-8", errors="replace")


class MultipartError(ValueError):
    pass


def parse_multipart(body: bytes, content_type: str) -> dict[str, FormPart]:
    match = _BOUNDARY_RE.search(content_type or "")
    if "multipart/form-data" not in (content_type or "").lower() or not match:
        raise MultipartError("expected multipart/form-data with a boundary")
    delimiter = b"--" + match.group(1).encode("latin-1")

    parts: dict[str, FormPart] = {}
    chunks = body.split(delimiter)
    # chunks[0] is the preamble, the last chunk is the b"--\r\n" epilogue
    for chunk in chunks[1:]:
        if chunk.startswith(b"--"):
            break
        chunk = chunk.lstrip(b"\r\n")
        header_end = chunk.find(b"\r\n\r\n")
        if header_end < 0:
            continue
        raw_headers = chunk[:header_end].decode("latin-1", errors="replace")
        content = chunk[header_end + 4 :]
        if content.endswith(b"\r\n"):
            content = content[:-2]
        disposition = ""
        for line in raw_headers.split("\r\n"):
            if line.lower().startswith("content-disposition:"):
                disposition = line
                break
        name_match = _NAME_RE.search(disposition)
        if not name_match:
            continue
        file_match = _FILENAME_RE.search(disposition)
        parts[name_match.group(1)] = FormPart(
            name=name_match.group(1),
            filename=file_match.group(1) if file_match else None,
            content=content,
        )
    if not parts:
        raise MultipartError("no form parts found")
    return parts
