"""Content-addressed blob stores (original deck files, exports).

Refs are the SHA-256 hex of the content, so storing identical bytes twice
is a no-op returning the same ref, and round-trips are byte-exact by
construction. Both backends satisfy the same contract test suite.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import threading
from pathlib import Path

from ..errors import NotFound


class FileBlobStore:
    """Write-once files under ``<root>/<first-2-hex>/<hash>``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, ref: str) -> Path:
        return self.root / ref[:2] / ref

    def put(self, data: bytes) -> str:
        ref = hashlib.sha256(data).hexdigest()
        path = self._path(ref)
        if path.exists():
            return ref
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)  # atomic; concurrent writers converge
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return ref

    def get(self, ref: str) -> bytes:
        path = self._path(ref)
        try:
            return path.read_bytes()
        except (FileNotFoundError, ValueError, OSError) as exc:
            raise NotFound(f"no blob with ref {ref!r}") from exc

    def exists(self, ref: str) -> bool:
        return self._path(ref).exists()

    def refs(self) -> list[str]:
        return sorted(p.name for p in self.root.glob("??/*") if p.is_file())


class MemoryBlobStore:
    """In-memory backend used by unit tests; same contract as the file store."""

    def __init__(self):
        self._data: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def put(self, data: bytes) -> str:
        ref = hashlib.sha256(data).hexdigest()
        with self._lock:
            self._data.setdefault(ref, bytes(data))
        return ref

    def get(self, ref: str) -> bytes:
        with self._lock:
            if ref not in self._data:
                raise NotFound(f"no blob with ref {ref!r}")
            return self._data[ref]

    def exists(self, ref: str) -> bool:
        with self._lock:
            return ref in self._data

    def refs(self) -> list[str]:
        with self._lock:
            return sorted(self._data)
