"""Canonical JSON serialization for reproducible golden files.

Keys are sorted, floats are emitted with exactly four decimal places, and
there is no insignificant whitespace, so structurally identical inputs
serialize to byte-identical strings across runs and platforms.
"""

from __future__ import annotations

import json
import math


def _encode(value, out: list[str]) -> None:
    if value is None or value is True or value is False:
        out.append(json.dumps(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, bool):  # pragma: no cover - caught above
        out.append(json.dumps(value))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite float not representable in canonical JSON: {value!r}")
        out.append(f"{value:.4f}")
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    elif isinstance(value, dict):
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise TypeError(f"canonical JSON keys must be strings, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _encode(value[key], out)
        out.append("}")
    else:
        raise TypeError(f"type not representable in canonical JSON: {type(value).__name__}")


def canonical_json(value) -> str:
    """Serialize ``value`` to the canonical byte-stable JSON form."""
    out: list[str] = []
    _encode(value, out)
    return "".join(out)


def dumps(value) -> str:
    """Plain deterministic JSON (sorted keys, native float repr)."""
    return json.dumps(value, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
