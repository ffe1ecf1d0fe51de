"""Kernel backend selection: compiled extension when available, NumPy otherwise.

Set ``SLIDEGRADE_PURE_PYTHON=1`` to force the NumPy backend (used by the
benchmark and the backend-agreement tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("SLIDEGRADE_PURE_PYTHON", "").strip() in ("1", "true", "yes"):
    _backend = _kernels_py
else:
    try:
        from . import _kernels as _backend  # type: ignore[no-redef]
    except ImportError:
        _backend = _kernels_py

BACKEND_NAME = "compiled" if _backend.__name__.endswith("_kernels") else "numpy"

sobel_magnitude = _backend.sobel_magnitude
quantized_color_count = _backend.quantized_color_count


def available_backends() -> dict:
    """Importable kernel backends by name (for tests and the benchmark)."""
    backends = {"numpy": _kernels_py}
    try:
        from . import _kernels

        backends["compiled"] = _kernels
    except ImportError:
        pass
    return backends
