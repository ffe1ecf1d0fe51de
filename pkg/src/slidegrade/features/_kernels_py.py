"""NumPy fallback for the compiled image kernels.

Arithmetic matches ``_kernels.pyx`` operation for operation (float64
accumulation over a replicate-padded neighborhood) so both backends
produce identical results, not merely close ones.
"""

from __future__ import annotations

import numpy as np


def sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    """3x3 Sobel gradient magnitude with replicate padding."""
    if gray.ndim != 2:
        raise ValueError("expected a 2-D grayscale array")
    g = np.pad(gray.astype(np.float64, copy=False), 1, mode="edge")
    tl = g[:-2, :-2]; tc = g[:-2, 1:-1]; tr = g[:-2, 2:]
    ml = g[1:-1, :-2];                   mr = g[1:-1, 2:]
    bl = g[2:, :-2];  bc = g[2:, 1:-1];  br = g[2:, 2:]
    gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl)
    gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr)
    return np.sqrt(gx * gx + gy * gy)


def quantized_color_count(rgb: np.ndarray, bits: int) -> int:
    """Distinct colors after keeping the top ``bits`` bits per channel."""
    if not 1 <= bits <= 8:
        raise ValueError("bits must be in [1, 8]")
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an HxWx3 RGB array")
    shift = 8 - bits
    q = (rgb >> shift).astype(np.uint32)
    codes = (q[:, :, 0] << (2 * bits)) | (q[:, :, 1] << bits) | q[:, :, 2]
    return int(np.unique(codes).size)
