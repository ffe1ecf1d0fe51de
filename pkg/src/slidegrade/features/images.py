"""Image characterization: edge density, quantized color count, class label.

Classes separate photographs (high color dimensionality) from logos (few
colors, little edge activity) and clip art (everything in between). All
thresholds come from config; the defaults are documented there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import AppConfig
from ..deck.model import ImageAsset
from . import kernels

IMAGE_CLASSES = ("photograph", "logo", "clipart", "unknown")

# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


@dataclass(frozen=True)
class ImageFeatures:
    edge_density: float            # in [0, 1]
    color_count_quantized: int     # >= 1 for any decodable image
    classification: str            # one of IMAGE_CLASSES


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Float64 luma plane; shared by both kernel backends."""
    return rgb.astype(np.float64) @ _LUMA


def edge_density(rgb: np.ndarray, threshold: float) -> float:
    mag = kernels.sobel_magnitude(np.ascontiguousarray(to_grayscale(rgb)))
    return float(np.count_nonzero(mag > threshold)) / mag.size


def characterize_image(img: ImageAsset, config: AppConfig | None = None) -> ImageFeatures:
    """Characterize one decoded image; undecodable assets classify as unknown."""
    config = config or AppConfig()
    if img.pixel_data is None:
        return ImageFeatures(edge_density=0.0, color_count_quantized=0, classification="unknown")
    rgb = np.ascontiguousarray(img.pixel_data)
    density = edge_density(rgb, config.edge_gradient_threshold)
    colors = int(kernels.quantized_color_count(rgb, config.color_quant_bits))
    if colors >= config.photo_color_min:
        label = "photograph"
    elif colors <= config.logo_color_max and density < config.logo_edge_max:
        label = "logo"
    else:
        label = "clipart"
    return ImageFeatures(edge_density=density, color_count_quantized=colors, classification=label)
