"""Image kernels: backend agreement, brute-force pixel oracle, properties."""

from __future__ import annotations

import numpy as np
import pytest

import oracles
from fixture_decks import checkerboard_image, noise_image, solid_image
from slidegrade.config import AppConfig
from slidegrade.deck.model import ImageAsset
from slidegrade.features.images import characterize_image, edge_density, to_grayscale
from slidegrade.features.kernels import available_backends

BACKENDS = available_backends()
CONFIG = AppConfig()


def _asset(arr: np.ndarray) -> ImageAsset:
    return ImageAsset(slide_index=1, format="png", width_px=arr.shape[1],
                      height_px=arr.shape[0], pixel_data=arr)


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


def test_compiled_backend_is_available():
    # the build must produce the extension in this environment
    assert "compiled" in BACKENDS
    assert "numpy" in BACKENDS


@pytest.mark.parametrize("image", [
    solid_image(16, 16, (255, 0, 0)),
    checkerboard_image(32, 32, 8),
    noise_image(24, 24, seed=3),
    checkerboard_image(17, 23, 5, (10, 200, 30), (240, 240, 10)),  # non-square, odd sizes
])
def test_backends_agree_with_pixel_oracle(backend, image):
    gray = np.ascontiguousarray(to_grayscale(image))
    mag = np.asarray(backend.sobel_magnitude(gray))
    oracle_mag = oracles.oracle_sobel_magnitude(oracles.oracle_grayscale(image.tolist()))
    assert mag.shape == image.shape[:2]
    assert np.allclose(mag, np.array(oracle_mag), atol=1e-9)
    colors = backend.quantized_color_count(np.ascontiguousarray(image), 4)
    assert colors == oracles.oracle_color_count(image.tolist(), 4)


def test_backends_agree_with_each_other_exactly():
    if len(BACKENDS) < 2:
        pytest.skip("only one backend importable")
    image = noise_image(48, 48, seed=9)
    gray = np.ascontiguousarray(to_grayscale(image))
    results = {
        name: np.asarray(mod.sobel_magnitude(gray)) for name, mod in BACKENDS.items()
    }
    values = list(results.values())
    assert np.array_equal(values[0], values[1])
    counts = {name: mod.quantized_color_count(np.ascontiguousarray(image), 4)
              for name, mod in BACKENDS.items()}
    assert len(set(counts.values())) == 1


def test_solid_red_image_is_logo_with_zero_density():
    feats = characterize_image(_asset(solid_image(64, 64, (255, 0, 0))), CONFIG)
    assert feats.edge_density == 0.0
    assert feats.color_count_quantized == 1
    assert feats.classification == "logo"


def test_checkerboard_matches_oracle_and_is_clipart():
    image = checkerboard_image(64, 64, 8)
    feats = characterize_image(_asset(image), CONFIG)
    expected = oracles.oracle_edge_density(image.tolist(), CONFIG.edge_gradient_threshold)
    assert feats.edge_density == pytest.approx(expected, abs=1e-12)
    assert feats.color_count_quantized == 2
    assert feats.classification == "clipart"


def test_noise_image_is_photograph():
    feats = characterize_image(_asset(noise_image(64, 64, seed=7)), CONFIG)
    assert feats.color_count_quantized >= CONFIG.photo_color_min
    assert feats.classification == "photograph"


def test_undecodable_image_is_unknown():
    asset = ImageAsset(slide_index=1, format="png", width_px=0, height_px=0, pixel_data=None)
    feats = characterize_image(asset, CONFIG)
    assert feats.classification == "unknown"


def test_edge_density_bounded():
    for image in (solid_image(8, 8, (1, 2, 3)), noise_image(32, 32, 5),
                  checkerboard_image(40, 40, 4)):
        d = edge_density(image, CONFIG.edge_gradient_threshold)
        assert 0.0 <= d <= 1.0


def test_checkerboard_shift_invariance_on_interior():
    """Translating a periodic pattern by whole cells leaves the interior
    edge map unchanged."""
    cell = 8
    big = checkerboard_image(96, 96, cell)
    shifted = np.roll(np.roll(big, cell, axis=0), cell, axis=1)
    t = CONFIG.edge_gradient_threshold
    from slidegrade.features.kernels import sobel_magnitude

    mag_a = np.asarray(sobel_magnitude(np.ascontiguousarray(to_grayscale(big))))
    mag_b = np.asarray(sobel_magnitude(np.ascontiguousarray(to_grayscale(shifted))))
    interior = (slice(cell, -cell), slice(cell, -cell))
    assert np.array_equal(mag_a[interior] > t, mag_b[interior] > t)


def test_classification_thresholds_are_configurable():
    image = checkerboard_image(64, 64, 8)
    # raise the edge cutoff far enough that the two-color checkerboard
    # reads as a logo instead of clip art
    relaxed = AppConfig(logo_edge_max=0.99)
    assert characterize_image(_asset(image), relaxed).classification == "logo"
    strict_photo = AppConfig(photo_color_min=2)
    assert characterize_image(_asset(image), strict_photo).classification == "photograph"


def test_gradient_exactness_on_integer_patterns():
    # integer-valued grays keep Sobel sums exact in float64; both the
    # kernel and the oracle must produce identical comparisons
    image = checkerboard_image(32, 32, 4)
    gray = np.ascontiguousarray(to_grayscale(image))
    from slidegrade.features.kernels import sobel_magnitude

    mag = np.asarray(sobel_magnitude(gray))
    oracle_mag = np.array(oracles.oracle_sobel_magnitude(oracles.oracle_grayscale(image.tolist())))
    assert np.array_equal(mag, oracle_mag)
