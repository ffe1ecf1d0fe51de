#!/usr/bin/env python3
"""Benchmark the compiled image kernels against the NumPy fallback.

Runs the Sobel gradient and color-quantization kernels over synthetic
images at several sizes and prints a timing table plus speedups. Both
backends must agree bit-for-bit on every input before timings count.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from slidegrade.features.images import to_grayscale
from slidegrade.features.kernels import available_backends


def synthetic_images(seed: int = 42) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    images = {}
    for size in (64, 256, 1024):
        noise = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
        images[f"noise {size}x{size}"] = noise
        ys, xs = np.mgrid[0:size, 0:size]
        mask = ((ys // 16) + (xs // 16)) % 2 == 0
        checker = np.zeros((size, size, 3), dtype=np.uint8)
        checker[mask] = 255
        images[f"checker {size}x{size}"] = checker
    return images


def time_call(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - started)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not importable; run `pip install -e .` first")
    print(f"backends: {', '.join(sorted(backends))}\n")

    images = synthetic_images()
    rows = []
    for name, rgb in images.items():
        gray = np.ascontiguousarray(to_grayscale(rgb))
        rgb_c = np.ascontiguousarray(rgb)

        # correctness gate: identical outputs across backends
        sobel_out = {b: np.asarray(m.sobel_magnitude(gray)) for b, m in backends.items()}
        color_out = {b: m.quantized_color_count(rgb_c, 4) for b, m in backends.items()}
        reference = next(iter(sobel_out.values()))
        assert all(np.array_equal(reference, out) for out in sobel_out.values()), name
        assert len(set(color_out.values())) == 1, name

        timings = {}
        for backend_name, module in backends.items():
            timings[(backend_name, "sobel")] = time_call(
                module.sobel_magnitude, gray, repeats=args.repeats)
            timings[(backend_name, "colors")] = time_call(
                module.quantized_color_count, rgb_c, 4, repeats=args.repeats)
        rows.append((name, timings))

    header = f"{'image':>18} | {'kernel':>6} | {'numpy (ms)':>10} | {'compiled (ms)':>13} | speedup"
    print(header)
    print("-" * len(header))
    for name, timings in rows:
        for kernel in ("sobel", "colors"):
            numpy_ms = timings.get(("numpy", kernel), float("nan")) * 1000
            compiled = timings.get(("compiled", kernel))
            if compiled is None:
                print(f"{name:>18} | {kernel:>6} | {numpy_ms:>10.3f} | {'n/a':>13} |")
                continue
            compiled_ms = compiled * 1000
            speedup = numpy_ms / compiled_ms if compiled_ms else float("inf")
            print(f"{name:>18} | {kernel:>6} | {numpy_ms:>10.3f} | {compiled_ms:>13.3f} | "
                  f"{speedup:>6.2f}x")


if __name__ == "__main__":
    main()
