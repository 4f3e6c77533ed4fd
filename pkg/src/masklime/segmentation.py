"""Quick-shift superpixel segmentation.

Mode seeking in the joint feature space ``(ratio * intensity * 255, x, y)``:
every pixel gets a kernel density estimate over a local window, links to its
nearest higher-density neighbor, and links longer than ``max_dist`` are cut.
The trees that remain are the segments. The 255 color scale puts a unit
intensity step on the same footing as the 8-bit quantization used elsewhere,
so ``ratio`` meaningfully trades intensity against spatial distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuickShiftParams:
    kernel_size: float = 4.0
    max_dist: float = 200.0
    ratio: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.kernel_size < 1:
            raise ValueError(f"kernel_size must be >= 1, got {self.kernel_size}")
        if self.max_dist <= 0:
            raise ValueError(f"max_dist must be > 0, got {self.max_dist}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio must be in [0, 1], got {self.ratio}")


@dataclass(frozen=True)
class SegmentMap:
    """Per-pixel segment labels 0..num_segments-1, each present at least once."""

    labels: np.ndarray
    num_segments: int

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def _window_offsets(radius: int):
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            yield dy, dx


def _shift_slices(dy: int, dx: int, h: int, w: int):
    """Index slices for pixel pairs (center, center+offset), both in bounds."""
    ay = slice(max(0, -dy), h - max(0, dy))
    ax = slice(max(0, -dx), w - max(0, dx))
    by = slice(max(0, dy), h + min(0, dy))
    bx = slice(max(0, dx), w + min(0, dx))
    return (ay, ax), (by, bx)


def quickshift_segment(img: np.ndarray, params: QuickShiftParams) -> SegmentMap:
    h, w = img.shape
    color = params.ratio * img * 255.0
    win = math.ceil(3.0 * params.kernel_size)
    two_ks2 = 2.0 * params.kernel_size ** 2

    density = np.zeros((h, w))
    for dy, dx in _window_offsets(win):
        (ay, ax), (by, bx) = _shift_slices(dy, dx, h, w)
        d2 = (color[ay, ax] - color[by, bx]) ** 2 + (dy * dy + dx * dx)
        density[ay, ax] += np.exp(-d2 / two_ks2)

    # Tiny seeded jitter so equal-density plateaus resolve reproducibly.
    rng = np.random.default_rng(params.seed)
    density = density + rng.uniform(0.0, 1e-6, size=(h, w))

    flat_index = np.arange(h * w).reshape(h, w)
    parent = flat_index.copy()
    best_d2 = np.full((h, w), np.inf)
    for dy, dx in _window_offsets(win):
        if dy == 0 and dx == 0:
            continue
        (ay, ax), (by, bx) = _shift_slices(dy, dx, h, w)
        d2 = (color[ay, ax] - color[by, bx]) ** 2 + (dy * dy + dx * dx)
        better = (density[by, bx] > density[ay, ax]) & (d2 < best_d2[ay, ax])
        best_d2[ay, ax] = np.where(better, d2, best_d2[ay, ax])
        parent[ay, ax] = np.where(better, flat_index[by, bx], parent[ay, ax])

    # Links longer than max_dist are cut: the pixel becomes a root.
    cut = best_d2 > params.max_dist ** 2
    parent[cut] = flat_index[cut]

    roots = parent.ravel()
    while True:
        hopped = roots[roots]
        if np.array_equal(hopped, roots):
            break
        roots = hopped

    # Renumber so segment IDs follow first row-major appearance.
    uniq, first_idx = np.unique(roots, return_index=True)
    lut = np.empty(h * w, dtype=np.int64)
    lut[uniq[np.argsort(first_idx)]] = np.arange(uniq.size)
    labels = lut[roots].reshape(h, w)
    return SegmentMap(labels=labels, num_segments=int(uniq.size))


def segment_pixel_counts(seg: SegmentMap) -> dict[int, int]:
    """Pixel count per segment ID; counts sum to width * height."""
    counts = np.bincount(seg.labels.ravel(), minlength=seg.num_segments)
    return {i: int(c) for i, c in enumerate(counts)}
