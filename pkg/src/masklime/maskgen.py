"""Brain-mask generation from edges.

Each detector produces a binary edge/threshold map; the brain mask is the
largest 8-connected component of that map with its holes filled. Degenerate
outcomes (blank, full-image, blank-interior) are flagged, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import UniformImage
from .image import connected_components, fill_holes

_LAPLACE_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])

# Gradient-direction bins (degrees mod 180) paired with the two neighbors to
# compare against during non-maximum suppression. Rows grow downward, so the
# 45-degree gradient direction points to (dy, dx) = (+1, +1).
_NMS_NEIGHBORS = {
    0: ((0, 1), (0, -1)),
    1: ((1, 1), (-1, -1)),
    2: ((1, 0), (-1, 0)),
    3: ((-1, 1), (1, -1)),
}


@dataclass(frozen=True)
class EdgeDetector:
    kind: str
    gaussian_sigma: float = 1.4
    canny_low: float = 0.1
    canny_high: float = 0.2
    laplace_threshold: float = 0.04

    def __post_init__(self):
        if self.kind not in ("canny", "laplace", "otsu"):
            raise ValueError(f"detector kind must be canny/laplace/otsu, got {self.kind!r}")
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be >= 0")
        if min(self.canny_low, self.canny_high, self.laplace_threshold) < 0:
            raise ValueError("thresholds must be >= 0")
        if self.canny_low >= self.canny_high:
            raise ValueError(
                f"canny_low must be < canny_high, got {self.canny_low} >= {self.canny_high}"
            )


@dataclass(frozen=True)
class BrainMaskResult:
    mask: np.ndarray
    detector: str
    degenerate: str | None = None


def _blur(img: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return img
    return ndimage.gaussian_filter(img, sigma, mode="nearest")


def canny_edges(img: np.ndarray, det: EdgeDetector) -> np.ndarray:
    """Canny pipeline: blur, Sobel, 4-bin non-maximum suppression, hysteresis."""
    smooth = _blur(img, det.gaussian_sigma)
    # Sobel kernels have gain 4 on a unit step; dividing keeps magnitudes in
    # the same [0, 1] scale the thresholds are specified on.
    gx = ndimage.sobel(smooth, axis=1, mode="nearest") / 4.0
    gy = ndimage.sobel(smooth, axis=0, mode="nearest") / 4.0
    mag = np.hypot(gx, gy)
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    bins = ((angle + 22.5) // 45.0).astype(int) % 4

    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    nms = np.zeros_like(mag)
    for b, ((dy1, dx1), (dy2, dx2)) in _NMS_NEIGHBORS.items():
        n1 = padded[1 + dy1 : 1 + dy1 + h, 1 + dx1 : 1 + dx1 + w]
        n2 = padded[1 + dy2 : 1 + dy2 + h, 1 + dx2 : 1 + dx2 + w]
        keep = (bins == b) & (mag >= n1) & (mag >= n2) & (mag > 0)
        nms[keep] = mag[keep]

    strong = nms >= det.canny_high
    weak = nms >= det.canny_low
    labeled, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return np.zeros_like(weak)
    keep_labels = np.unique(labeled[strong])
    keep_labels = keep_labels[keep_labels > 0]
    return np.isin(labeled, keep_labels)


def laplace_edges(img: np.ndarray, det: EdgeDetector) -> np.ndarray:
    """Laplacian-of-Gaussian style edges: |3x3 Laplacian response| above threshold."""
    smooth = _blur(img, det.gaussian_sigma)
    response = ndimage.convolve(smooth, _LAPLACE_KERNEL, mode="nearest")
    return np.abs(response) > det.laplace_threshold


def otsu_threshold(img: np.ndarray) -> int:
    """Otsu threshold on the 256-bin quantization of the image.

    Returns the smallest t in 0..255 maximizing the between-class variance
    w0 * w1 * (mu0 - mu1)^2 of the split q <= t vs q > t. All sums stay
    integer-exact in float64, so no summation-order effects can move the
    argmax.
    """
    q = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.int64)
    hist = np.bincount(q.ravel(), minlength=256)
    if np.count_nonzero(hist) < 2:
        raise UniformImage("single-valued image: between-class variance undefined")

    counts = np.cumsum(hist)
    value_sums = np.cumsum(hist * np.arange(256, dtype=np.int64))
    total_count = int(counts[-1])
    total_sum = int(value_sums[-1])

    best_t, best_var = 0, -1.0
    for t in range(256):
        c0 = int(counts[t])
        c1 = total_count - c0
        if c0 == 0 or c1 == 0:
            continue
        mu0 = value_sums[t] / c0
        mu1 = (total_sum - value_sums[t]) / c1
        var = c0 * c1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_var, best_t = var, t
    return best_t


def otsu_mask(img: np.ndarray) -> np.ndarray:
    """Foreground mask: quantized intensity strictly above the Otsu threshold."""
    t = otsu_threshold(img)
    q = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.int64)
    return q > t


def _edge_map(img: np.ndarray, det: EdgeDetector) -> np.ndarray:
    if det.kind == "canny":
        return canny_edges(img, det)
    if det.kind == "laplace":
        return laplace_edges(img, det)
    return otsu_mask(img)


def brain_mask(img: np.ndarray, det: EdgeDetector) -> BrainMaskResult:
    """Edge map -> largest 8-connected component -> fill holes, with flags.

    Flag precedence: blank (area < 5% of the frame), full-image (> 95%),
    then blank-interior (filling added nothing and the component is so thin
    that a 3x3 erosion empties it, i.e. an open curve with no interior).
    """
    h, w = img.shape
    try:
        edges = _edge_map(img, det)
    except UniformImage:
        return BrainMaskResult(
            mask=np.zeros((h, w), dtype=bool), detector=det.kind, degenerate="blank"
        )

    components = connected_components(edges, connectivity=8)
    if not components:
        return BrainMaskResult(
            mask=np.zeros((h, w), dtype=bool), detector=det.kind, degenerate="blank"
        )
    component = components[0]
    filled = fill_holes(component)

    area = np.count_nonzero(filled)
    fraction = area / (h * w)
    degenerate = None
    if fraction < 0.05:
        degenerate = "blank"
    elif fraction > 0.95:
        degenerate = "full-image"
    else:
        interior_gain = area - np.count_nonzero(component)
        eroded = ndimage.binary_erosion(component, structure=np.ones((3, 3), dtype=bool))
        if interior_gain == 0 and not eroded.any():
            degenerate = "blank-interior"
    return BrainMaskResult(mask=filled, detector=det.kind, degenerate=degenerate)
