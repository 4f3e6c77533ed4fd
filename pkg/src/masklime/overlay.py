"""Overlay rendering: explanation segments tinted on the source image."""

from __future__ import annotations

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ShapeMismatch
from .explainer import Heatmap, top_segments
from .maskgen import BrainMaskResult
from .segmentation import SegmentMap

_POSITIVE = np.array([0.1, 0.85, 0.1])
_NEGATIVE = np.array([0.9, 0.15, 0.1])
_CONTOUR = np.array([0.15, 0.35, 1.0])
_MAX_ALPHA = 0.5


def _boundary(mask: np.ndarray) -> np.ndarray:
    eroded = ndimage.binary_erosion(
        mask, structure=ndimage.generate_binary_structure(2, 1), border_value=0
    )
    return mask & ~eroded


def render_overlay(
    img: np.ndarray,
    hm: Heatmap,
    seg: SegmentMap,
    n: int,
    bm: BrainMaskResult | None = None,
) -> np.ndarray:
    """RGB uint8 rendering: gray base, top-n segments tinted by importance
    (green positive, red negative, alpha scaled by relative magnitude) with
    1 px segment boundaries; the brain-mask contour in blue when given."""
    if img.shape != seg.labels.shape:
        raise ShapeMismatch(f"image {img.shape} vs segment map {seg.labels.shape}")
    if bm is not None and bm.mask.shape != img.shape:
        raise ShapeMismatch(f"image {img.shape} vs brain mask {bm.mask.shape}")

    rgb = np.repeat(img[:, :, None], 3, axis=2).astype(np.float64)
    ids = top_segments(hm, n) if n >= 1 else []
    if ids:
        max_mag = max(abs(hm.importances[sid]) for sid in ids)
        for sid in ids:
            value = hm.importances[sid]
            color = _POSITIVE if value > 0 else _NEGATIVE
            alpha = _MAX_ALPHA * (abs(value) / max_mag if max_mag > 0 else 1.0)
            region = seg.labels == sid
            rgb[region] = (1.0 - alpha) * rgb[region] + alpha * color
        for sid in ids:
            region = seg.labels == sid
            edge = _boundary(region)
            rgb[edge] = _POSITIVE if hm.importances[sid] > 0 else _NEGATIVE

    if bm is not None:
        rgb[_boundary(bm.mask)] = _CONTOUR
    return np.rint(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_overlay_png(rgb: np.ndarray, path) -> None:
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")
