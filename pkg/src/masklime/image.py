"""Grayscale raster handling and binary mask geometry.

Conventions used across the package:

* a grayscale image is a 2-D ``float64`` array with values in ``[0, 1]``,
  shape ``(height, width)``, row-major;
* a binary mask is a 2-D ``bool`` array of the same layout;
* a polygon is a sequence of ``(x, y)`` vertex pairs in pixel coordinates.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import DegeneratePolygon, ShapeMismatch, UnreadableImage, ZeroDimension

_ACCEPTED_FORMATS = ("PNG", "JPEG")


def load_gray(path) -> np.ndarray:
    """Load a PNG or JPEG file as a grayscale image in [0, 1].

    Multi-channel inputs are reduced by the unweighted channel mean (alpha,
    when present, is dropped rather than averaged in).
    """
    try:
        with Image.open(path) as im:
            if im.format not in _ACCEPTED_FORMATS:
                raise UnreadableImage(f"{path}: format {im.format!r} is not PNG/JPEG")
            if im.mode == "P":
                im = im.convert("RGB")
            arr = np.asarray(im)
    except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
        raise UnreadableImage(f"{path}: {exc}") from exc

    raw_dtype = arr.dtype
    if arr.ndim == 3:
        if arr.shape[2] == 4:
            arr = arr[:, :, :3]
        arr = arr.mean(axis=2)
    arr = arr.astype(np.float64)

    if arr.size == 0:
        raise ZeroDimension(f"{path}: image has a zero-length side")

    if np.issubdtype(raw_dtype, np.integer):
        arr = arr / (65535.0 if raw_dtype.itemsize > 1 else 255.0)
    return np.clip(arr, 0.0, 1.0)


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resample with bilinear interpolation, half-pixel-center aligned.

    Source coordinates are clamped at the borders (no wrap-around), so the
    output never extrapolates beyond the input value range.
    """
    if out_h < 1 or out_w < 1:
        raise ZeroDimension(f"target size {out_h}x{out_w}")
    in_h, in_w = img.shape
    if in_h < 1 or in_w < 1:
        raise ZeroDimension("input image has a zero-length side")

    sy = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(sy).astype(int)
    x0 = np.floor(sx).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]

    top = img[np.ix_(y0, x0)] * (1.0 - fx) + img[np.ix_(y0, x1)] * fx
    bot = img[np.ix_(y1, x0)] * (1.0 - fx) + img[np.ix_(y1, x1)] * fx
    out = top * (1.0 - fy) + bot * fy
    return np.clip(out, 0.0, 1.0)


def resize_normalize(img: np.ndarray, side: int = 224) -> np.ndarray:
    """Resize to a square ``side x side`` raster, values kept in [0, 1]."""
    return bilinear_resize(img, side, side)


def rasterize_polygon(poly, width: int, height: int) -> np.ndarray:
    """Rasterize a polygon by the even-odd rule sampled at pixel centers.

    Pixel ``(x, y)`` is set iff its center ``(x + 0.5, y + 0.5)`` lies inside
    the polygon; centers exactly on the boundary count as inside.
    """
    verts = [(float(x), float(y)) for x, y in poly]
    if len(set(verts)) < 3:
        raise DegeneratePolygon(f"need >= 3 distinct vertices, got {len(set(verts))}")

    px = np.arange(width)[None, :] + 0.5
    py = np.arange(height)[:, None] + 0.5
    inside = np.zeros((height, width), dtype=bool)
    on_edge = np.zeros((height, width), dtype=bool)

    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        # Parity flip: ray cast toward +x, half-open in y so vertices are
        # counted once. Horizontal edges never flip parity.
        if y1 != y2:
            crosses = (y1 > py) != (y2 > py)
            t = (py - y1) / (y2 - y1)
            xi = x1 + t * (x2 - x1)
            inside ^= crosses & (px < xi)
        # Boundary tie rule: centers on the segment itself are inside.
        ex, ey = x2 - x1, y2 - y1
        seg_len2 = ex * ex + ey * ey
        if seg_len2 == 0.0:
            on_edge |= (np.abs(px - x1) < 1e-9) & (np.abs(py - y1) < 1e-9)
            continue
        cross = (px - x1) * ey - (py - y1) * ex
        proj = (px - x1) * ex + (py - y1) * ey
        on_edge |= (np.abs(cross) <= 1e-9 * max(1.0, seg_len2)) & (proj >= 0.0) & (proj <= seg_len2)

    return inside | on_edge


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 4:
        return ndimage.generate_binary_structure(2, 1)
    if connectivity == 8:
        return ndimage.generate_binary_structure(2, 2)
    raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


def connected_components(mask: np.ndarray, connectivity: int = 8) -> list[np.ndarray]:
    """Split a mask into connected components.

    Returns one boolean mask per component, sorted by area descending;
    area ties are broken by the smaller first set pixel in row-major order.
    """
    labeled, count = ndimage.label(mask, structure=_structure(connectivity))
    if count == 0:
        return []
    flat = labeled.ravel()
    areas = np.bincount(flat, minlength=count + 1)
    first = np.full(count + 1, flat.size, dtype=np.int64)
    seen_vals, seen_idx = np.unique(flat, return_index=True)
    first[seen_vals] = seen_idx
    order = sorted(range(1, count + 1), key=lambda lab: (-int(areas[lab]), int(first[lab])))
    return [labeled == lab for lab in order]


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Fill regions not reachable from the border through unset pixels.

    The background is flood-filled from every border pixel with
    4-connectivity; anything that is not exterior background becomes part of
    the result, so the output is a superset of the input.
    """
    background = ~mask
    labeled, count = ndimage.label(background, structure=_structure(4))
    if count == 0:
        return mask.copy()
    border_labels = np.unique(
        np.concatenate(
            [labeled[0, :], labeled[-1, :], labeled[:, 0], labeled[:, -1]]
        )
    )
    border_labels = border_labels[border_labels > 0]
    exterior = np.isin(labeled, border_labels)
    return ~exterior


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two masks; 0 when both are empty."""
    if a.shape != b.shape:
        raise ShapeMismatch(f"{a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union


def save_gray_png(img: np.ndarray, path) -> None:
    """Write a [0, 1] image as an 8-bit grayscale PNG."""
    data = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PNG")


def save_mask_png(mask: np.ndarray, path) -> None:
    """Write a mask as a 0/255 single-channel PNG."""
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(path, format="PNG")
