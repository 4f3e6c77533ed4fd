"""Synthetic brain-like phantoms with known ground truth.

A phantom is a dark frame holding a bright elliptical "brain" whose tissue
stays below the builtin predictor's 0.8 brightness threshold, plus one small
high-intensity "tumor" blob with a radial falloff. The falloff matters: with
segment-mean fill, a uniformly bright segment would be invisible to the blob
rule, so tumor pixels are arranged to share segments with dimmer tissue.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .image import save_gray_png, save_mask_png

_POLY_SIDES = 24


@dataclass(frozen=True)
class Phantom:
    image: np.ndarray
    brain_mask: np.ndarray
    tumor_mask: np.ndarray
    tumor_polygon: list[tuple[int, int]]


def generate_phantom(size: int, rng: np.random.Generator) -> Phantom:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    cx = size / 2.0 + rng.uniform(-0.04, 0.04) * size
    cy = size / 2.0 + rng.uniform(-0.04, 0.04) * size
    ax = rng.uniform(0.30, 0.40) * size
    ay = rng.uniform(0.26, 0.38) * size
    brain = ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2 <= 1.0

    image = np.full((size, size), 0.02)
    image += rng.normal(0.0, 0.01, size=(size, size))

    base = rng.uniform(0.55, 0.70)
    # Gentle shading plus smoothed speckle so the segmenter sees texture.
    shade = 0.05 * ((xx - cx) / size + (yy - cy) / size)
    speckle = ndimage.gaussian_filter(rng.normal(0.0, 1.0, size=(size, size)), 3.0)
    speckle *= 0.03 / max(1e-9, np.abs(speckle).max())
    tissue = np.clip(base + shade + speckle, 0.45, 0.78)
    image = np.where(brain, tissue, image)

    # Tumor center placed well inside the ellipse.
    t_r = rng.uniform(0.045, 0.075) * size
    theta = rng.uniform(0.0, 2.0 * math.pi)
    rho = rng.uniform(0.0, 0.5)
    tx = cx + rho * (ax - t_r - 2.0) * math.cos(theta)
    ty = cy + rho * (ay - t_r - 2.0) * math.sin(theta)
    dist = np.hypot(xx - tx, yy - ty)
    tumor = dist <= t_r
    profile = 0.95 - 0.35 * (dist / t_r) ** 2
    image = np.where(tumor, np.maximum(image, profile), image)

    polygon = [
        (
            int(round(tx + t_r * math.cos(2.0 * math.pi * k / _POLY_SIDES))),
            int(round(ty + t_r * math.sin(2.0 * math.pi * k / _POLY_SIDES))),
        )
        for k in range(_POLY_SIDES)
    ]
    return Phantom(
        image=np.clip(image, 0.0, 1.0),
        brain_mask=brain,
        tumor_mask=tumor,
        tumor_polygon=polygon,
    )


def write_phantom_set(out_dir, count: int, size: int, seed: int) -> list[str]:
    """Write PNG phantoms with truth masks, VIA annotations, and a manifest.

    Returns the image filenames, in order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    names = []
    via: dict[str, dict] = {}
    for i in range(count):
        ph = generate_phantom(size, rng)
        name = f"phantom_{i:03d}.png"
        save_gray_png(ph.image, out / name)
        save_mask_png(ph.brain_mask, out / f"phantom_{i:03d}_brain.png")
        save_mask_png(ph.tumor_mask, out / f"phantom_{i:03d}_tumor.png")
        via[name] = {
            "filename": name,
            "regions": [
                {
                    "shape_attributes": {
                        "name": "polygon",
                        "all_points_x": [p[0] for p in ph.tumor_polygon],
                        "all_points_y": [p[1] for p in ph.tumor_polygon],
                    },
                    "region_attributes": {},
                }
            ],
        }
        names.append(name)

    with open(out / "annotations.json", "w", encoding="utf-8") as fh:
        json.dump(via, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "manifest.txt", "w", encoding="utf-8") as fh:
        fh.writelines(name + "\n" for name in names)
    return names
