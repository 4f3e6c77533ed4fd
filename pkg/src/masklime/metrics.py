"""Evaluation metrics: classification rates, coverage fractions, the
Mann-Whitney U comparison, stratified k-fold splitting, and VGG Image
Annotator polygon ingestion."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import EmptyAnnotation, EmptyMask, InsufficientClassMembers, ShapeMismatch
from .image import rasterize_polygon

_EXACT_LIMIT = 12  # total sample size at or below which the exact test runs


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")


def classification_metrics(c: ConfusionCounts) -> dict[str, float | None]:
    """Accuracy, precision, recall, F1. Undefined denominators yield None
    (never 0: silent zeros corrupt averages)."""
    total = c.tp + c.tn + c.fp + c.fn
    if total == 0:
        raise ValueError("confusion counts are all zero")
    accuracy = (c.tp + c.tn) / total
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp > 0 else None
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn > 0 else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1}


def _coverage(expl: np.ndarray, reference: np.ndarray) -> float:
    if expl.shape != reference.shape:
        raise ShapeMismatch(f"{expl.shape} vs {reference.shape}")
    return np.count_nonzero(expl & reference) / np.count_nonzero(reference)


def tumor_segment_coverage(expl: np.ndarray, tumor: np.ndarray) -> float:
    """Fraction of annotated tumor pixels covered by the explanation."""
    if expl.shape != tumor.shape:
        raise ShapeMismatch(f"{expl.shape} vs {tumor.shape}")
    if not tumor.any():
        raise EmptyAnnotation("tumor annotation mask has zero area")
    return _coverage(expl, tumor)


def brain_mask_segment_coverage(expl: np.ndarray, brain: np.ndarray) -> float:
    """Fraction of brain-mask pixels covered by the explanation."""
    if expl.shape != brain.shape:
        raise ShapeMismatch(f"{expl.shape} vs {brain.shape}")
    if not brain.any():
        raise EmptyMask("brain mask has zero area")
    return _coverage(expl, brain)


def _u_statistic(a: np.ndarray, b: np.ndarray) -> float:
    gt = (a[:, None] > b[None, :]).sum()
    eq = (a[:, None] == b[None, :]).sum()
    return float(gt) + 0.5 * float(eq)


def mann_whitney_u(a, b) -> dict[str, float]:
    """Mann-Whitney U with a two-sided p-value.

    Exact when the pooled sample has at most 12 values: every assignment of
    pooled values to the first group is enumerated and p is the fraction of
    assignments whose U deviates from the null mean at least as much as the
    observed one. Larger samples use the normal approximation with tie and
    continuity corrections.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    n, m = a.size, b.size
    u = _u_statistic(a, b)
    mean = n * m / 2.0

    if n + m <= _EXACT_LIMIT:
        pooled = np.concatenate([a, b])
        observed_dev = abs(u - mean)
        hits = 0
        total = 0
        indices = range(n + m)
        for subset in combinations(indices, n):
            mask = np.zeros(n + m, dtype=bool)
            mask[list(subset)] = True
            u_perm = _u_statistic(pooled[mask], pooled[~mask])
            if abs(u_perm - mean) >= observed_dev - 1e-12:
                hits += 1
            total += 1
        return {"u": u, "p_two_sided": hits / total}

    pooled = np.concatenate([a, b])
    big_n = n + m
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts ** 3) - tie_counts).sum()) / (big_n * (big_n - 1))
    sigma2 = (n * m / 12.0) * ((big_n + 1) - tie_term)
    if sigma2 <= 0:
        return {"u": u, "p_two_sided": 1.0}
    z = max(0.0, abs(u - mean) - 0.5) / math.sqrt(sigma2)
    p = math.erfc(z / math.sqrt(2.0))
    return {"u": u, "p_two_sided": min(1.0, max(0.0, p))}


def stratified_kfold(labels, k: int, seed: int = 0) -> list[list[int]]:
    """Disjoint index folds with per-class counts balanced within 1.

    Each class is shuffled (seeded) and dealt round-robin into the folds.
    """
    labels = list(labels)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if any(lab not in (0, 1) for lab in labels):
        raise ValueError("labels must be 0 or 1")

    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.array([i for i, lab in enumerate(labels) if lab == cls], dtype=np.int64)
        if idx.size < k:
            raise InsufficientClassMembers(
                f"class {cls} has {idx.size} members, need >= {k}"
            )
        rng.shuffle(idx)
        for position, index in enumerate(idx):
            folds[position % k].append(int(index))
    return [sorted(f) for f in folds]


def load_via_annotations(path) -> dict[str, list[list[tuple[float, float]]]]:
    """Read VGG Image Annotator JSON into filename -> list of polygons.

    Accepts both the bare metadata dict and project exports wrapping it in
    ``_via_img_metadata``; regions may be a list (current VIA) or a dict
    (older exports). Non-polygon shapes are skipped.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if "_via_img_metadata" in data and isinstance(data["_via_img_metadata"], dict):
        data = data["_via_img_metadata"]

    out: dict[str, list[list[tuple[float, float]]]] = {}
    for entry in data.values():
        if not isinstance(entry, dict) or "filename" not in entry:
            continue
        regions = entry.get("regions", [])
        if isinstance(regions, dict):
            regions = list(regions.values())
        polys = []
        for region in regions:
            shape = region.get("shape_attributes", {})
            if shape.get("name") != "polygon":
                continue
            xs = shape.get("all_points_x", [])
            ys = shape.get("all_points_y", [])
            polys.append([(float(x), float(y)) for x, y in zip(xs, ys)])
        out[entry["filename"]] = polys
    return out


def tumor_mask_from_polygons(polys, width: int, height: int) -> np.ndarray:
    """Union of rasterized annotation polygons."""
    mask = np.zeros((height, width), dtype=bool)
    for poly in polys:
        mask |= rasterize_polygon(poly, width, height)
    return mask
