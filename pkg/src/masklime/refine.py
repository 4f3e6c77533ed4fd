"""Heatmap refinement against the brain mask.

A segment keeps its importance iff at least ``inside_fraction`` of its pixels
fall inside the brain mask; everything else is zeroed exactly. Degenerate
masks fall back to the unrefined heatmap (with a warning) rather than
producing an empty explanation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ShapeMismatch
from .explainer import Heatmap, top_segments
from .maskgen import BrainMaskResult
from .segmentation import SegmentMap


@dataclass(frozen=True)
class RefineParams:
    inside_fraction: float = 0.8
    fallback_on_degenerate: bool = True

    def __post_init__(self):
        if not 0.0 < self.inside_fraction <= 1.0:
            raise ValueError(
                f"inside_fraction must be in (0, 1], got {self.inside_fraction}"
            )


def refine_heatmap(
    hm: Heatmap,
    seg: SegmentMap,
    bm: BrainMaskResult,
    params: RefineParams = RefineParams(),
) -> Heatmap:
    if seg.labels.shape != bm.mask.shape:
        raise ShapeMismatch(f"segment map {seg.labels.shape} vs mask {bm.mask.shape}")
    if len(hm.importances) != seg.num_segments:
        raise ShapeMismatch(
            f"heatmap covers {len(hm.importances)} segments, map has {seg.num_segments}"
        )

    if bm.degenerate is not None and params.fallback_on_degenerate:
        warning = (
            f"brain mask from {bm.detector} is degenerate ({bm.degenerate}); "
            "heatmap left unrefined"
        )
        return replace(
            hm, refined_with=bm.detector, warnings=hm.warnings + (warning,)
        )

    d = seg.num_segments
    totals = np.bincount(seg.labels.ravel(), minlength=d)
    inside = np.bincount(seg.labels[bm.mask].ravel(), minlength=d)
    retained = inside / totals >= params.inside_fraction
    importances = {
        sid: (value if retained[sid] else 0.0) for sid, value in hm.importances.items()
    }
    return replace(hm, importances=importances, refined_with=bm.detector)


def explanation_pixels(hm: Heatmap, seg: SegmentMap, n: int) -> np.ndarray:
    """Union of the pixels of the top-n positive-importance segments."""
    if len(hm.importances) != seg.num_segments:
        raise ShapeMismatch(
            f"heatmap covers {len(hm.importances)} segments, map has {seg.num_segments}"
        )
    ids = top_segments(hm, n)
    if not ids:
        return np.zeros(seg.labels.shape, dtype=bool)
    return np.isin(seg.labels, ids)
