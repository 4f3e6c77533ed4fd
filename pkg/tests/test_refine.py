import numpy as np
import pytest

from masklime.errors import ShapeMismatch
from masklime.explainer import Heatmap
from masklime.maskgen import BrainMaskResult
from masklime.refine import RefineParams, explanation_pixels, refine_heatmap
from masklime.segmentation import SegmentMap


def _stripe_seg(rows_per_segment=2, num_segments=5, width=10):
    labels = np.repeat(np.arange(num_segments), rows_per_segment)[:, None]
    labels = np.tile(labels, (1, width))
    return SegmentMap(labels=labels, num_segments=num_segments)


def _result(mask, degenerate=None):
    return BrainMaskResult(mask=mask, detector="canny", degenerate=degenerate)


class TestRefineHeatmap:
    def test_boundary_fraction_retained(self):
        # Segment 0 has exactly 8 of 10 pixels inside: 0.8 >= 0.8 keeps it.
        seg = SegmentMap(labels=np.zeros((1, 10), dtype=np.int64), num_segments=1)
        mask = np.zeros((1, 10), dtype=bool)
        mask[0, :8] = True
        hm = Heatmap(importances={0: 0.4}, intercept=0.0)
        out = refine_heatmap(hm, seg, _result(mask))
        assert out.importances[0] == 0.4

    def test_below_boundary_zeroed(self):
        seg = SegmentMap(labels=np.zeros((1, 10), dtype=np.int64), num_segments=1)
        mask = np.zeros((1, 10), dtype=bool)
        mask[0, :7] = True
        hm = Heatmap(importances={0: 0.4}, intercept=0.0)
        out = refine_heatmap(hm, seg, _result(mask))
        assert out.importances[0] == 0.0

    def test_zeroed_exactly(self):
        seg = _stripe_seg()
        hm = Heatmap(importances={i: 0.1 * (i + 1) for i in range(5)}, intercept=0.05)
        mask = np.zeros(seg.labels.shape, dtype=bool)
        mask[seg.labels <= 1] = True
        out = refine_heatmap(hm, seg, _result(mask))
        assert out.importances[0] == 0.1
        assert out.importances[1] == 0.2
        for sid in (2, 3, 4):
            assert out.importances[sid] == 0.0
        assert out.intercept == 0.05
        assert out.refined_with == "canny"

    def test_full_mask_keeps_everything(self):
        seg = _stripe_seg()
        hm = Heatmap(importances={i: float(i) - 2.0 for i in range(5)}, intercept=0.3)
        out = refine_heatmap(hm, seg, _result(np.ones(seg.labels.shape, dtype=bool)))
        assert out.importances == hm.importances
        assert out.refined_with == "canny"
        assert out.warnings == ()

    def test_degenerate_falls_back_with_warning(self):
        seg = _stripe_seg()
        hm = Heatmap(importances={i: 0.1 for i in range(5)}, intercept=0.0)
        out = refine_heatmap(
            hm, seg, _result(np.zeros(seg.labels.shape, dtype=bool), degenerate="blank")
        )
        assert out.importances == hm.importances
        assert out.refined_with == "canny"
        assert len(out.warnings) == 1
        assert "blank" in out.warnings[0]

    def test_degenerate_without_fallback_refines_anyway(self):
        seg = _stripe_seg()
        hm = Heatmap(importances={i: 0.1 for i in range(5)}, intercept=0.0)
        params = RefineParams(fallback_on_degenerate=False)
        out = refine_heatmap(
            hm, seg, _result(np.zeros(seg.labels.shape, dtype=bool), degenerate="blank"), params
        )
        assert all(v == 0.0 for v in out.importances.values())
        assert out.warnings == ()

    def test_idempotent(self):
        seg = _stripe_seg()
        hm = Heatmap(importances={i: 0.1 * (5 - i) for i in range(5)}, intercept=0.0)
        mask = seg.labels < 3
        once = refine_heatmap(hm, seg, _result(mask))
        twice = refine_heatmap(once, seg, _result(mask))
        assert once.importances == twice.importances

    def test_monotone_in_inside_fraction(self, rng):
        seg = _stripe_seg()
        hm = Heatmap(importances={i: 1.0 for i in range(5)}, intercept=0.0)
        mask = rng.random(seg.labels.shape) < 0.6
        kept = []
        for frac in (0.2, 0.5, 0.8, 1.0):
            out = refine_heatmap(hm, seg, _result(mask), RefineParams(inside_fraction=frac))
            kept.append(sum(1 for v in out.importances.values() if v != 0.0))
        assert kept == sorted(kept, reverse=True)

    def test_shape_mismatch_rejected(self):
        seg = _stripe_seg()
        hm = Heatmap(importances={i: 0.1 for i in range(5)}, intercept=0.0)
        with pytest.raises(ShapeMismatch):
            refine_heatmap(hm, seg, _result(np.ones((3, 3), dtype=bool)))
        short = Heatmap(importances={0: 0.1}, intercept=0.0)
        with pytest.raises(ShapeMismatch):
            refine_heatmap(short, seg, _result(np.ones(seg.labels.shape, dtype=bool)))

    def test_params_validated(self):
        with pytest.raises(ValueError):
            RefineParams(inside_fraction=0.0)
        with pytest.raises(ValueError):
            RefineParams(inside_fraction=1.5)


class TestExplanationPixels:
    def test_counts_match_segments(self):
        seg = _stripe_seg()
        hm = Heatmap(importances={0: 0.5, 1: 0.3, 2: -0.1, 3: 0.0, 4: 0.2}, intercept=0.0)
        px = explanation_pixels(hm, seg, 2)
        assert np.count_nonzero(px) == 2 * 20
        assert np.all(px[seg.labels == 0])
        assert np.all(px[seg.labels == 1])

    def test_no_positive_segments_empty(self):
        seg = _stripe_seg()
        hm = Heatmap(importances={i: -0.1 for i in range(5)}, intercept=0.0)
        assert not explanation_pixels(hm, seg, 3).any()

    def test_refined_pixels_mostly_inside_mask(self, rng):
        # With inside_fraction = 1.0 every retained segment sits wholly in
        # the mask, so the explanation pixels are a subset of it.
        seg = _stripe_seg()
        hm = Heatmap(importances={i: 1.0 for i in range(5)}, intercept=0.0)
        mask = seg.labels.copy() % 2 == 0
        out = refine_heatmap(hm, seg, _result(mask), RefineParams(inside_fraction=1.0))
        px = explanation_pixels(out, seg, 5)
        assert px.any()
        assert np.all(mask[px])
