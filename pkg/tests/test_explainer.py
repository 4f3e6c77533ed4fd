import math

import numpy as np
import pytest

from masklime.errors import ShapeMismatch, SingularSystem
from masklime.explainer import (
    ExplainerParams,
    Heatmap,
    PerturbationSample,
    explain,
    fit_surrogate,
    heatmap_to_dict,
    kernel_weight,
    realize_image,
    sample_presence_vectors,
    top_segments,
)
from masklime.predictor import Prediction, PredictorHandle
from masklime.segmentation import SegmentMap


def _quadrant_seg(size=16):
    labels = np.zeros((size, size), dtype=np.int64)
    h = size // 2
    labels[:h, h:] = 1
    labels[h:, :h] = 2
    labels[h:, h:] = 3
    return SegmentMap(labels=labels, num_segments=4)


def _samples(Z, y, w):
    return [
        PerturbationSample(
            presence=np.asarray(z, dtype=np.uint8),
            prediction=Prediction(p_no_tumor=1.0 - yi, p_tumor=yi),
            kernel_weight=wi,
        )
        for z, yi, wi in zip(Z, y, w)
    ]


class TestSamplePresenceVectors:
    def test_exhaustive_enumeration_d3(self):
        got = sample_presence_vectors(3, ExplainerParams(num_samples=8))
        want = np.array(
            [
                [1, 1, 1],
                [0, 0, 0],
                [1, 0, 0],
                [0, 1, 0],
                [1, 1, 0],
                [0, 0, 1],
                [1, 0, 1],
                [0, 1, 1],
            ],
            dtype=np.uint8,
        )
        assert np.array_equal(got, want)

    def test_exhaustive_needs_enough_samples(self):
        # 7 < 2^3 forces the Monte-Carlo path even for tiny d.
        got = sample_presence_vectors(3, ExplainerParams(num_samples=7, seed=0))
        assert got.shape == (7, 3)

    def test_single_sample_is_all_ones(self):
        got = sample_presence_vectors(5, ExplainerParams(num_samples=1))
        assert np.array_equal(got, np.ones((1, 5), dtype=np.uint8))

    def test_monte_carlo_shape_and_first_row(self):
        got = sample_presence_vectors(30, ExplainerParams(num_samples=40, seed=3))
        assert got.shape == (40, 30)
        assert got.dtype == np.uint8
        assert np.all(got[0] == 1)
        assert set(np.unique(got)) <= {0, 1}

    def test_monte_carlo_deterministic(self):
        params = ExplainerParams(num_samples=25, seed=11)
        a = sample_presence_vectors(40, params)
        b = sample_presence_vectors(40, params)
        assert np.array_equal(a, b)

    def test_rejects_bad_d(self):
        with pytest.raises(ValueError):
            sample_presence_vectors(0, ExplainerParams())


class TestKernelWeight:
    def test_all_present_is_one(self):
        assert kernel_weight(np.ones(7, dtype=np.uint8)) == pytest.approx(1.0)

    def test_all_absent(self):
        want = math.exp(-1.0 / 0.25 ** 2)
        assert kernel_weight(np.zeros(4, dtype=np.uint8)) == pytest.approx(want)

    def test_half_present(self):
        want = math.exp(-((1.0 - math.sqrt(0.5)) ** 2) / 0.25 ** 2)
        assert kernel_weight(np.array([1, 0], dtype=np.uint8)) == pytest.approx(want)
        assert want == pytest.approx(0.25345, abs=1e-3)

    def test_one_of_four(self):
        want = math.exp(-((1.0 - math.sqrt(0.25)) ** 2) / 0.25 ** 2)
        assert kernel_weight(np.array([0, 1, 0, 0], dtype=np.uint8)) == pytest.approx(want)
        assert want == pytest.approx(math.exp(-4.0))

    def test_wider_kernel_flattens(self):
        z = np.array([1, 0, 0, 0], dtype=np.uint8)
        assert kernel_weight(z, 1.0) > kernel_weight(z, 0.25)

    def test_monotone_in_presence_count(self):
        d = 6
        weights = []
        for m in range(d + 1):
            z = np.zeros(d, dtype=np.uint8)
            z[:m] = 1
            weights.append(kernel_weight(z))
        assert weights == sorted(weights)


class TestRealizeImage:
    def test_all_present_identity(self, rng):
        img = rng.random((16, 16))
        seg = _quadrant_seg()
        out = realize_image(img, seg, np.ones(4, dtype=np.uint8))
        assert np.array_equal(out, img)

    def test_all_absent_segment_mean(self, rng):
        img = rng.random((16, 16))
        seg = _quadrant_seg()
        out = realize_image(img, seg, np.zeros(4, dtype=np.uint8))
        for sid in range(4):
            inside = seg.labels == sid
            assert np.allclose(out[inside], img[inside].mean())

    def test_constant_fill(self, rng):
        img = rng.random((16, 16))
        seg = _quadrant_seg()
        out = realize_image(
            img, seg, np.array([0, 1, 1, 1], dtype=np.uint8), fill_mode="constant", fill_constant=0.5
        )
        assert np.all(out[seg.labels == 0] == 0.5)
        assert np.array_equal(out[seg.labels != 0], img[seg.labels != 0])

    def test_changed_pixels_are_absent_segments(self, rng):
        img = rng.random((16, 16))
        seg = _quadrant_seg()
        presence = np.array([1, 0, 1, 0], dtype=np.uint8)
        out = realize_image(img, seg, presence, fill_mode="constant", fill_constant=-1.0)
        changed = out != img
        absent = ~np.asarray(presence, dtype=bool)[seg.labels]
        assert np.array_equal(changed, absent)

    def test_shape_checks(self, rng):
        img = rng.random((16, 16))
        seg = _quadrant_seg()
        with pytest.raises(ShapeMismatch):
            realize_image(img[:8], seg, np.ones(4, dtype=np.uint8))
        with pytest.raises(ShapeMismatch):
            realize_image(img, seg, np.ones(3, dtype=np.uint8))


class TestFitSurrogate:
    def test_recovers_linear_model(self):
        Z = sample_presence_vectors(4, ExplainerParams(num_samples=16)).astype(float)
        true_b = np.array([0.2, 0.0, 0.3, 0.0])
        y = 0.1 + Z @ true_b
        w = [kernel_weight(z) for z in Z]
        hm = fit_surrogate(_samples(Z, y, w), ridge_lambda=1e-9)
        assert hm.intercept == pytest.approx(0.1, abs=1e-3)
        for i in range(4):
            assert hm.importances[i] == pytest.approx(true_b[i], abs=1e-3)

    def test_constant_target_gives_zero_importances(self):
        Z = sample_presence_vectors(3, ExplainerParams(num_samples=8))
        y = [0.7] * len(Z)
        w = [kernel_weight(z) for z in Z]
        hm = fit_surrogate(_samples(Z, y, w))
        assert hm.intercept == pytest.approx(0.7, abs=1e-8)
        for v in hm.importances.values():
            assert abs(v) < 1e-8

    def test_matches_lstsq_at_zero_lambda(self, rng):
        n, d = 40, 6
        Z = rng.integers(0, 2, size=(n, d)).astype(float)
        y = rng.random(n)
        w = rng.random(n) + 0.1
        X = np.hstack([np.ones((n, 1)), Z])
        sw = np.sqrt(w)
        assert np.linalg.matrix_rank(X * sw[:, None]) == d + 1
        oracle, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
        hm = fit_surrogate(_samples(Z, y, w), ridge_lambda=0.0)
        assert hm.intercept == pytest.approx(oracle[0], abs=1e-8)
        for i in range(d):
            assert hm.importances[i] == pytest.approx(oracle[i + 1], abs=1e-8)

    def test_duplication_invariance(self, rng):
        Z = sample_presence_vectors(3, ExplainerParams(num_samples=8))
        y = rng.random(len(Z))
        w = [kernel_weight(z) for z in Z]
        once = fit_surrogate(_samples(Z, y, w))
        twice = fit_surrogate(_samples(np.vstack([Z, Z]), np.concatenate([y, y]), w + w))
        assert once.intercept == pytest.approx(twice.intercept, abs=1e-12)
        for i in once.importances:
            assert once.importances[i] == pytest.approx(twice.importances[i], abs=1e-12)

    def test_weight_rescaling_invariance(self, rng):
        Z = sample_presence_vectors(3, ExplainerParams(num_samples=8))
        y = rng.random(len(Z))
        w = np.array([kernel_weight(z) for z in Z])
        a = fit_surrogate(_samples(Z, y, w))
        b = fit_surrogate(_samples(Z, y, 7.0 * w))
        for i in a.importances:
            assert a.importances[i] == pytest.approx(b.importances[i], abs=1e-12)

    def test_target_class_zero_mirrors(self, rng):
        Z = sample_presence_vectors(3, ExplainerParams(num_samples=8))
        y = rng.random(len(Z))
        w = [kernel_weight(z) for z in Z]
        pos = fit_surrogate(_samples(Z, y, w), target_class=1)
        neg = fit_surrogate(_samples(Z, y, w), target_class=0)
        assert pos.intercept + neg.intercept == pytest.approx(1.0, abs=1e-10)
        for i in pos.importances:
            assert pos.importances[i] == pytest.approx(-neg.importances[i], abs=1e-10)

    def test_singular_at_zero_lambda(self):
        # Segments 0 and 1 toggle together, so their columns are identical.
        Z = np.array([[1, 1, 1], [0, 0, 1], [1, 1, 0], [0, 0, 0]], dtype=float)
        y = [0.9, 0.2, 0.8, 0.1]
        w = [1.0] * 4
        with pytest.raises(SingularSystem):
            fit_surrogate(_samples(Z, y, w), ridge_lambda=0.0)
        hm = fit_surrogate(_samples(Z, y, w), ridge_lambda=1.0)
        assert set(hm.importances) == {0, 1, 2}

    def test_rejects_nonpositive_weights(self):
        Z = np.array([[1, 0], [0, 1]], dtype=float)
        with pytest.raises(ValueError):
            fit_surrogate(_samples(Z, [0.5, 0.5], [1.0, 0.0]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            fit_surrogate([])


class TestExplain:
    def _mixed_quadrant_image(self, size=16):
        # Quadrant 0 is half very bright, half dark: its mean falls below the
        # blob threshold, so masking it genuinely removes the bright evidence.
        img = np.full((size, size), 0.2)
        h = size // 2
        img[: h // 2, :h] = 0.95
        return img

    def test_bright_segment_dominates(self):
        img = self._mixed_quadrant_image()
        seg = _quadrant_seg()
        handle = PredictorHandle.from_spec("builtin")
        hm = explain(img, seg, handle, ExplainerParams(num_samples=16, seed=0))
        assert top_segments(hm, 1) == [0]
        others = max(abs(hm.importances[i]) for i in (1, 2, 3))
        assert hm.importances[0] > 5 * others

    def test_deterministic(self):
        img = self._mixed_quadrant_image()
        seg = _quadrant_seg()
        handle = PredictorHandle.from_spec("builtin")
        params = ExplainerParams(num_samples=10, seed=4)
        a = explain(img, seg, handle, params)
        b = explain(img, seg, handle, params)
        assert a.importances == b.importances
        assert a.intercept == b.intercept

    def test_batch_limit_does_not_change_result(self):
        img = self._mixed_quadrant_image()
        seg = _quadrant_seg()
        params = ExplainerParams(num_samples=16, seed=0)
        small = explain(img, seg, PredictorHandle.from_spec("builtin", batch_limit=3), params)
        large = explain(img, seg, PredictorHandle.from_spec("builtin", batch_limit=64), params)
        assert small.importances == large.importances

    def test_records_seg_and_seed(self):
        img = self._mixed_quadrant_image()
        seg = _quadrant_seg()
        hm = explain(img, seg, PredictorHandle.from_spec("builtin"), ExplainerParams(num_samples=16, seed=9))
        assert hm.seed == 9
        assert hm.seg is seg
        assert hm.refined_with is None


class TestTopSegments:
    def test_filters_nonpositive(self):
        hm = Heatmap(importances={0: 0.5, 1: -0.2, 2: 0.1, 3: 0.0}, intercept=0.0)
        assert top_segments(hm, 5) == [0, 2]

    def test_tie_prefers_lower_id(self):
        hm = Heatmap(importances={2: 0.3, 1: 0.3, 0: 0.1}, intercept=0.0)
        assert top_segments(hm, 2) == [1, 2]

    def test_prefix_nesting(self, rng):
        imps = {i: float(v) for i, v in enumerate(rng.normal(size=12))}
        hm = Heatmap(importances=imps, intercept=0.0)
        t1, t3, t5 = top_segments(hm, 1), top_segments(hm, 3), top_segments(hm, 5)
        assert t3[: len(t1)] == t1
        assert t5[: len(t3)] == t3

    def test_rejects_bad_n(self):
        hm = Heatmap(importances={0: 1.0}, intercept=0.0)
        with pytest.raises(ValueError):
            top_segments(hm, 0)


class TestHeatmapToDict:
    def test_plain(self):
        hm = Heatmap(importances={1: 0.25, 0: -0.5}, intercept=0.125, seed=3)
        d = heatmap_to_dict(hm)
        assert d == {
            "intercept": 0.125,
            "importances": {"0": -0.5, "1": 0.25},
            "num_segments": 2,
            "seed": 3,
        }
        assert list(d["importances"]) == ["0", "1"]

    def test_refined_fields(self):
        hm = Heatmap(
            importances={0: 0.5},
            intercept=0.0,
            seed=1,
            refined_with="canny",
            warnings=("degenerate brain mask: blank",),
        )
        d = heatmap_to_dict(hm)
        assert d["refined"] is True
        assert d["detector"] == "canny"
        assert d["warnings"] == ["degenerate brain mask: blank"]
