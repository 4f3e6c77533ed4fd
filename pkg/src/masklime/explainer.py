"""Perturbation-based local surrogate explanations.

The pipeline: sample presence vectors over the segments, realize each sample
as a masked image, query the black-box predictor, weight samples by cosine
proximity to the unperturbed instance, and fit a weighted ridge model whose
coefficients are the per-segment importances.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ShapeMismatch, SingularSystem
from .predictor import Prediction, PredictorHandle, predict_batch
from .segmentation import SegmentMap

_EXHAUSTIVE_MAX_BITS = 20  # beyond this 2^d cannot be <= any sane num_samples


@dataclass(frozen=True)
class ExplainerParams:
    num_samples: int = 1000
    kernel_width: float = 0.25
    ridge_lambda: float = 1.0
    fill_mode: str = "segment-mean"
    fill_constant: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.kernel_width <= 0:
            raise ValueError(f"kernel_width must be > 0, got {self.kernel_width}")
        if self.ridge_lambda < 0:
            raise ValueError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if self.fill_mode not in ("segment-mean", "constant"):
            raise ValueError(f"fill_mode must be segment-mean or constant, got {self.fill_mode!r}")


@dataclass(frozen=True)
class PerturbationSample:
    presence: np.ndarray
    prediction: Prediction
    kernel_weight: float


@dataclass(frozen=True)
class Heatmap:
    """Per-segment signed importances plus the surrogate intercept."""

    importances: dict[int, float]
    intercept: float
    seg: SegmentMap | None = None
    seed: int | None = None
    refined_with: str | None = None
    warnings: tuple[str, ...] = field(default=())


def sample_presence_vectors(d: int, params: ExplainerParams) -> np.ndarray:
    """Presence vectors as a (n, d) uint8 array, all-ones row first.

    When 2^d <= num_samples every subset is enumerated exactly once instead
    of sampling, which removes Monte-Carlo noise on small d.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if d <= _EXHAUSTIVE_MAX_BITS and (1 << d) <= params.num_samples:
        total = 1 << d
        codes = np.arange(total, dtype=np.uint64)
        # all-ones (code 2^d - 1) promoted to row 0, the rest keep code order
        codes = np.concatenate(([total - 1], codes[: total - 1])).astype(np.uint64)
        bits = (codes[:, None] >> np.arange(d, dtype=np.uint64)) & np.uint64(1)
        return bits.astype(np.uint8)
    rng = np.random.default_rng(params.seed)
    rows = rng.integers(0, 2, size=(params.num_samples - 1, d), dtype=np.uint8)
    return np.vstack([np.ones((1, d), dtype=np.uint8), rows])


def kernel_weight(presence: np.ndarray, kernel_width: float = 0.25) -> float:
    """Proximity weight exp(-dist^2 / width^2) with dist the cosine distance
    between the presence vector and all-ones (dist = 1 for the empty vector)."""
    d = len(presence)
    if d < 1:
        raise ValueError("presence vector must be nonempty")
    m = int(np.count_nonzero(presence))
    dist = 1.0 if m == 0 else 1.0 - np.sqrt(m / d)
    return float(np.exp(-(dist ** 2) / kernel_width ** 2))


def _fill_image(img: np.ndarray, seg: SegmentMap, fill_mode: str, fill_constant: float) -> np.ndarray:
    if fill_mode == "constant":
        return np.full_like(img, float(fill_constant))
    labels = seg.labels
    sums = np.bincount(labels.ravel(), weights=img.ravel(), minlength=seg.num_segments)
    counts = np.bincount(labels.ravel(), minlength=seg.num_segments)
    means = sums / counts
    return means[labels]


def realize_image(
    img: np.ndarray,
    seg: SegmentMap,
    presence: np.ndarray,
    fill_mode: str = "segment-mean",
    fill_constant: float = 0.0,
) -> np.ndarray:
    """Copy of img with absent segments replaced by their fill value."""
    if img.shape != seg.labels.shape:
        raise ShapeMismatch(f"image {img.shape} vs segment map {seg.labels.shape}")
    if len(presence) != seg.num_segments:
        raise ShapeMismatch(
            f"presence length {len(presence)} vs {seg.num_segments} segments"
        )
    fill = _fill_image(img, seg, fill_mode, fill_constant)
    present = np.asarray(presence, dtype=bool)[seg.labels]
    return np.where(present, img, fill)


def fit_surrogate(
    samples: list[PerturbationSample],
    target_class: int = 1,
    ridge_lambda: float = 1.0,
) -> Heatmap:
    """Weighted ridge fit: minimize sum w_k (y_k - b0 - z_k.b)^2 + lambda |b|^2.

    The intercept is unpenalized. Kernel weights are normalized to sum 1
    before solving, so duplicating samples or rescaling all weights by a
    positive constant leaves the solution unchanged for any lambda.
    """
    if not samples:
        raise ValueError("fit_surrogate needs at least one sample")
    Z = np.array([np.asarray(s.presence, dtype=np.float64) for s in samples])
    y = np.array(
        [s.prediction.p_tumor if target_class == 1 else s.prediction.p_no_tumor for s in samples]
    )
    w = np.array([s.kernel_weight for s in samples], dtype=np.float64)
    if np.any(w <= 0):
        raise ValueError("kernel weights must be positive")
    w = w / w.sum()

    n, d = Z.shape
    X = np.hstack([np.ones((n, 1)), Z])
    if ridge_lambda == 0.0:
        scaled = X * np.sqrt(w)[:, None]
        if np.linalg.matrix_rank(scaled) < d + 1:
            raise SingularSystem(
                "lambda = 0 with a rank-deficient weighted design matrix"
            )
    A = X.T @ (X * w[:, None])
    penalty = np.full(d + 1, ridge_lambda)
    penalty[0] = 0.0
    A = A + np.diag(penalty)
    b = X.T @ (w * y)
    beta = np.linalg.solve(A, b)
    return Heatmap(
        importances={i: float(beta[i + 1]) for i in range(d)},
        intercept=float(beta[0]),
    )


def explain(
    img: np.ndarray,
    seg: SegmentMap,
    handle: PredictorHandle,
    params: ExplainerParams,
) -> Heatmap:
    """End-to-end explanation for target class 1 (tumor)."""
    presences = sample_presence_vectors(seg.num_segments, params)
    fill = _fill_image(img, seg, params.fill_mode, params.fill_constant)

    samples: list[PerturbationSample] = []
    for start in range(0, len(presences), handle.batch_limit):
        chunk = presences[start : start + handle.batch_limit]
        images = [
            np.where(np.asarray(p, dtype=bool)[seg.labels], img, fill) for p in chunk
        ]
        preds = predict_batch(handle, images)
        for p, pred in zip(chunk, preds):
            samples.append(
                PerturbationSample(
                    presence=p,
                    prediction=pred,
                    kernel_weight=kernel_weight(p, params.kernel_width),
                )
            )
    hm = fit_surrogate(samples, target_class=1, ridge_lambda=params.ridge_lambda)
    return replace(hm, seg=seg, seed=params.seed)


def top_segments(hm: Heatmap, n: int) -> list[int]:
    """IDs of up to n positive-importance segments, importance descending,
    ties broken toward the lower ID. May return fewer than n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    positive = [(imp, sid) for sid, imp in hm.importances.items() if imp > 0]
    positive.sort(key=lambda t: (-t[0], t[1]))
    return [sid for _, sid in positive[:n]]


def heatmap_to_dict(hm: Heatmap) -> dict:
    """JSON-ready form of a heatmap (refinement fields included when set)."""
    out = {
        "intercept": hm.intercept,
        "importances": {str(k): hm.importances[k] for k in sorted(hm.importances)},
        "num_segments": len(hm.importances),
        "seed": hm.seed,
    }
    if hm.refined_with is not None:
        out["refined"] = True
        out["detector"] = hm.refined_with
        out["warnings"] = list(hm.warnings)
    return out
