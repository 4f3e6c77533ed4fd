"""masklime: perturbation-based image explanations, edge-detected brain
masks, heatmap refinement, and coverage metrics."""

from .errors import (
    DegeneratePolygon,
    EmptyAnnotation,
    EmptyMask,
    InsufficientClassMembers,
    MasklimeError,
    PredictorUnavailable,
    ProtocolViolation,
    ShapeMismatch,
    SingularSystem,
    UniformImage,
    UnreadableImage,
    ZeroDimension,
)
from .explainer import (
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
from .image import (
    bilinear_resize,
    connected_components,
    fill_holes,
    load_gray,
    mask_iou,
    rasterize_polygon,
    resize_normalize,
    save_gray_png,
    save_mask_png,
)
from .maskgen import BrainMaskResult, EdgeDetector, brain_mask, canny_edges, laplace_edges, otsu_mask, otsu_threshold
from .metrics import (
    ConfusionCounts,
    brain_mask_segment_coverage,
    classification_metrics,
    load_via_annotations,
    mann_whitney_u,
    stratified_kfold,
    tumor_mask_from_polygons,
    tumor_segment_coverage,
)
from .overlay import render_overlay, save_overlay_png
from .phantom import Phantom, generate_phantom, write_phantom_set
from .predictor import Prediction, PredictorHandle, builtin_blob_predict, predict_batch
from .refine import RefineParams, explanation_pixels, refine_heatmap
from .segmentation import QuickShiftParams, SegmentMap, quickshift_segment, segment_pixel_counts

__version__ = "0.1.0"
