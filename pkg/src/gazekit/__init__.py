"""Geometry-grounded gaze analysis toolkit.

Deterministic building blocks for 3D gaze-target work: pinhole depth
unprojection and eye-frame transforms, field-of-view heatmaps with their
analytic gradient, pseudo-3D gaze supervision and losses, evaluation
metrics (AUC, distances, AP, looking-at-heads precision), an annotation
data model with dataset statistics, and a crop-ensemble stability audit
for depth providers.
"""

__version__ = "0.1.0"

from .errors import DataError, FormatError
from .geometry import (
    CameraIntrinsics,
    CropRect,
    DepthMap,
    EyeFrame,
    PointCloud,
    build_eye_frame,
    crop_intrinsics,
    median_depth_3x3,
    project,
    to_eye_frame,
    unproject,
    unproject_pixel,
)
from .fov import (
    FovField,
    GazeVector,
    cone2d_heatmap,
    cosine_field,
    cosine_points,
    fov_decay,
    fov_heatmap,
    fov_jacobian,
    fov_point_jacobian,
    fov_point_values,
)
from .supervision import (
    GtHeatmap,
    LossWeights,
    loss_direction,
    loss_heatmap,
    loss_inout,
    loss_total,
    normalize_gaze_point,
    pseudo_gaze_gt,
    render_gt_heatmap,
)
from .metrics import (
    EvalConfig,
    EvalInstance,
    EvalReport,
    GroundTruth,
    Prediction,
    argmax_point,
    auc,
    average_precision,
    distances,
    evaluate,
    phead_gt,
    phead_precision,
)
from .dataset import (
    AnnotationInstance,
    DatasetStats,
    GazeLabel,
    agreement_eval,
    compute_stats,
    label_distribution,
    parse_annotations,
    render_head_mask,
)
from .stability import (
    DepthProvider,
    FileDepthProvider,
    ImageSpec,
    PlaneScene,
    StabilityConfig,
    StabilityResult,
    SyntheticDepthProvider,
    gaze_vector_for_crop,
    sample_crops,
    stability,
)
