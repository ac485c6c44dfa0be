"""Training supervision: pseudo 3D gaze targets, GT heatmaps and losses.

The combined objective is

    loss = lambda_hm * L_hm + lambda_dir * L_dir + lambda_io * L_io

with default coefficients (100, 0.1, 1). L_hm is the mean squared
difference between heatmaps (mean, not sum, so the default weight is
resolution independent), L_dir = 1 - <g_pred, g_gt> on unit vectors, and
L_io is binary cross entropy on the in-vs-out-of-frame score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dmath import exp64, log64, ordered_sum
from .errors import DataError
from .fov import GazeVector, _unit_direction
from .geometry import PointCloud

DEFAULT_GT_SIGMA = 3.0
DEFAULT_HM_SIZE = 64
GAZE_FALLBACK_RADIUS = 5
BCE_CLAMP = 1e-7


@dataclass(frozen=True)
class LossWeights:
    lambda_hm: float = 100.0
    lambda_dir: float = 0.1
    lambda_io: float = 1.0

    def __post_init__(self):
        if self.lambda_hm < 0 or self.lambda_dir < 0 or self.lambda_io < 0:
            raise DataError("loss weights must be non-negative")


@dataclass(frozen=True)
class GtHeatmap:
    """Isotropic Gaussian target heatmap, value 1 at the peak."""

    values: np.ndarray  # (H, W) float64
    peak: tuple[float, float]  # (x, y) in heatmap pixels
    sigma: float


def pseudo_gaze_gt(cloud: PointCloud, gaze_px, fallback_radius: int = GAZE_FALLBACK_RADIUS) -> GazeVector:
    """Unit vector from the eye to the looked-at 3D point.

    ``gaze_px`` indexes the eye-frame cloud; when its depth is invalid the
    nearest valid pixel within ``fallback_radius`` is used (ties resolved
    in row-major order). With no valid pixel in range the instance cannot
    supervise the direction loss and a DataError is raised.
    """
    if cloud.frame != "eye":
        raise DataError(f"pseudo gaze GT needs an eye-frame cloud, got frame={cloud.frame!r}")
    gx, gy = int(gaze_px[0]), int(gaze_px[1])
    if not (0 <= gx < cloud.width and 0 <= gy < cloud.height):
        raise DataError(f"gaze pixel ({gx}, {gy}) outside {cloud.width}x{cloud.height} grid")
    point = cloud.point_at(gx, gy)
    if point is None:
        best = None
        r = int(fallback_radius)
        for y in range(max(0, gy - r), min(cloud.height, gy + r + 1)):
            for x in range(max(0, gx - r), min(cloud.width, gx + r + 1)):
                d2 = (x - gx) ** 2 + (y - gy) ** 2
                if d2 <= r * r and cloud.index_grid[y, x] >= 0:
                    cand = (d2, y, x)
                    if best is None or cand < best:
                        best = cand
        if best is None:
            raise DataError(
                f"gaze pixel ({gx}, {gy}) has no valid depth within radius {fallback_radius}"
            )
        point = cloud.points[cloud.index_grid[best[1], best[2]]]
    return GazeVector(normalize_gaze_point(point))


def normalize_gaze_point(point) -> np.ndarray:
    """p / ||p|| for an eye-frame gaze point; the flat parity kernel."""
    p = np.asarray(point, dtype=np.float64).reshape(3)
    norm = float(np.sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]))
    if norm < 1e-9:
        raise DataError("gaze point coincides with the eye; direction undefined")
    return p / norm


def render_gt_heatmap(peak_px, grid_size, sigma: float = DEFAULT_GT_SIGMA) -> GtHeatmap:
    """Gaussian target heatmap: exp(-||p - peak||^2 / (2 sigma^2)).

    ``grid_size`` is (width, height); the peak must lie on the grid.
    """
    w, h = int(grid_size[0]), int(grid_size[1])
    px, py = float(peak_px[0]), float(peak_px[1])
    if sigma <= 0:
        raise DataError(f"sigma must be positive, got {sigma}")
    if not (0 <= px <= w - 1 and 0 <= py <= h - 1):
        raise DataError(f"peak ({px}, {py}) outside {w}x{h} heatmap grid")
    xs = np.arange(w, dtype=np.float64)[None, :] - px
    ys = np.arange(h, dtype=np.float64)[:, None] - py
    denom = 2.0 * (sigma * sigma)
    values = exp64(-((xs * xs + ys * ys) / denom))
    return GtHeatmap(values, (px, py), float(sigma))


def loss_heatmap(pred, gt) -> float:
    """Mean squared difference between predicted and GT heatmaps."""
    pred = np.asarray(pred, dtype=np.float64)
    gt_values = gt.values if isinstance(gt, GtHeatmap) else np.asarray(gt, dtype=np.float64)
    if pred.shape != gt_values.shape:
        raise DataError(f"heatmap shapes differ: {pred.shape} vs {gt_values.shape}")
    diff = pred - gt_values
    return ordered_sum(diff * diff) / diff.size


def loss_direction(g_pred, g_gt) -> float:
    """1 - <g_pred, g_gt>; zero for identical unit directions, two for opposite."""
    a = _unit_direction(g_pred)
    b = _unit_direction(g_gt)
    return 1.0 - (a[0] * b[0] + a[1] * b[1] + a[2] * b[2])


def loss_inout(o_pred: float, o_gt: float) -> float:
    """Binary cross entropy; the prediction is clamped to [1e-7, 1 - 1e-7]."""
    o_pred = float(o_pred)
    o_gt = float(o_gt)
    if not 0.0 <= o_pred <= 1.0:
        raise DataError(f"in/out score must lie in [0, 1], got {o_pred}")
    if o_gt not in (0.0, 1.0):
        raise DataError(f"in/out label must be 0 or 1, got {o_gt}")
    p = min(max(o_pred, BCE_CLAMP), 1.0 - BCE_CLAMP)
    return -(o_gt * log64(p) + (1.0 - o_gt) * log64(1.0 - p))


def loss_total(parts, weights: LossWeights = LossWeights()) -> float:
    """Weighted sum of (L_hm, L_dir, L_io)."""
    hm, direction, io = (float(v) for v in parts)
    if hm < 0 or direction < 0 or io < 0:
        raise DataError("loss parts must be non-negative")
    return weights.lambda_hm * hm + weights.lambda_dir * direction + weights.lambda_io * io
