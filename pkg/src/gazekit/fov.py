"""3D field-of-view heatmaps from a gaze direction and an eye-frame cloud.

Per point, the field is the cosine between the gaze direction and the
point's direction from the eye, passed through a fixed exponential decay
that suppresses everything outside the gaze focus:

    value = c            if c > 0.9
    value = 0.9 * exp(5*c) / exp(5*0.9)   otherwise

The map is continuous at the 0.9 threshold and strictly increasing in c.
A planar "2D cone" variant (cosine in the image plane, no decay) is kept
as a baseline.

Flat ``*_points`` kernels operate on (N, 3) buffers and are the parity
surface mirrored by the bindings package; the grid functions wrap them
with pixel bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dmath import exp64
from .errors import DataError
from .geometry import PointCloud

DECAY_THRESHOLD = 0.9
DECAY_RATE = 5.0
_EXP_AT_KNEE = exp64(DECAY_RATE * DECAY_THRESHOLD)
POINT_NORM_EPS = 1e-9
UNIT_TOL = 1e-6


@dataclass(frozen=True)
class GazeVector:
    """Unit gaze direction in the eye frame."""

    direction: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        if abs(float(np.linalg.norm(d)) - 1.0) > 1e-9:
            raise DataError("gaze direction must be unit length")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class FovField:
    """Field-of-view heatmap aligned with the source depth grid."""

    values: np.ndarray  # (H, W) float64 in [0, 1], 0 where invalid
    valid: np.ndarray  # (H, W) bool

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if values.shape != valid.shape or values.ndim != 2:
            raise DataError("field values/mask shape mismatch")
        if np.any(values[valid] < 0) or np.any(values[valid] > 1):
            raise DataError("field values must lie in [0, 1]")
        values = np.where(valid, values, 0.0)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def _unit_direction(gaze) -> np.ndarray:
    d = gaze.direction if isinstance(gaze, GazeVector) else np.asarray(gaze, dtype=np.float64).reshape(3)
    if abs(float(np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])) - 1.0) > UNIT_TOL:
        raise DataError("gaze direction must be unit length (within 1e-6)")
    return d


def cosine_points(points, gaze) -> np.ndarray:
    """Cosine between the gaze and each point direction; NaN where a point
    sits at the eye (norm below 1e-9). Result clamped to [-1, 1]."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    g = _unit_direction(gaze)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    norms = np.sqrt(x * x + y * y + z * z)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = (g[0] * x + g[1] * y + g[2] * z) / norms
    c = np.clip(c, -1.0, 1.0)
    return np.where(norms < POINT_NORM_EPS, np.nan, c)


def fov_decay(c):
    """The cosine-to-field map above; scalar or array, NaN passes through."""
    arr = np.asarray(c, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        out = np.where(arr > DECAY_THRESHOLD, arr, DECAY_THRESHOLD * exp64(DECAY_RATE * arr) / _EXP_AT_KNEE)
    return float(out) if arr.ndim == 0 else out


def fov_point_values(points, gaze) -> np.ndarray:
    """Field value per point of an (N, 3) eye-frame buffer."""
    return fov_decay(cosine_points(points, gaze))


def fov_point_jacobian(points, gaze) -> np.ndarray:
    """d(value)/d(gaze) per point, treating the gaze as a free 3-vector.

    Top branch: the unit point direction u. Decay branch: 5 * value * u.
    At the c = 0.9 kink the decay-branch expression is used (the map is
    not differentiable there; this matches the limit from below).
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    g = _unit_direction(gaze)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    norms = np.sqrt(x * x + y * y + z * z)
    safe = np.where(norms < POINT_NORM_EPS, 1.0, norms)
    u = pts / safe[:, None]
    c = np.clip((g[0] * x + g[1] * y + g[2] * z) / safe, -1.0, 1.0)
    value = DECAY_THRESHOLD * exp64(DECAY_RATE * c) / _EXP_AT_KNEE
    scale = np.where(c > DECAY_THRESHOLD, 1.0, DECAY_RATE * value)
    out = scale[:, None] * u
    out[norms < POINT_NORM_EPS] = 0.0
    return out


def cosine_field(cloud: PointCloud, gaze) -> np.ndarray:
    """Per-pixel cosine grid for an eye-frame cloud; NaN = invalid pixel."""
    if cloud.frame != "eye":
        raise DataError(f"cosine field needs an eye-frame cloud, got frame={cloud.frame!r}")
    grid = np.full((cloud.height, cloud.width), np.nan)
    if len(cloud):
        c = cosine_points(cloud.points, gaze)
        grid[cloud.pixels[:, 1], cloud.pixels[:, 0]] = c
    return grid


def fov_heatmap(cosines: np.ndarray) -> FovField:
    """Apply the decay map to a cosine grid (NaN = invalid pixel)."""
    grid = np.asarray(cosines, dtype=np.float64)
    valid = np.isfinite(grid)
    if np.any(grid[valid] < -1.0) or np.any(grid[valid] > 1.0):
        raise DataError("cosine grid must lie in [-1, 1]")
    values = np.where(valid, fov_decay(np.where(valid, grid, 0.0)), 0.0)
    return FovField(values, valid)


def fov_jacobian(cloud: PointCloud, gaze) -> np.ndarray:
    """(H, W, 3) gradient grid of the field w.r.t. the gaze; zeros where invalid."""
    if cloud.frame != "eye":
        raise DataError(f"jacobian needs an eye-frame cloud, got frame={cloud.frame!r}")
    grid = np.zeros((cloud.height, cloud.width, 3))
    if len(cloud):
        grid[cloud.pixels[:, 1], cloud.pixels[:, 0]] = fov_point_jacobian(cloud.points, gaze)
    return grid


def cone2d_heatmap(head_px, gaze2d, width: int, height: int) -> FovField:
    """Planar cone baseline: cosine between pixel offsets from the head
    pixel and a unit 2D gaze direction, clamped at zero (no decay). The
    head pixel itself gets value 0."""
    hx, hy = float(head_px[0]), float(head_px[1])
    if not (0 <= hx < width and 0 <= hy < height):
        raise DataError(f"head pixel ({hx}, {hy}) outside {width}x{height} image")
    g = np.asarray(gaze2d, dtype=np.float64).reshape(2)
    if abs(float(np.hypot(g[0], g[1])) - 1.0) > UNIT_TOL:
        raise DataError("2D gaze direction must be unit length (within 1e-6)")
    xs = np.arange(width, dtype=np.float64)[None, :] - hx
    ys = np.arange(height, dtype=np.float64)[:, None] - hy
    norms = np.sqrt(xs * xs + ys * ys)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = (g[0] * xs + g[1] * ys) / norms
    values = np.clip(np.where(norms < POINT_NORM_EPS, 0.0, c), 0.0, 1.0)
    return FovField(values, np.ones_like(values, dtype=bool))
