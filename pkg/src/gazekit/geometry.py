"""Pinhole camera model, depth unprojection and eye-frame transforms.

Conventions used throughout the toolkit: camera x right, y down, z
forward (image-coordinate convention), pixel (x, y) = (column, row).
The eye frame puts its z basis vector along the camera-to-eye ray; the
in-plane orientation is fixed by crossing the camera down axis with it,
which reduces to the camera axes for an eye on the optical axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError

ORTHO_TOL = 1e-9
DOWN_AXIS = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class CameraIntrinsics:
    """Square-pixel, zero-skew pinhole intrinsics.

    The principal point defaults to the image centre (width/2, height/2).
    """

    focal_px: float
    width: int
    height: int
    principal_x: Optional[float] = None
    principal_y: Optional[float] = None

    def __post_init__(self):
        if not self.focal_px > 0:
            raise DataError(f"focal length must be positive, got {self.focal_px}")
        if self.width < 1 or self.height < 1:
            raise DataError(f"image size must be >= 1x1, got {self.width}x{self.height}")
        if self.principal_x is None:
            object.__setattr__(self, "principal_x", self.width / 2.0)
        if self.principal_y is None:
            object.__setattr__(self, "principal_y", self.height / 2.0)


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel camera-z depth in metres with a validity mask."""

    values: np.ndarray  # (H, W) float64
    valid: np.ndarray  # (H, W) bool

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if values.ndim != 2 or values.shape != valid.shape:
            raise DataError(f"depth grid/mask shape mismatch: {values.shape} vs {valid.shape}")
        picked = values[valid]
        if picked.size and (not np.all(np.isfinite(picked)) or not np.all(picked > 0)):
            raise DataError("valid depth pixels must be finite and > 0")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def from_array(cls, values) -> "DepthMap":
        """Build a map treating NaN/inf and non-positive entries as invalid."""
        values = np.asarray(values, dtype=np.float64)
        valid = np.isfinite(values) & (values > 0)
        return cls(np.where(valid, values, np.nan), valid)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class PointCloud:
    """Ordered 3D points for the valid pixels of a depth grid.

    ``points[i]`` belongs to pixel ``pixels[i]`` (x, y); ``index_grid`` is
    the inverse map, -1 where the pixel had no valid depth. ``frame`` is
    either "camera" or "eye".
    """

    points: np.ndarray  # (N, 3) float64
    pixels: np.ndarray  # (N, 2) int64, (x, y)
    index_grid: np.ndarray  # (H, W) int64, -1 = invalid
    frame: str = "camera"

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        pixels = np.asarray(self.pixels, dtype=np.int64).reshape(-1, 2)
        if len(points) != len(pixels):
            raise DataError("points/pixels length mismatch")
        if self.frame not in ("camera", "eye"):
            raise DataError(f"unknown frame tag {self.frame!r}")
        if self.frame == "camera" and len(points) and not np.all(points[:, 2] > 0):
            raise DataError("camera-frame points must have z > 0")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "pixels", pixels)
        object.__setattr__(self, "index_grid", np.asarray(self.index_grid, dtype=np.int64))

    @property
    def width(self) -> int:
        return self.index_grid.shape[1]

    @property
    def height(self) -> int:
        return self.index_grid.shape[0]

    def __len__(self) -> int:
        return len(self.points)

    def point_at(self, x: int, y: int) -> Optional[np.ndarray]:
        """Point for pixel (x, y), or None when invalid/out of grid."""
        if not (0 <= x < self.width and 0 <= y < self.height):
            return None
        idx = self.index_grid[y, x]
        return None if idx < 0 else self.points[idx]


@dataclass(frozen=True)
class EyeFrame:
    """Orthonormal right-handed basis anchored at the eye (camera coords)."""

    origin: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray

    def __post_init__(self):
        for name in ("origin", "ex", "ey", "ez"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64).reshape(3))
        for v in (self.ex, self.ey, self.ez):
            if abs(np.linalg.norm(v) - 1.0) > ORTHO_TOL:
                raise DataError("eye-frame basis vectors must be unit length")
        if (
            abs(float(self.ex @ self.ey)) > ORTHO_TOL
            or abs(float(self.ex @ self.ez)) > ORTHO_TOL
            or abs(float(self.ey @ self.ez)) > ORTHO_TOL
        ):
            raise DataError("eye-frame basis must be orthogonal")
        if np.max(np.abs(np.cross(self.ex, self.ey) - self.ez)) > ORTHO_TOL:
            raise DataError("eye-frame basis must be right-handed")

    def rotation(self) -> np.ndarray:
        """World->eye rotation; rows are the basis vectors."""
        return np.stack([self.ex, self.ey, self.ez])


def unproject(depth: DepthMap, intrinsics: CameraIntrinsics) -> PointCloud:
    """Lift every valid depth pixel to a camera-frame 3D point.

    X = (x - cx) * Z / f, Y = (y - cy) * Z / f; invalid pixels are omitted.
    """
    if depth.width != intrinsics.width or depth.height != intrinsics.height:
        raise DataError(
            f"depth grid {depth.width}x{depth.height} does not match intrinsics "
            f"{intrinsics.width}x{intrinsics.height}"
        )
    ys, xs = np.nonzero(depth.valid)
    z = depth.values[ys, xs]
    px = xs.astype(np.float64)
    py = ys.astype(np.float64)
    x3 = (px - intrinsics.principal_x) * z / intrinsics.focal_px
    y3 = (py - intrinsics.principal_y) * z / intrinsics.focal_px
    points = np.stack([x3, y3, z], axis=1)
    index_grid = np.full((depth.height, depth.width), -1, dtype=np.int64)
    index_grid[ys, xs] = np.arange(len(points))
    pixels = np.stack([xs, ys], axis=1).astype(np.int64)
    return PointCloud(points, pixels, index_grid, frame="camera")


def unproject_pixel(intrinsics: CameraIntrinsics, x: float, y: float, z: float) -> np.ndarray:
    """Single-pixel version of :func:`unproject`."""
    if not z > 0:
        raise DataError(f"depth must be positive, got {z}")
    return np.array(
        [
            (x - intrinsics.principal_x) * z / intrinsics.focal_px,
            (y - intrinsics.principal_y) * z / intrinsics.focal_px,
            z,
        ]
    )


def project(point, intrinsics: CameraIntrinsics) -> tuple[float, float]:
    """Camera-frame point -> pixel (x, y). Exact inverse of unproject."""
    p = np.asarray(point, dtype=np.float64).reshape(3)
    if not p[2] > 0:
        raise DataError(f"point is behind the camera (z={p[2]})")
    x = intrinsics.focal_px * p[0] / p[2] + intrinsics.principal_x
    y = intrinsics.focal_px * p[1] / p[2] + intrinsics.principal_y
    return float(x), float(y)


def build_eye_frame(eye) -> EyeFrame:
    """Eye frame with ez along the camera->eye ray.

    ex = normalize(down x ez) with down = (0, 1, 0); when the eye sits on
    the camera's down axis that cross product degenerates and ex falls
    back to (1, 0, 0).
    """
    eye = np.asarray(eye, dtype=np.float64).reshape(3)
    norm = float(np.linalg.norm(eye))
    if norm == 0.0:
        raise DataError("eye position must be non-zero")
    ez = eye / norm
    cross = np.cross(DOWN_AXIS, ez)
    cross_norm = float(np.linalg.norm(cross))
    if cross_norm < 1e-9:
        ex = np.array([1.0, 0.0, 0.0])
    else:
        ex = cross / cross_norm
    ey = np.cross(ez, ex)
    return EyeFrame(origin=eye, ex=ex, ey=ey, ez=ez)


def to_eye_frame(cloud: PointCloud, frame: EyeFrame) -> PointCloud:
    """Express a camera-frame cloud in the eye frame (rigid transform)."""
    if cloud.frame != "camera":
        raise DataError(f"expected a camera-frame cloud, got frame={cloud.frame!r}")
    d = cloud.points - frame.origin
    x = d[:, 0] * frame.ex[0] + d[:, 1] * frame.ex[1] + d[:, 2] * frame.ex[2]
    y = d[:, 0] * frame.ey[0] + d[:, 1] * frame.ey[1] + d[:, 2] * frame.ey[2]
    z = d[:, 0] * frame.ez[0] + d[:, 1] * frame.ez[1] + d[:, 2] * frame.ez[2]
    return PointCloud(np.stack([x, y, z], axis=1), cloud.pixels, cloud.index_grid, frame="eye")


@dataclass(frozen=True)
class CropRect:
    """Axis-aligned pixel rectangle: origin (x0, y0), size width x height."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DataError(f"crop size must be >= 1x1, got {self.width}x{self.height}")
        if self.x0 < 0 or self.y0 < 0:
            raise DataError(f"crop origin must be non-negative, got ({self.x0}, {self.y0})")

    def contains_pixel(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x0 + self.width - 1 and self.y0 <= y <= self.y0 + self.height - 1

    @property
    def key(self) -> str:
        return f"{self.x0}_{self.y0}_{self.width}_{self.height}"


def crop_intrinsics(
    intrinsics: CameraIntrinsics,
    crop: CropRect,
    mode: str = "consistent",
    recentered_focal: Optional[float] = None,
) -> CameraIntrinsics:
    """Intrinsics for an image crop.

    consistent: same focal, principal point shifted by the crop origin,
    so shared pixels unproject to identical 3D points. recentered: the
    principal point is re-assumed at the crop centre (what a per-crop
    focal/depth estimator would do); the focal comes from the caller's
    estimate when given.
    """
    if crop.x0 + crop.width > intrinsics.width or crop.y0 + crop.height > intrinsics.height:
        raise DataError(
            f"crop {crop.key} exceeds image bounds {intrinsics.width}x{intrinsics.height}"
        )
    if mode == "consistent":
        return CameraIntrinsics(
            intrinsics.focal_px,
            crop.width,
            crop.height,
            intrinsics.principal_x - crop.x0,
            intrinsics.principal_y - crop.y0,
        )
    if mode == "recentered":
        focal = intrinsics.focal_px if recentered_focal is None else recentered_focal
        return CameraIntrinsics(focal, crop.width, crop.height)
    raise DataError(f"unknown crop mode {mode!r} (expected 'consistent' or 'recentered')")


def median_depth_3x3(depth: DepthMap, x: int, y: int) -> float:
    """Median of the valid depths in the 3x3 window around (x, y).

    Robust depth lookup for anchoring a head/eye pixel in 3D; raises when
    the whole window is invalid.
    """
    if not (0 <= x < depth.width and 0 <= y < depth.height):
        raise DataError(f"pixel ({x}, {y}) outside {depth.width}x{depth.height} grid")
    x0, x1 = max(0, x - 1), min(depth.width, x + 2)
    y0, y1 = max(0, y - 1), min(depth.height, y + 2)
    window = depth.values[y0:y1, x0:x1][depth.valid[y0:y1, x0:x1]]
    if window.size == 0:
        raise DataError(f"no valid depth in the 3x3 window around ({x}, {y})")
    return float(np.median(window))
