"""Crop-ensemble stability audit for depth-derived gaze vectors.

The gaze vector between two anchored pixels (eye, gaze target) in camera
coordinates should not depend on how the image is cropped. For each
image the audit samples random crops containing both anchors, rebuilds
the two 3D points per crop from a depth provider, and reports the
per-component standard deviation of the resulting unit vectors, plus the
component-wise median over the dataset.

Two intrinsics modes: "consistent" keeps the full-image calibration
(shifted principal point), so exact depth yields zero spread; this is
the audit's null case. "recentered" re-assumes the principal point at
each crop's centre with a per-crop focal estimate, mimicking estimators
that treat every crop as a fresh image.

A synthetic provider models shift-and-scale (UTSS) depth error as
1/d_reported = scale * (1/d_true + shift), drawing a different shift per
crop; larger shift magnitudes must never decrease the spread.
"""

from __future__ import annotations

import math
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .geometry import (
    CameraIntrinsics,
    CropRect,
    DepthMap,
    crop_intrinsics,
    median_depth_3x3,
    unproject_pixel,
)
from .rasters import load_depth

VECTOR_EPS = 1e-9


class DepthProvider(ABC):
    """Source of per-crop depth rasters and focal estimates."""

    @abstractmethod
    def intrinsics(self) -> CameraIntrinsics:
        """Full-image intrinsics."""

    @abstractmethod
    def depth_for_crop(self, crop: CropRect) -> tuple[DepthMap, float]:
        """(depth raster matching the crop size, focal estimate for the crop)."""


@dataclass(frozen=True)
class PlaneScene:
    """Analytic scene: the plane normal . P = offset in camera coords."""

    normal: tuple[float, float, float] = (0.0, 0.0, 1.0)
    offset: float = 5.0

    def depth_grid(self, k: CameraIntrinsics, crop: CropRect) -> np.ndarray:
        xs = np.arange(crop.x0, crop.x0 + crop.width, dtype=np.float64)[None, :]
        ys = np.arange(crop.y0, crop.y0 + crop.height, dtype=np.float64)[:, None]
        rx = (xs - k.principal_x) / k.focal_px
        ry = (ys - k.principal_y) / k.focal_px
        denom = self.normal[0] * rx + self.normal[1] * ry + self.normal[2]
        with np.errstate(divide="ignore", invalid="ignore"):
            z = self.offset / denom
        return np.where(denom > 1e-9, z, np.nan)


class SyntheticDepthProvider(DepthProvider):
    """Exact plane depth, optionally corrupted by a per-crop UTSS shift.

    With shift_scale = 0 the provider is analytically exact. Otherwise
    each crop applies 1/d = 1/d_true + shift with shift = shift_scale *
    u(crop), u being a deterministic per-crop draw from [0.5, 1] (kept
    positive so spread grows monotonically with shift_scale).
    """

    def __init__(
        self,
        width: int,
        height: int,
        focal_px: float,
        scene: PlaneScene = PlaneScene(),
        shift_scale: float = 0.0,
        seed: int = 0,
    ):
        self._intrinsics = CameraIntrinsics(focal_px, width, height)
        self.scene = scene
        self.shift_scale = float(shift_scale)
        self.seed = seed

    def intrinsics(self) -> CameraIntrinsics:
        return self._intrinsics

    def depth_for_crop(self, crop: CropRect) -> tuple[DepthMap, float]:
        z = self.scene.depth_grid(self._intrinsics, crop)
        if self.shift_scale != 0.0:
            draw = random.Random(f"{self.seed}:{crop.key}").uniform(0.5, 1.0)
            shift = self.shift_scale * draw
            with np.errstate(divide="ignore", invalid="ignore"):
                z = 1.0 / (1.0 / z + shift)
            z = np.where(z > 0, z, np.nan)
        return DepthMap.from_array(z), self._intrinsics.focal_px


class FileDepthProvider(DepthProvider):
    """Depth rasters precomputed per crop, looked up by crop key.

    ``depth_paths`` maps "x0_y0_w_h" keys to GPDM/PGM paths; each raster
    shares one intrinsics sidecar schema. ``focal_by_crop`` optionally
    carries per-crop focal estimates for recentered mode.
    """

    def __init__(self, intrinsics: CameraIntrinsics, depth_paths: dict, intrinsics_paths: dict, focal_by_crop: Optional[dict] = None):
        self._intrinsics = intrinsics
        self.depth_paths = depth_paths
        self.intrinsics_paths = intrinsics_paths
        self.focal_by_crop = focal_by_crop or {}

    def intrinsics(self) -> CameraIntrinsics:
        return self._intrinsics

    def depth_for_crop(self, crop: CropRect) -> tuple[DepthMap, float]:
        key = crop.key
        if key not in self.depth_paths:
            raise DataError(f"no depth raster for crop {key}")
        depth, _ = load_depth(self.depth_paths[key], self.intrinsics_paths[key])
        if depth.width != crop.width or depth.height != crop.height:
            raise DataError(
                f"raster for crop {key} is {depth.width}x{depth.height}, expected "
                f"{crop.width}x{crop.height}"
            )
        return depth, float(self.focal_by_crop.get(key, self._intrinsics.focal_px))


@dataclass(frozen=True)
class ImageSpec:
    image_id: str
    width: int
    height: int
    eye_px: tuple[int, int]
    gaze_px: tuple[int, int]
    provider: DepthProvider


@dataclass(frozen=True)
class StabilityConfig:
    n_crops: int = 5
    min_area_fraction: float = 0.25
    max_tries: int = 1000


@dataclass
class ImageStability:
    image_id: str
    std: np.ndarray  # (3,) per-component population std
    n_crops_used: int
    n_crops_failed: int


@dataclass
class StabilityResult:
    per_image: list
    median_std: np.ndarray  # (3,)
    n_images_used: int
    n_images_excluded: int

    def to_json_obj(self) -> dict:
        return {
            "median_std": [float(v) for v in self.median_std],
            "n_images_used": self.n_images_used,
            "n_images_excluded": self.n_images_excluded,
            "per_image": [
                {
                    "image_id": r.image_id,
                    "std": [float(v) for v in r.std],
                    "n_crops_used": r.n_crops_used,
                    "n_crops_failed": r.n_crops_failed,
                }
                for r in self.per_image
            ],
        }


def sample_crops(
    width: int,
    height: int,
    n: int = 5,
    *,
    min_area_fraction: float = 0.25,
    contain: Sequence[tuple[int, int]] = (),
    seed=0,
    max_tries: int = 1000,
) -> list[CropRect]:
    """n axis-aligned crops, each covering >= min_area_fraction of the
    image and containing every anchor pixel; deterministic in the seed."""
    if not 0.0 < min_area_fraction <= 1.0:
        raise DataError(f"min_area_fraction must be in (0, 1], got {min_area_fraction}")
    for ax, ay in contain:
        if not (0 <= ax < width and 0 <= ay < height):
            raise DataError(f"anchor pixel ({ax}, {ay}) outside {width}x{height} image")
    rng = random.Random(seed)
    w_min = min(width, math.ceil(width * math.sqrt(min_area_fraction)))
    h_min = min(height, math.ceil(height * math.sqrt(min_area_fraction)))
    crops = []
    for _ in range(n):
        for attempt in range(max_tries):
            w = rng.randint(w_min, width)
            h = rng.randint(h_min, height)
            x0 = rng.randint(0, width - w)
            y0 = rng.randint(0, height - h)
            crop = CropRect(x0, y0, w, h)
            if all(crop.contains_pixel(ax, ay) for ax, ay in contain):
                crops.append(crop)
                break
        else:
            raise DataError(
                f"could not sample a crop containing all anchors after {max_tries} tries"
            )
    return crops


def gaze_vector_for_crop(
    crop: CropRect,
    provider: DepthProvider,
    eye_px: tuple[int, int],
    gaze_px: tuple[int, int],
    mode: str = "consistent",
) -> np.ndarray:
    """Unit eye->gaze vector in the crop's camera frame.

    Anchor pixels are full-image coordinates. The eye depth uses the 3x3
    median rule; the gaze pixel must itself carry valid depth.
    """
    if not crop.contains_pixel(*eye_px) or not crop.contains_pixel(*gaze_px):
        raise DataError(f"anchor pixels {eye_px}/{gaze_px} not inside crop {crop.key}")
    depth, focal_estimate = provider.depth_for_crop(crop)
    if depth.width != crop.width or depth.height != crop.height:
        raise DataError(f"provider raster does not match crop {crop.key}")
    k = crop_intrinsics(provider.intrinsics(), crop, mode, recentered_focal=focal_estimate)
    ex, ey = eye_px[0] - crop.x0, eye_px[1] - crop.y0
    gx, gy = gaze_px[0] - crop.x0, gaze_px[1] - crop.y0
    eye_z = median_depth_3x3(depth, ex, ey)
    if not depth.valid[gy, gx]:
        raise DataError(f"invalid depth at gaze pixel ({gaze_px[0]}, {gaze_px[1]})")
    eye_point = unproject_pixel(k, ex, ey, eye_z)
    gaze_point = unproject_pixel(k, gx, gy, float(depth.values[gy, gx]))
    diff = gaze_point - eye_point
    norm = float(np.linalg.norm(diff))
    if norm < VECTOR_EPS:
        raise DataError("eye and gaze anchor at the same 3D point; vector undefined")
    return diff / norm


def stability(
    images: Sequence[ImageSpec],
    mode: str = "consistent",
    seed=0,
    config: StabilityConfig = StabilityConfig(),
) -> StabilityResult:
    """Run the audit over a set of images.

    Crops that fail (invalid anchor depth, degenerate vectors) are
    counted per image; images with no usable crop are excluded and
    counted. The per-image std is the population standard deviation.
    """
    if not images:
        raise DataError("stability audit needs at least one image")
    per_image = []
    excluded = 0
    for spec in images:
        crops = sample_crops(
            spec.width,
            spec.height,
            config.n_crops,
            min_area_fraction=config.min_area_fraction,
            contain=(spec.eye_px, spec.gaze_px),
            seed=f"{seed}:{spec.image_id}",
            max_tries=config.max_tries,
        )
        vectors = []
        failed = 0
        for crop in crops:
            try:
                vectors.append(gaze_vector_for_crop(crop, spec.provider, spec.eye_px, spec.gaze_px, mode))
            except DataError:
                failed += 1
        if not vectors:
            excluded += 1
            continue
        arr = np.stack(vectors)
        per_image.append(
            ImageStability(spec.image_id, np.std(arr, axis=0, ddof=0), len(vectors), failed)
        )
    if not per_image:
        raise DataError("all images failed; nothing to aggregate")
    stds = np.stack([r.std for r in per_image])
    return StabilityResult(per_image, np.median(stds, axis=0), len(per_image), excluded)
