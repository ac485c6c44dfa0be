"""File formats for depth and field rasters.

GPDM is the native raster: magic b"GPDM", u32-LE width, u32-LE height,
then width*height float32-LE row-major samples with NaN marking invalid
pixels. Depth may also arrive as a 16-bit binary PGM (P5, maxval 65535)
paired with a "scale_m_per_unit" entry in the intrinsics sidecar; sample
value 0 means "no depth". Field previews export as 8-bit PGM.
"""

from __future__ import annotations

import json
import re
import struct
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError
from .geometry import CameraIntrinsics, DepthMap

GPDM_MAGIC = b"GPDM"
_MAX_PIXELS = 100_000_000


def write_gpdm(path, values, valid=None) -> None:
    """Write a float raster; pixels where ``valid`` is False become NaN."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DataError(f"raster must be 2D, got shape {values.shape}")
    if valid is not None:
        values = np.where(np.asarray(valid, dtype=bool), values, np.nan)
    h, w = values.shape
    with open(path, "wb") as fh:
        fh.write(GPDM_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(values.astype("<f4").tobytes())


def read_gpdm(path) -> np.ndarray:
    """Read a GPDM raster to a float64 (H, W) grid with NaN = invalid."""
    blob = Path(path).read_bytes()
    if blob[:4] != GPDM_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {GPDM_MAGIC!r}", offset=0)
    if len(blob) < 12:
        raise FormatError(f"{path}: truncated header", offset=len(blob))
    w, h = struct.unpack_from("<II", blob, 4)
    if w == 0 or h == 0 or w * h > _MAX_PIXELS:
        raise FormatError(f"{path}: implausible raster size {w}x{h}", offset=4)
    expected = 12 + 4 * w * h
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload is {len(blob) - 12} bytes, expected {4 * w * h}", offset=min(len(blob), expected)
        )
    data = np.frombuffer(blob, dtype="<f4", offset=12).astype(np.float64)
    return data.reshape(h, w)


def write_pgm8(path, values) -> None:
    """8-bit PGM preview of a [0, 1] field; invalid (NaN) renders as 0."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DataError(f"raster must be 2D, got shape {values.shape}")
    quantized = np.clip(np.nan_to_num(values, nan=0.0), 0.0, 1.0)
    quantized = np.rint(quantized * 255.0).astype(np.uint8)
    h, w = values.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(quantized.tobytes())


def read_pgm16(path) -> np.ndarray:
    """Read a binary 16-bit PGM into a uint16 (H, W) grid."""
    blob = Path(path).read_bytes()
    m = re.match(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s", blob)
    if not m:
        raise FormatError(f"{path}: not a binary PGM header", offset=0)
    w, h, maxval = (int(m.group(i)) for i in (1, 2, 3))
    if maxval != 65535:
        raise FormatError(f"{path}: expected 16-bit PGM (maxval 65535), got {maxval}", offset=m.start(3))
    if w * h > _MAX_PIXELS:
        raise FormatError(f"{path}: implausible raster size {w}x{h}", offset=m.start(1))
    data = blob[m.end() :]
    if len(data) != 2 * w * h:
        raise FormatError(f"{path}: payload is {len(data)} bytes, expected {2 * w * h}", offset=m.end())
    return np.frombuffer(data, dtype=">u2").astype(np.uint16).reshape(h, w)


def load_intrinsics(path) -> tuple[CameraIntrinsics, dict]:
    """Load the JSON intrinsics sidecar; returns (intrinsics, raw dict)."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: sidecar must be a JSON object")
    for key in ("focal_px", "width", "height"):
        if key not in raw:
            raise DataError(f"{path}: missing intrinsics field {key!r}")
    principal = raw.get("principal")
    if principal is not None and (not isinstance(principal, list) or len(principal) != 2):
        raise DataError(f"{path}: 'principal' must be [x, y]")
    k = CameraIntrinsics(
        float(raw["focal_px"]),
        int(raw["width"]),
        int(raw["height"]),
        None if principal is None else float(principal[0]),
        None if principal is None else float(principal[1]),
    )
    return k, raw


def load_depth(depth_path, intrinsics_path) -> tuple[DepthMap, CameraIntrinsics]:
    """Load a depth raster (GPDM or 16-bit PGM) with its sidecar."""
    intrinsics, raw = load_intrinsics(intrinsics_path)
    magic = Path(depth_path).open("rb").read(2)
    if magic == GPDM_MAGIC[:2]:
        depth = DepthMap.from_array(read_gpdm(depth_path))
    elif magic == b"P5":
        scale = raw.get("scale_m_per_unit")
        if scale is None:
            raise DataError(f"{intrinsics_path}: PGM depth requires 'scale_m_per_unit' in the sidecar")
        counts = read_pgm16(depth_path).astype(np.float64)
        depth = DepthMap.from_array(np.where(counts > 0, counts * float(scale), np.nan))
    else:
        raise FormatError(f"{depth_path}: unknown raster magic {magic!r}", offset=0)
    if depth.width != intrinsics.width or depth.height != intrinsics.height:
        raise DataError(
            f"{depth_path}: raster {depth.width}x{depth.height} does not match sidecar "
            f"{intrinsics.width}x{intrinsics.height}"
        )
    return depth, intrinsics
