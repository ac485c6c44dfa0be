"""Gaze annotation schema, validation, dataset statistics and agreement.

Annotations are JSON Lines, one person-frame instance per line, with
normalized coordinates. The gaze label is one of seven non-overlapping
classes; a 2D gaze point is present exactly when the label is
inside-frame. Instances are keyed by (video_id, clip_id, frame,
person_id); the same key may appear once per annotator.

Statistics follow the image convention of the geometry module: y grows
downward, angles are degrees in (-180, 180] with 0 pointing right, so a
gaze point directly below the head centre is at +90.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .metrics import (
    EvalConfig,
    EvalInstance,
    EvalReport,
    GroundTruth,
    Prediction,
    evaluate,
    phead_gt,
    validate_box,
)
from .supervision import render_gt_heatmap


class GazeLabel(str, enum.Enum):
    INSIDE = "inside-frame"
    OUTSIDE = "outside-frame"
    GAZE_SHIFT = "gaze-shift"
    OCCLUDED = "occluded"
    EYES_CLOSED = "eyes-closed"
    UNCERTAIN = "uncertain"
    NOT_ANNOTATED = "not-annotated"


LEGAL_LABELS = tuple(label.value for label in GazeLabel)

_REQUIRED_FIELDS = ("video_id", "clip_id", "frame", "person_id", "is_child", "head_bbox", "gaze_label")


@dataclass(frozen=True)
class AnnotationInstance:
    video_id: str
    clip_id: str
    frame: int
    person_id: str
    is_child: bool
    head_bbox: tuple[float, float, float, float]
    gaze_label: GazeLabel
    gaze_point: Optional[tuple[float, float]] = None
    annotator_id: Optional[str] = None

    def __post_init__(self):
        if self.frame < 0:
            raise DataError(f"frame must be >= 0, got {self.frame}")
        box = validate_box(self.head_bbox)
        for v in box:
            if not 0.0 <= v <= 1.0:
                raise DataError(f"head_bbox {box} outside the unit square")
        object.__setattr__(self, "head_bbox", box)
        if self.gaze_label is GazeLabel.INSIDE:
            if self.gaze_point is None:
                raise DataError("inside-frame instance requires a gaze_point")
            x, y = (float(self.gaze_point[0]), float(self.gaze_point[1]))
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise DataError(f"gaze_point ({x}, {y}) outside the unit square")
            object.__setattr__(self, "gaze_point", (x, y))
        elif self.gaze_point is not None:
            raise DataError(f"gaze_point is only allowed for inside-frame, not {self.gaze_label.value}")

    @property
    def key(self) -> tuple:
        return (self.video_id, self.clip_id, self.frame, self.person_id)

    @property
    def instance_id(self) -> str:
        return f"{self.video_id}/{self.clip_id}/{self.frame}/{self.person_id}"

    def head_center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.head_bbox
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)

    def to_json_obj(self) -> dict:
        obj = {
            "video_id": self.video_id,
            "clip_id": self.clip_id,
            "frame": self.frame,
            "person_id": self.person_id,
            "is_child": self.is_child,
            "head_bbox": list(self.head_bbox),
            "gaze_label": self.gaze_label.value,
        }
        if self.gaze_point is not None:
            obj["gaze_point"] = list(self.gaze_point)
        if self.annotator_id is not None:
            obj["annotator_id"] = self.annotator_id
        return obj


def _instance_from_obj(obj: dict, line: int) -> AnnotationInstance:
    for name in _REQUIRED_FIELDS:
        if name not in obj:
            raise DataError(f"line {line}: missing field {name!r}")
    label_raw = obj["gaze_label"]
    try:
        label = GazeLabel(label_raw)
    except ValueError:
        raise DataError(
            f"line {line}: unknown gaze_label {label_raw!r}; legal values: {', '.join(LEGAL_LABELS)}"
        ) from None
    point = obj.get("gaze_point")
    try:
        return AnnotationInstance(
            video_id=str(obj["video_id"]),
            clip_id=str(obj["clip_id"]),
            frame=int(obj["frame"]),
            person_id=str(obj["person_id"]),
            is_child=bool(obj["is_child"]),
            head_bbox=tuple(obj["head_bbox"]),
            gaze_label=label,
            gaze_point=None if point is None else (point[0], point[1]),
            annotator_id=obj.get("annotator_id"),
        )
    except DataError as e:
        raise DataError(f"line {line}: {e}") from None
    except (TypeError, ValueError) as e:
        raise DataError(f"line {line}: malformed field: {e}") from None


def parse_annotations(source) -> list[AnnotationInstance]:
    """Parse a JSON Lines annotation file (path or iterable of lines)."""
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text().splitlines()
    else:
        lines = [str(l) for l in source]
    instances = []
    for i, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f"line {i}: invalid JSON: {e.msg}") from None
        if not isinstance(obj, dict):
            raise DataError(f"line {i}: each line must hold a JSON object")
        instances.append(_instance_from_obj(obj, i))
    return instances


def gaze_angle_deg(head_center, gaze_point) -> float:
    """Angle of (gaze - head centre) in degrees, y-down, in (-180, 180]."""
    dx = gaze_point[0] - head_center[0]
    dy = gaze_point[1] - head_center[1]
    deg = math.degrees(math.atan2(dy, dx))
    return 180.0 if deg == -180.0 else deg


@dataclass(frozen=True)
class StatsConfig:
    area_bins: int = 50
    area_range: tuple[float, float] = (0.0, 1.0)
    angle_bins: int = 36
    dist_bins: int = 50
    dist_range: tuple[float, float] = (0.0, math.sqrt(2.0))
    point_grid: tuple[int, int] = (32, 32)  # (width, height)


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    def to_json_obj(self) -> dict:
        return {"edges": [float(e) for e in self.edges], "counts": [int(c) for c in self.counts]}


@dataclass
class DatasetStats:
    n_instances: int
    n_inside_frame: int
    n_skipped_no_point: int
    child_fraction: float
    label_distribution: dict
    head_area: Histogram
    gaze_angle_deg: Histogram
    head_gaze_distance: Histogram
    gaze_point_grid: np.ndarray  # (H, W) int counts
    looking_at_head_pct: dict  # {"all"|"multi_person": {"child"|"adult"|"overall": pct|None}}

    def to_json_obj(self) -> dict:
        return {
            "n_instances": self.n_instances,
            "n_inside_frame": self.n_inside_frame,
            "n_skipped_no_point": self.n_skipped_no_point,
            "child_fraction": self.child_fraction,
            "label_distribution": self.label_distribution,
            "head_area": self.head_area.to_json_obj(),
            "gaze_angle_deg": self.gaze_angle_deg.to_json_obj(),
            "head_gaze_distance": self.head_gaze_distance.to_json_obj(),
            "gaze_point_grid": {
                "width": int(self.gaze_point_grid.shape[1]),
                "height": int(self.gaze_point_grid.shape[0]),
                "counts": [[int(c) for c in row] for row in self.gaze_point_grid],
            },
            "looking_at_head_pct": self.looking_at_head_pct,
        }


def label_distribution(instances: Sequence[AnnotationInstance]) -> dict:
    """Fraction of instances per gaze label; fractions sum to one."""
    if not instances:
        raise DataError("label distribution needs at least one instance")
    counts = {label.value: 0 for label in GazeLabel}
    for inst in instances:
        counts[inst.gaze_label.value] += 1
    n = len(instances)
    return {name: counts[name] / n for name in counts}


def _clipped_histogram(values, bins, lo, hi) -> Histogram:
    arr = np.clip(np.asarray(values, dtype=np.float64), lo, hi)
    counts, edges = np.histogram(arr, bins=bins, range=(lo, hi))
    return Histogram(edges, counts)


def _pct(flags: list[bool]) -> Optional[float]:
    return None if not flags else 100.0 * sum(flags) / len(flags)


def compute_stats(
    instances: Sequence[AnnotationInstance],
    head_detections: Optional[dict] = None,
    config: StatsConfig = StatsConfig(),
) -> DatasetStats:
    """Geometric and label statistics over an annotation set.

    ``head_detections`` maps (video_id, frame) to a list of boxes; when
    absent, looking-at-head uses the annotated head boxes sharing the
    instance's frame (including the subject's own).
    """
    if not instances:
        raise DataError("stats need at least one instance")

    by_frame: dict = {}
    for inst in instances:
        by_frame.setdefault((inst.video_id, inst.clip_id, inst.frame), []).append(inst)
    multi_person_frames = {
        key for key, members in by_frame.items() if len({m.person_id for m in members}) >= 2
    }

    areas = []
    angles = []
    dists = []
    px = []
    py = []
    look_flags: dict = {"all": {"child": [], "adult": []}, "multi_person": {"child": [], "adult": []}}
    n_inside = 0
    for inst in instances:
        if inst.gaze_label is not GazeLabel.INSIDE:
            continue
        n_inside += 1
        center = inst.head_center()
        x0, y0, x1, y1 = inst.head_bbox
        areas.append((x1 - x0) * (y1 - y0))
        angles.append(gaze_angle_deg(center, inst.gaze_point))
        dists.append(math.hypot(inst.gaze_point[0] - center[0], inst.gaze_point[1] - center[1]))
        px.append(inst.gaze_point[0])
        py.append(inst.gaze_point[1])

        if head_detections is not None:
            boxes = head_detections.get((inst.video_id, inst.frame), [])
        else:
            boxes = [m.head_bbox for m in by_frame[(inst.video_id, inst.clip_id, inst.frame)]]
        looked = phead_gt([inst.gaze_point], boxes, "single")
        group = "child" if inst.is_child else "adult"
        look_flags["all"][group].append(looked)
        if (inst.video_id, inst.clip_id, inst.frame) in multi_person_frames:
            look_flags["multi_person"][group].append(looked)

    grid_w, grid_h = config.point_grid
    if px:
        point_counts, _, _ = np.histogram2d(
            np.clip(py, 0.0, 1.0), np.clip(px, 0.0, 1.0), bins=(grid_h, grid_w), range=((0, 1), (0, 1))
        )
    else:
        point_counts = np.zeros((grid_h, grid_w))

    pct = {
        pop: {
            "child": _pct(flags["child"]),
            "adult": _pct(flags["adult"]),
            "overall": _pct(flags["child"] + flags["adult"]),
        }
        for pop, flags in look_flags.items()
    }

    return DatasetStats(
        n_instances=len(instances),
        n_inside_frame=n_inside,
        n_skipped_no_point=len(instances) - n_inside,
        child_fraction=sum(1 for i in instances if i.is_child) / len(instances),
        label_distribution=label_distribution(instances),
        head_area=_clipped_histogram(areas, config.area_bins, *config.area_range),
        gaze_angle_deg=_clipped_histogram(angles, config.angle_bins, -180.0, 180.0),
        head_gaze_distance=_clipped_histogram(dists, config.dist_bins, *config.dist_range),
        gaze_point_grid=point_counts.astype(np.int64),
        looking_at_head_pct=pct,
    )


def write_stats_csv(stats: DatasetStats, out_dir) -> list[Path]:
    """One CSV per histogram (bin edges included); returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, hist in (
        ("head_area", stats.head_area),
        ("gaze_angle_deg", stats.gaze_angle_deg),
        ("head_gaze_distance", stats.head_gaze_distance),
    ):
        path = out_dir / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_lo", "bin_hi", "count"])
            for i, count in enumerate(hist.counts):
                writer.writerow([repr(float(hist.edges[i])), repr(float(hist.edges[i + 1])), int(count)])
        written.append(path)
    path = out_dir / "gaze_point_grid.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row"] + [f"x{j}" for j in range(stats.gaze_point_grid.shape[1])])
        for i, row in enumerate(stats.gaze_point_grid):
            writer.writerow([i] + [int(c) for c in row])
    written.append(path)
    return written


def render_head_mask(bbox, width: int, height: int) -> np.ndarray:
    """Binary head-location mask: 1 over the pixel-quantized box.

    A box that quantizes to zero area yields a single pixel at its centre.
    """
    box = validate_box(bbox)
    x0 = math.floor(box[0] * width)
    x1 = math.ceil(box[2] * width)
    y0 = math.floor(box[1] * height)
    y1 = math.ceil(box[3] * height)
    x0, x1 = max(0, x0), min(width, x1)
    y0, y1 = max(0, y0), min(height, y1)
    mask = np.zeros((height, width), dtype=np.uint8)
    if x1 <= x0 or y1 <= y0:
        cx = min(width - 1, max(0, math.floor((box[0] + box[2]) / 2.0 * width)))
        cy = min(height - 1, max(0, math.floor((box[1] + box[3]) / 2.0 * height)))
        mask[cy, cx] = 1
        return mask
    mask[y0:y1, x0:x1] = 1
    return mask


def _inout_of(inst: AnnotationInstance) -> Optional[int]:
    if inst.gaze_label is GazeLabel.INSIDE:
        return 1
    if inst.gaze_label is GazeLabel.OUTSIDE:
        return 0
    return None  # the other five classes carry no in/out information


def agreement_eval(
    double_coded: Sequence[tuple[AnnotationInstance, AnnotationInstance]],
    head_detections: Optional[dict] = None,
    config: EvalConfig = EvalConfig(),
) -> EvalReport:
    """Inter-annotator agreement: annotator A scored as a prediction
    against annotator B as ground truth, through the regular metrics.

    A's gaze point is expanded into a Gaussian heatmap on the config grid
    so AUC is defined; in/out labels map inside->1, outside->0 and the
    remaining classes are excluded from AP.
    """
    mismatched = [
        (a.instance_id, b.instance_id) for a, b in double_coded if a.key != b.key
    ]
    if mismatched:
        raise DataError(f"double-coded pairs disagree on instance keys: {mismatched[:3]}")
    instances = []
    for a, b in double_coded:
        if a.is_child != b.is_child:
            raise DataError(f"{a.instance_id}: annotators disagree on is_child")
        both_inside = a.gaze_label is GazeLabel.INSIDE and b.gaze_label is GazeLabel.INSIDE
        boxes = ()
        if head_detections is not None:
            boxes = tuple(head_detections.get((a.video_id, a.frame), ()))
        a_in = _inout_of(a)
        score = None if a_in is None else float(a_in)
        if both_inside:
            hm = _point_heatmap(a.gaze_point, config)
            pred = Prediction(a.gaze_point, hm, score)
            gt = GroundTruth(gaze_points=[b.gaze_point], inout_label=_inout_of(b), head_boxes=boxes)
        else:
            pred = Prediction(a.gaze_point or (0.5, 0.5), None, score)
            gt = GroundTruth(gaze_points=[], inout_label=_inout_of(b), head_boxes=boxes)
        annot = a.annotator_id or "a"
        instances.append(EvalInstance(f"{a.instance_id}/{annot}", pred, gt, a.is_child))
    return evaluate(instances, config)


def _point_heatmap(point: tuple[float, float], config: EvalConfig) -> np.ndarray:
    """Gaussian heatmap peaked at a normalized point, on the config grid.

    Pixel centre j maps to (j + 0.5) / size, so the peak lands within half
    a pixel of the point, as the Prediction invariant requires.
    """
    size = config.hm_size
    peak = (
        min(size - 1.0, max(0.0, point[0] * size - 0.5)),
        min(size - 1.0, max(0.0, point[1] * size - 0.5)),
    )
    return render_gt_heatmap(peak, (size, size), config.gt_sigma).values
