"""Gaze-target evaluation metrics: AUC, L2 distances, AP and P.Head.

All coordinates are normalized to the unit square. AUC ranks heatmap
pixels against a binarized target mask (Mann-Whitney statistic with
rank-averaged ties). Distances compare the heatmap argmax with each GT
annotation (min and average per instance). AP scores the in-vs-out
classification. P.Head is the precision of predictions landing inside
any head box against GT looking-at-head labels; its GT uses the single
rule (any annotation inside a box) or, with multiple annotations, the
multi rule (two annotations inside the same box).

``evaluate`` aggregates everything per subgroup (all / child / adult) in
instance-id order; instances whose gaze label excludes them from a
metric are counted, never silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .supervision import DEFAULT_GT_SIGMA, DEFAULT_HM_SIZE

GROUPS = ("all", "child", "adult")


@dataclass(frozen=True)
class Prediction:
    """Model output for one instance.

    When a heatmap is present the point must match its argmax (first
    maximum in row-major order, mapped to the pixel centre).
    """

    point: tuple[float, float]
    heatmap: Optional[np.ndarray] = None
    inout_score: Optional[float] = None

    def __post_init__(self):
        point = (float(self.point[0]), float(self.point[1]))
        object.__setattr__(self, "point", point)
        if self.heatmap is not None:
            hm = np.asarray(self.heatmap, dtype=np.float64)
            if hm.ndim != 2 or hm.size == 0:
                raise DataError("prediction heatmap must be a non-empty 2D grid")
            object.__setattr__(self, "heatmap", hm)
            derived = argmax_point(hm)
            # sub-pixel points are allowed, but must sit on the argmax pixel
            tol_x = 0.5 / hm.shape[1] + 1e-9
            tol_y = 0.5 / hm.shape[0] + 1e-9
            if abs(derived[0] - point[0]) > tol_x or abs(derived[1] - point[1]) > tol_y:
                raise DataError(
                    f"prediction point {point} does not match heatmap argmax {derived}"
                )
        if self.inout_score is not None:
            score = float(self.inout_score)
            if not 0.0 <= score <= 1.0:
                raise DataError(f"in/out score must lie in [0, 1], got {score}")
            object.__setattr__(self, "inout_score", score)

    @classmethod
    def from_heatmap(cls, heatmap, inout_score=None) -> "Prediction":
        return cls(argmax_point(np.asarray(heatmap, dtype=np.float64)), heatmap, inout_score)


@dataclass(frozen=True)
class GroundTruth:
    """Reference annotations for one instance.

    ``gaze_points`` may be empty (gaze not inside the frame), and
    ``inout_label`` may be None when the label maps to neither in nor out.
    """

    gaze_points: tuple = ()
    inout_label: Optional[int] = None
    head_boxes: tuple = ()

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.gaze_points)
        for x, y in pts:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise DataError(f"gaze point ({x}, {y}) outside the unit square")
        boxes = tuple(validate_box(b) for b in self.head_boxes)
        if self.inout_label is not None and self.inout_label not in (0, 1):
            raise DataError(f"in/out label must be 0 or 1, got {self.inout_label}")
        object.__setattr__(self, "gaze_points", pts)
        object.__setattr__(self, "head_boxes", boxes)


@dataclass(frozen=True)
class EvalInstance:
    instance_id: str
    prediction: Prediction
    gt: GroundTruth
    is_child: Optional[bool] = None


@dataclass(frozen=True)
class EvalConfig:
    hm_size: int = DEFAULT_HM_SIZE
    gt_sigma: float = DEFAULT_GT_SIGMA
    phead_rule: str = "auto"  # auto | single | multi

    @property
    def binarize_radius_norm(self) -> float:
        """AUC positives: pixel centres within 3*sigma of a GT point,
        expressed on the unit square via the reference grid size."""
        return 3.0 * self.gt_sigma / self.hm_size


@dataclass
class GroupReport:
    auc: Optional[float] = None
    dist_min: Optional[float] = None
    dist_avg: Optional[float] = None
    ap: Optional[float] = None
    p_head: Optional[float] = None
    counts: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    groups: dict  # group name -> GroupReport

    def to_json_obj(self) -> dict:
        out = {"groups": {}}
        for name in GROUPS:
            cell = self.groups[name]
            out["groups"][name] = {
                "auc": cell.auc,
                "dist_avg": cell.dist_avg,
                "dist_min": cell.dist_min,
                "ap": cell.ap,
                "p_head": cell.p_head,
                "counts": {k: cell.counts[k] for k in sorted(cell.counts)},
            }
        return out

    def format_table(self) -> str:
        def fmt(v):
            return "      -" if v is None else f"{v:7.4f}"

        lines = [
            f"{'group':<8} {'n':>5} {'auc':>7} {'d_avg':>7} {'d_min':>7} {'ap':>7} {'p_head':>7}"
        ]
        for name in GROUPS:
            cell = self.groups[name]
            lines.append(
                f"{name:<8} {cell.counts.get('instances', 0):>5} "
                f"{fmt(cell.auc)} {fmt(cell.dist_avg)} {fmt(cell.dist_min)} "
                f"{fmt(cell.ap)} {fmt(cell.p_head)}"
            )
        return "\n".join(lines) + "\n"


def validate_box(box) -> tuple[float, float, float, float]:
    x0, y0, x1, y1 = (float(v) for v in box)
    if not (x0 < x1 and y0 < y1):
        raise DataError(f"invalid box {box}: min must be < max per axis")
    return (x0, y0, x1, y1)


def point_in_box(point, box) -> bool:
    """Closed-interval membership: edge points count as inside."""
    x, y = point
    x0, y0, x1, y1 = box
    return x0 <= x <= x1 and y0 <= y <= y1


def argmax_point(heatmap) -> tuple[float, float]:
    """First row-major maximum, mapped to the pixel centre on [0, 1]^2."""
    hm = np.asarray(heatmap, dtype=np.float64)
    h, w = hm.shape
    flat = int(np.argmax(hm))
    i, j = divmod(flat, w)
    return ((j + 0.5) / w, (i + 0.5) / h)


def auc(pred_heatmap, gt_mask) -> float:
    """ROC AUC of heatmap pixels against a binary target mask.

    Ties are rank-averaged, i.e. the Mann-Whitney U statistic.
    """
    scores = np.asarray(pred_heatmap, dtype=np.float64).ravel().tolist()
    labels = np.asarray(gt_mask).astype(bool).ravel().tolist()
    if len(scores) != len(labels):
        raise DataError("heatmap and GT mask shapes differ")
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("degenerate GT mask: need at least one positive and one negative pixel")
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg_rank = (i + j + 2) / 2.0  # 1-based average rank of the tie group
        for k in range(i, j + 1):
            ranks[order[k]] = avg_rank
        i = j + 1
    rank_sum = 0.0
    for idx, lab in enumerate(labels):
        if lab:
            rank_sum += ranks[idx]
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def binarize_gt_mask(shape, gaze_points, radius_norm: float) -> np.ndarray:
    """Positive pixels: centre within ``radius_norm`` of any GT point."""
    h, w = shape
    cx = (np.arange(w, dtype=np.float64)[None, :] + 0.5) / w
    cy = (np.arange(h, dtype=np.float64)[:, None] + 0.5) / h
    mask = np.zeros((h, w), dtype=bool)
    for gx, gy in gaze_points:
        dx = cx - gx
        dy = cy - gy
        mask |= dx * dx + dy * dy <= radius_norm * radius_norm
    return mask


def distances(pred_point, gt_points) -> tuple[float, float]:
    """(min, mean) Euclidean distance from the prediction to the GT points."""
    if len(gt_points) == 0:
        raise DataError("distance needs at least one GT point")
    px, py = float(pred_point[0]), float(pred_point[1])
    d_min = None
    total = 0.0
    for gx, gy in gt_points:
        dx = px - gx
        dy = py - gy
        d = np.sqrt(dx * dx + dy * dy)
        total += d
        if d_min is None or d < d_min:
            d_min = d
    return float(d_min), float(total / len(gt_points))


def average_precision(scores: Sequence[float], labels: Sequence[int]) -> float:
    """AP with recall-increment weighting over the descending-score ranking.

    Ties keep their input order (stable sort), which pins the value.
    """
    if len(scores) != len(labels):
        raise DataError("scores/labels length mismatch")
    for lab in labels:
        if lab not in (0, 1):
            raise DataError(f"labels must be 0 or 1, got {lab}")
    for s in scores:
        if not np.isfinite(s):
            raise DataError(f"scores must be finite, got {s}")
    n_pos = sum(labels)
    if n_pos == 0:
        raise DataError("average precision needs at least one positive label")
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    tp = 0
    total = 0.0
    for rank, idx in enumerate(order, start=1):
        if labels[idx] == 1:
            tp += 1
            total += tp / rank
    return total / n_pos


def phead_gt(gaze_points, head_boxes, rule: str = "single") -> bool:
    """GT looking-at-head flag.

    single: any annotation inside any box. multi: at least two
    annotations inside the same box.
    """
    boxes = [validate_box(b) for b in head_boxes]
    if rule == "single":
        return any(point_in_box(p, b) for p in gaze_points for b in boxes)
    if rule == "multi":
        for b in boxes:
            if sum(1 for p in gaze_points if point_in_box(p, b)) >= 2:
                return True
        return False
    raise DataError(f"unknown P.Head rule {rule!r} (expected 'single' or 'multi')")


def phead_precision(instances) -> float:
    """TP / (TP + FP) over instances of (pred_point, head_boxes, gt_is_head).

    A prediction is positive when it falls inside any head box; it is a
    true positive when the GT flag holds as well.
    """
    tp = 0
    fp = 0
    for pred_point, head_boxes, gt_is_head in instances:
        boxes = [validate_box(b) for b in head_boxes]
        predicted = any(point_in_box(pred_point, b) for b in boxes)
        if predicted:
            if gt_is_head:
                tp += 1
            else:
                fp += 1
    if tp + fp == 0:
        raise DataError("no predicted looking-at-head positives; precision undefined")
    return tp / (tp + fp)


def _phead_rule_for(gt: GroundTruth, config: EvalConfig) -> str:
    if config.phead_rule in ("single", "multi"):
        return config.phead_rule
    return "multi" if len(gt.gaze_points) >= 2 else "single"


def _evaluate_group(instances: list[EvalInstance], config: EvalConfig) -> GroupReport:
    report = GroupReport()
    counts = {
        "instances": len(instances),
        "spatial": 0,
        "auc": 0,
        "auc_degenerate": 0,
        "inout": 0,
        "phead_considered": 0,
        "phead_predicted_positive": 0,
    }
    auc_values = []
    min_values = []
    avg_values = []
    ap_scores = []
    ap_labels = []
    phead_rows = []
    for inst in instances:
        gt = inst.gt
        if gt.gaze_points:
            counts["spatial"] += 1
            d_min, d_avg = distances(inst.prediction.point, gt.gaze_points)
            min_values.append(d_min)
            avg_values.append(d_avg)
            if inst.prediction.heatmap is not None:
                mask = binarize_gt_mask(
                    inst.prediction.heatmap.shape, gt.gaze_points, config.binarize_radius_norm
                )
                try:
                    auc_values.append(auc(inst.prediction.heatmap, mask))
                    counts["auc"] += 1
                except DataError:
                    counts["auc_degenerate"] += 1
            counts["phead_considered"] += 1
            rule = _phead_rule_for(gt, config)
            gt_is_head = phead_gt(gt.gaze_points, gt.head_boxes, rule)
            phead_rows.append((inst.prediction.point, gt.head_boxes, gt_is_head))
        if gt.inout_label is not None and inst.prediction.inout_score is not None:
            counts["inout"] += 1
            ap_scores.append(inst.prediction.inout_score)
            ap_labels.append(gt.inout_label)
    if auc_values:
        report.auc = sum(auc_values) / len(auc_values)
    if min_values:
        report.dist_min = sum(min_values) / len(min_values)
        report.dist_avg = sum(avg_values) / len(avg_values)
    if ap_labels and any(ap_labels):
        report.ap = average_precision(ap_scores, ap_labels)
    counts["phead_predicted_positive"] = sum(
        1 for point, boxes, _ in phead_rows if any(point_in_box(point, b) for b in boxes)
    )
    if counts["phead_predicted_positive"]:
        report.p_head = phead_precision(phead_rows)
    report.counts = counts
    return report


def evaluate(instances: Sequence[EvalInstance], config: EvalConfig = EvalConfig()) -> EvalReport:
    """Per-group metric report; instances are processed in id order."""
    inst = sorted(instances, key=lambda i: i.instance_id)
    if not inst:
        raise DataError("no instances to evaluate")
    ids = [i.instance_id for i in inst]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})[:3]
        raise DataError(f"duplicate instance ids: {dup}")
    groups = {
        "all": inst,
        "child": [i for i in inst if i.is_child is True],
        "adult": [i for i in inst if i.is_child is False],
    }
    return EvalReport({name: _evaluate_group(members, config) for name, members in groups.items()})
