"""Command-line interface.

Subcommands: unproject, fov, eval, stats, stability, losses. Every run
is deterministic given its inputs and --seed: outputs are written with
fixed key order and 17-significant-digit floats, and all randomness
flows from the seed through named generators.

Exit codes: 0 success, 1 data error, 2 usage error, 3 completed with
warnings (e.g. an empty point cloud).

A JSON config file (--config) may supply any long flag by its
destination name; explicit flags win over the config file.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import metrics as mx
from . import supervision as sv
from .stability import (
    FileDepthProvider,
    ImageSpec,
    PlaneScene,
    StabilityConfig,
    SyntheticDepthProvider,
    stability,
)
from .errors import DataError
from .fov import cone2d_heatmap, cosine_field, fov_heatmap
from .geometry import build_eye_frame, to_eye_frame, unproject
from .ioutil import dumps_json, format_float, read_jsonl, write_json
from .rasters import load_depth, read_gpdm, write_gpdm, write_pgm8

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2
EXIT_WARN = 3


class UsageError(Exception):
    pass


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected X,Y - got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected X,Y,Z - got {text!r}")
    return tuple(float(p) for p in parts)


class Resolver:
    """Merge precedence: explicit flag > config file > default."""

    def __init__(self, args):
        self.args = args
        self.config = {}
        if getattr(args, "config", None):
            try:
                self.config = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise DataError(f"config file {args.config}: {e}") from None
            if not isinstance(self.config, dict):
                raise DataError(f"config file {args.config} must hold a JSON object")

    def get(self, name, default=None):
        value = getattr(self.args, name, None)
        if value is not None and value is not False:
            return value
        if name in self.config:
            return self.config[name]
        return default


def _require(res: Resolver, name: str, flag: str):
    value = res.get(name)
    if value is None:
        raise UsageError(f"missing required option {flag}")
    return value


def _sidecar_for(res: Resolver, depth_path: str) -> str:
    explicit = res.get("intrinsics")
    if explicit:
        return explicit
    guess = str(depth_path) + ".json"
    if Path(guess).exists():
        return guess
    raise UsageError(f"no --intrinsics given and sidecar {guess} not found")


# ------------------------------------------------------------------ unproject


def cmd_unproject(args) -> int:
    res = Resolver(args)
    depth_path = _require(res, "depth", "--depth")
    out_path = _require(res, "out", "--out")
    depth, intrinsics = load_depth(depth_path, _sidecar_for(res, depth_path))
    cloud = unproject(depth, intrinsics)
    with open(out_path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(cloud)}\n")
        fh.write("property double x\nproperty double y\nproperty double z\n")
        fh.write("end_header\n")
        for p in cloud.points:
            fh.write(f"{format_float(p[0])} {format_float(p[1])} {format_float(p[2])}\n")
    summary_path = res.get("summary")
    z = cloud.points[:, 2] if len(cloud) else np.array([])
    summary = {
        "n_points": len(cloud),
        "width": depth.width,
        "height": depth.height,
        "depth_min": float(z.min()) if len(z) else None,
        "depth_max": float(z.max()) if len(z) else None,
    }
    if summary_path:
        write_json(summary_path, summary)
    if len(cloud) == 0:
        print("warning: no valid depth pixels; wrote an empty cloud", file=sys.stderr)
        return EXIT_WARN
    return EXIT_OK


# ------------------------------------------------------------------ fov


def cmd_fov(args) -> int:
    res = Resolver(args)
    depth_path = _require(res, "depth", "--depth")
    out_path = _require(res, "out", "--out")
    cone = bool(res.get("cone", False))
    gaze3 = res.get("gaze")
    gaze2 = res.get("gaze2d")
    if cone:
        if gaze2 is None or res.get("head_px") is None:
            raise UsageError("--cone requires --gaze2d and --head-px")
        if gaze3 is not None:
            raise UsageError("--cone takes --gaze2d, not a 3D --gaze vector")
    else:
        if gaze3 is None or res.get("eye_px") is None:
            raise UsageError("3D field requires --gaze and --eye-px (or use --cone)")
        if gaze2 is not None:
            raise UsageError("--gaze2d is only valid with --cone")
    depth, intrinsics = load_depth(depth_path, _sidecar_for(res, depth_path))
    if cone:
        g = np.asarray(gaze2, dtype=float)
        norm = float(np.hypot(g[0], g[1]))
        if norm == 0.0:
            raise DataError("2D gaze direction must be non-zero")
        field = cone2d_heatmap(res.get("head_px"), g / norm, depth.width, depth.height)
    else:
        from .geometry import median_depth_3x3, unproject_pixel

        ex, ey = (int(v) for v in res.get("eye_px"))
        eye_point = unproject_pixel(intrinsics, ex, ey, median_depth_3x3(depth, ex, ey))
        frame = build_eye_frame(eye_point)
        cloud = to_eye_frame(unproject(depth, intrinsics), frame)
        g = np.asarray(gaze3, dtype=float)
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            raise DataError("gaze vector must be non-zero")
        field = fov_heatmap(cosine_field(cloud, g / norm))
    write_gpdm(out_path, field.values, field.valid)
    pgm_path = res.get("pgm")
    if pgm_path:
        write_pgm8(pgm_path, np.where(field.valid, field.values, np.nan))
    return EXIT_OK


# ------------------------------------------------------------------ eval


def _load_detections(path):
    detections = {}
    for i, obj in read_jsonl(path):
        for name in ("video_id", "frame", "boxes"):
            if name not in obj:
                raise DataError(f"{path}: line {i}: missing field {name!r}")
        key = (str(obj["video_id"]), int(obj["frame"]))
        detections.setdefault(key, []).extend(
            mx.validate_box(b) for b in obj["boxes"]
        )
    return detections


def _gt_from_annotations(members) -> mx.GroundTruth:
    points = [m.gaze_point for m in members if m.gaze_label is ds.GazeLabel.INSIDE]
    votes = [v for v in (ds._inout_of(m) for m in members) if v is not None]
    if votes:
        ones = sum(votes)
        inout = 1 if ones * 2 >= len(votes) else 0
    else:
        inout = None
    return mx.GroundTruth(gaze_points=points, inout_label=inout, head_boxes=())


def _load_predictions(path, threads=1):
    records = list(read_jsonl(path))
    base = Path(path).parent

    def build(item):
        i, obj = item
        if "instance_id" not in obj or "point" not in obj:
            raise DataError(f"{path}: line {i}: needs 'instance_id' and 'point'")
        heatmap = None
        if obj.get("heatmap_path"):
            raster = read_gpdm(base / obj["heatmap_path"])
            heatmap = np.nan_to_num(raster, nan=0.0)
        try:
            pred = mx.Prediction(tuple(obj["point"]), heatmap, obj.get("inout_score"))
        except DataError as e:
            raise DataError(f"{path}: line {i}: {e}") from None
        return str(obj["instance_id"]), pred
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            built = list(pool.map(build, records))
    else:
        built = [build(r) for r in records]
    predictions = {}
    for iid, pred in built:
        if iid in predictions:
            raise DataError(f"{path}: duplicate prediction for instance {iid!r}")
        predictions[iid] = pred
    return predictions


def cmd_eval(args) -> int:
    res = Resolver(args)
    ann_path = _require(res, "annotations", "--annotations")
    pred_path = _require(res, "predictions", "--predictions")
    out_path = _require(res, "out", "--out")
    only_children = bool(res.get("only_children", False))
    only_adults = bool(res.get("only_adults", False))
    if only_children and only_adults:
        raise UsageError("--only-children and --only-adults are mutually exclusive")
    config = mx.EvalConfig(
        hm_size=int(res.get("hm_size", sv.DEFAULT_HM_SIZE)),
        gt_sigma=float(res.get("gt_sigma", sv.DEFAULT_GT_SIGMA)),
        phead_rule=str(res.get("phead_rule", "auto")),
    )
    annotations = ds.parse_annotations(ann_path)
    det_path = res.get("detections")
    detections = _load_detections(det_path) if det_path else None

    grouped: dict = {}
    for inst in annotations:
        grouped.setdefault(inst.key, []).append(inst)
    predictions = _load_predictions(pred_path, threads=int(res.get("threads", 1)))

    instances = []
    for key in sorted(grouped):
        members = grouped[key]
        iid = members[0].instance_id
        children = {m.is_child for m in members}
        if len(children) > 1:
            raise DataError(f"{iid}: annotators disagree on is_child")
        is_child = children.pop()
        if only_children and not is_child:
            continue
        if only_adults and is_child:
            continue
        if iid not in predictions:
            raise DataError(f"no prediction for instance {iid!r}")
        gt = _gt_from_annotations(members)
        if detections is not None:
            boxes = detections.get((members[0].video_id, members[0].frame), [])
            gt = mx.GroundTruth(gt.gaze_points, gt.inout_label, tuple(boxes))
        instances.append(mx.EvalInstance(iid, predictions[iid], gt, is_child))
    evaluated_ids = {i.instance_id for i in instances}
    if not (only_children or only_adults):
        unmatched = sorted(set(predictions) - evaluated_ids)
        if unmatched:
            raise DataError(f"predictions without annotations: {unmatched[:3]}")
    report = mx.evaluate(instances, config)
    obj = report.to_json_obj()
    obj["config"] = {
        "hm_size": config.hm_size,
        "gt_sigma": config.gt_sigma,
        "phead_rule": config.phead_rule,
    }
    notes = []
    if detections is None:
        notes.append("head detections not provided; P.Head is null")
        for cell in obj["groups"].values():
            cell["p_head"] = None
    obj["notes"] = notes
    write_json(out_path, obj)
    text_path = res.get("text")
    if text_path:
        Path(text_path).write_text(report.format_table())
    return EXIT_OK


# ------------------------------------------------------------------ stats


def cmd_stats(args) -> int:
    res = Resolver(args)
    ann_path = _require(res, "annotations", "--annotations")
    out_path = _require(res, "out", "--out")
    instances = ds.parse_annotations(ann_path)
    det_path = res.get("detections")
    detections = _load_detections(det_path) if det_path else None
    grid = int(res.get("point_grid", 32))
    stats = ds.compute_stats(instances, detections, ds.StatsConfig(point_grid=(grid, grid)))
    write_json(out_path, stats.to_json_obj())
    csv_dir = res.get("csv_dir")
    if csv_dir:
        ds.write_stats_csv(stats, csv_dir)
    return EXIT_OK


# ------------------------------------------------------------------ stability


def _provider_from_manifest(obj, line, shift_scale, seed):
    width, height = int(obj["width"]), int(obj["height"])
    if "synthetic" in obj:
        params = obj["synthetic"]
        scene = PlaneScene(
            tuple(params.get("plane_normal", (0.0, 0.0, 1.0))),
            float(params.get("plane_offset", 5.0)),
        )
        return SyntheticDepthProvider(
            width, height, float(params["focal_px"]), scene, shift_scale=shift_scale, seed=seed
        )
    if "depth_paths" in obj:
        from .rasters import load_intrinsics

        intrinsics, _ = load_intrinsics(obj["intrinsics_path"])
        paths = {k: v for k, v in obj["depth_paths"].items()}
        sidecars = {k: v + ".json" for k, v in paths.items()}
        return FileDepthProvider(intrinsics, paths, sidecars, obj.get("focal_by_crop"))
    raise DataError(f"manifest line {line}: needs 'synthetic' or 'depth_paths'")


def cmd_stability(args) -> int:
    res = Resolver(args)
    manifest = _require(res, "manifest", "--manifest")
    out_path = _require(res, "out", "--out")
    mode = str(res.get("mode", "consistent"))
    if mode not in ("consistent", "recentered"):
        raise UsageError(f"--mode must be consistent or recentered, got {mode!r}")
    seed = int(res.get("seed", 0))
    shift = float(res.get("utss_shift", 0.0))
    config = StabilityConfig(
        n_crops=int(res.get("crops", 5)),
        min_area_fraction=float(res.get("min_area_frac", 0.25)),
    )
    images = []
    for i, obj in read_jsonl(manifest):
        for name in ("image_id", "width", "height", "eye_px", "gaze_px"):
            if name not in obj:
                raise DataError(f"{manifest}: line {i}: missing field {name!r}")
        provider = _provider_from_manifest(obj, i, shift, seed)
        images.append(
            ImageSpec(
                str(obj["image_id"]),
                int(obj["width"]),
                int(obj["height"]),
                tuple(int(v) for v in obj["eye_px"]),
                tuple(int(v) for v in obj["gaze_px"]),
                provider,
            )
        )
    result = stability(images, mode, seed=seed, config=config)
    obj = result.to_json_obj()
    obj["config"] = {
        "mode": mode,
        "seed": seed,
        "n_crops": config.n_crops,
        "min_area_fraction": config.min_area_fraction,
        "utss_shift": shift,
    }
    write_json(out_path, obj)
    return EXIT_OK


# ------------------------------------------------------------------ losses


def cmd_losses(args) -> int:
    res = Resolver(args)
    rows_path = _require(res, "rows", "--rows")
    out_path = _require(res, "out", "--out")
    weights = sv.LossWeights(
        float(res.get("lambda_hm", 100.0)),
        float(res.get("lambda_dir", 0.1)),
        float(res.get("lambda_io", 1.0)),
    )
    sigma = float(res.get("gt_sigma", sv.DEFAULT_GT_SIGMA))
    rows_out = []
    part_sums = {"hm": [], "dir": [], "io": [], "total": []}
    for i, obj in read_jsonl(rows_path):
        rid = str(obj.get("id", f"row{i}"))
        entry = {"id": rid, "loss_hm": None, "loss_dir": None, "loss_io": None, "total": None}
        try:
            if obj.get("pred_heatmap") is not None and (
                obj.get("gt_point") is not None or obj.get("gt_heatmap") is not None
            ):
                pred = np.asarray(obj["pred_heatmap"], dtype=np.float64)
                if pred.ndim != 2:
                    raise DataError("pred_heatmap must be a 2D array")
                if obj.get("gt_heatmap") is not None:
                    gt = np.asarray(obj["gt_heatmap"], dtype=np.float64)
                else:
                    gt = sv.render_gt_heatmap(obj["gt_point"], (pred.shape[1], pred.shape[0]), sigma)
                entry["loss_hm"] = sv.loss_heatmap(pred, gt)
            if obj.get("g_p") is not None and obj.get("g_gt") is not None:
                entry["loss_dir"] = sv.loss_direction(obj["g_p"], obj["g_gt"])
            if obj.get("o_p") is not None and obj.get("o_gt") is not None:
                entry["loss_io"] = sv.loss_inout(float(obj["o_p"]), float(obj["o_gt"]))
        except DataError as e:
            raise DataError(f"{rows_path}: line {i}: {e}") from None
        if None not in (entry["loss_hm"], entry["loss_dir"], entry["loss_io"]):
            entry["total"] = sv.loss_total(
                (entry["loss_hm"], entry["loss_dir"], entry["loss_io"]), weights
            )
        for name, key in (("hm", "loss_hm"), ("dir", "loss_dir"), ("io", "loss_io"), ("total", "total")):
            if entry[key] is not None:
                part_sums[name].append(entry[key])
        rows_out.append(entry)
    if not rows_out:
        raise DataError(f"{rows_path}: no rows")
    aggregate = {
        name: (sum(vals) / len(vals) if vals else None) for name, vals in part_sums.items()
    }
    write_json(
        out_path,
        {
            "weights": {
                "lambda_hm": weights.lambda_hm,
                "lambda_dir": weights.lambda_dir,
                "lambda_io": weights.lambda_io,
            },
            "gt_sigma": sigma,
            "rows": rows_out,
            "aggregate_mean": aggregate,
        },
    )
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file supplying defaults for any flag")
        p.add_argument("--seed", type=int, help="seed for all randomness (default 0)")
        p.add_argument("--threads", type=int, help="worker threads for per-instance work")

    p = sub.add_parser("unproject", help="depth raster -> ASCII PLY point cloud")
    add_common(p)
    p.add_argument("--depth")
    p.add_argument("--intrinsics")
    p.add_argument("--out")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_unproject)

    p = sub.add_parser("fov", help="field-of-view heatmap raster from depth + gaze")
    add_common(p)
    p.add_argument("--depth")
    p.add_argument("--intrinsics")
    p.add_argument("--eye-px", dest="eye_px", type=_pair)
    p.add_argument("--gaze", type=_triple, help="3D gaze vector in the eye frame")
    p.add_argument("--cone", action="store_true", help="planar cone baseline")
    p.add_argument("--head-px", dest="head_px", type=_pair)
    p.add_argument("--gaze2d", type=_pair, help="2D image-plane gaze direction")
    p.add_argument("--out")
    p.add_argument("--pgm", help="optional 8-bit PGM preview path")
    p.set_defaults(func=cmd_fov)

    p = sub.add_parser("eval", help="metric report from predictions + annotations")
    add_common(p)
    p.add_argument("--predictions")
    p.add_argument("--annotations")
    p.add_argument("--detections")
    p.add_argument("--out")
    p.add_argument("--text", help="optional plain-text table path")
    p.add_argument("--hm-size", dest="hm_size", type=int)
    p.add_argument("--gt-sigma", dest="gt_sigma", type=float)
    p.add_argument("--phead-rule", dest="phead_rule", choices=["auto", "single", "multi"])
    p.add_argument("--only-children", dest="only_children", action="store_true")
    p.add_argument("--only-adults", dest="only_adults", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="annotation statistics")
    add_common(p)
    p.add_argument("--annotations")
    p.add_argument("--detections")
    p.add_argument("--out")
    p.add_argument("--csv-dir", dest="csv_dir")
    p.add_argument("--point-grid", dest="point_grid", type=int)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("stability", help="crop-ensemble gaze-vector stability audit")
    add_common(p)
    p.add_argument("--manifest")
    p.add_argument("--mode", choices=["consistent", "recentered"])
    p.add_argument("--out")
    p.add_argument("--crops", type=int)
    p.add_argument("--min-area-frac", dest="min_area_frac", type=float)
    p.add_argument("--utss-shift", dest="utss_shift", type=float)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("losses", help="batch loss evaluation over a supervision file")
    add_common(p)
    p.add_argument("--rows")
    p.add_argument("--out")
    p.add_argument("--lambda-hm", dest="lambda_hm", type=float)
    p.add_argument("--lambda-dir", dest="lambda_dir", type=float)
    p.add_argument("--lambda-io", dest="lambda_io", type=float)
    p.add_argument("--gt-sigma", dest="gt_sigma", type=float)
    p.set_defaults(func=cmd_losses)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
