#!/usr/bin/env python3
"""Generate the deterministic demo/fixture dataset.

Writes a small fully-synthetic input set exercising every CLI
subcommand: a slanted-plane depth raster with sidecar, an eight-instance
annotation file (one instance double coded), matching predictions with
heatmap rasters, head detections, a batch-loss row file and a stability
manifest. Byte-identical on every run.

Usage: python scripts/make_demo_data.py --out DIR
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gazekit.ioutil import write_json, write_jsonl
from gazekit.rasters import write_gpdm
from gazekit.supervision import render_gt_heatmap

# (id parts, is_child, label, gaze points (annotator list), pred peak px, inout score)
INSTANCES = [
    (("v1", "c1", 0, "p1"), True, "inside-frame", [(0.3125, 0.4375)], (2, 3), 0.9),
    (("v1", "c1", 0, "p2"), False, "inside-frame", [(0.8125, 0.1875)], (5, 2), 0.8),
    (("v1", "c1", 1, "p1"), True, "outside-frame", [], (1, 1), 0.82),
    (("v1", "c1", 1, "p3"), False, "inside-frame", [(0.5625, 0.5625)], (4, 4), 0.95),
    (("v2", "c1", 0, "p1"), True, "inside-frame", [(0.0625, 0.0625)], (1, 0), 0.7),
    (("v2", "c1", 0, "p2"), False, "outside-frame", [], (6, 6), 0.1),
    (("v2", "c1", 2, "p1"), True, "inside-frame", [(0.4375, 0.5625), (0.5, 0.625)], (3, 4), 0.85),
    (("v2", "c1", 3, "p2"), False, "uncertain", [], (2, 5), 0.5),
]

DETECTIONS = [
    {"video_id": "v1", "frame": 0, "boxes": [[0.25, 0.375, 0.375, 0.5], [0.86, 0.86, 0.99, 0.99]]},
    {"video_id": "v1", "frame": 1, "boxes": [[0.5, 0.5, 0.625, 0.625]]},
    {"video_id": "v2", "frame": 0, "boxes": [[0.15, 0.03, 0.26, 0.11]]},
    {"video_id": "v2", "frame": 2, "boxes": [[0.4, 0.5, 0.6, 0.7]]},
]

HM_SIZE = 8
HM_SIGMA = 1.2


def head_box_for(points, fallback=(0.45, 0.45, 0.55, 0.55)):
    """A small box near the subject; annotation content only."""
    if not points:
        return list(fallback)
    cx = min(0.94, max(0.06, points[0][0] - 0.25))
    cy = min(0.94, max(0.06, points[0][1] - 0.25))
    return [cx - 0.06, cy - 0.06, cx + 0.06, cy + 0.06]


def write_depth(out: Path) -> None:
    w, h, f = 32, 24, 40.0
    xs = np.arange(w, dtype=np.float64)[None, :]
    ys = np.arange(h, dtype=np.float64)[:, None]
    rx = (xs - w / 2) / f
    ry = (ys - h / 2) / f
    normal = np.array([0.19611613513818404, 0.0980580675690920, 0.9756382561962222])
    depth = 6.0 / (normal[0] * rx + normal[1] * ry + normal[2])
    depth[5, 7] = np.nan  # one invalid pixel
    write_gpdm(out / "depth.gpdm", depth)
    write_json(out / "depth.gpdm.json", {"focal_px": f, "width": w, "height": h})


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()
    out = Path(args.out)
    (out / "hm").mkdir(parents=True, exist_ok=True)

    write_depth(out)

    annotations = []
    predictions = []
    for parts, is_child, label, points, peak, score in INSTANCES:
        video, clip, frame, person = parts
        for ai, point in enumerate(points or [None]):
            line = {
                "video_id": video,
                "clip_id": clip,
                "frame": frame,
                "person_id": person,
                "is_child": is_child,
                "head_bbox": head_box_for(points),
                "gaze_label": label,
            }
            if point is not None:
                line["gaze_point"] = list(point)
            if len(points) > 1:
                line["annotator_id"] = f"ann{ai}"
            annotations.append(line)
        hm_name = f"hm/{video}_{clip}_{frame}_{person}.gpdm"
        hm = render_gt_heatmap(peak, (HM_SIZE, HM_SIZE), HM_SIGMA).values
        write_gpdm(out / hm_name, hm)
        predictions.append(
            {
                "instance_id": f"{video}/{clip}/{frame}/{person}",
                "point": [(peak[0] + 0.5) / HM_SIZE, (peak[1] + 0.5) / HM_SIZE],
                "heatmap_path": hm_name,
                "inout_score": score,
            }
        )
    write_jsonl(out / "annotations.jsonl", annotations)
    write_jsonl(out / "predictions.jsonl", predictions)
    write_jsonl(out / "detections.jsonl", DETECTIONS)

    rows = []
    for i, (g_p, g_gt, peak, o_p, o_gt) in enumerate(
        [
            ((0.0, 0.0, 1.0), (0.0, 0.0, 1.0), (2.0, 3.0), 0.9, 1),
            ((0.6, 0.0, 0.8), (0.0, 0.6, 0.8), (5.0, 1.0), 0.25, 0),
            ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (4.0, 4.0), 0.5, 1),
        ]
    ):
        hm = render_gt_heatmap(((peak[0] + 1) % HM_SIZE, peak[1]), (HM_SIZE, HM_SIZE), HM_SIGMA)
        rows.append(
            {
                "id": f"row{i}",
                "g_p": list(g_p),
                "g_gt": list(g_gt),
                "pred_heatmap": [[float(v) for v in r] for r in hm.values],
                "gt_point": list(peak),
                "o_p": o_p,
                "o_gt": o_gt,
            }
        )
    write_jsonl(out / "losses_rows.jsonl", rows)

    manifest = [
        {
            "image_id": f"img{i}",
            "width": 160,
            "height": 120,
            "eye_px": [70, 50],
            "gaze_px": [110, 80],
            "synthetic": {
                "plane_normal": [0.19611613513818404, 0.0980580675690920, 0.9756382561962222],
                "plane_offset": 6.0,
                "focal_px": 140.0,
            },
        }
        for i in range(3)
    ]
    write_jsonl(out / "stability_manifest.jsonl", manifest)
    print(f"wrote demo data to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
