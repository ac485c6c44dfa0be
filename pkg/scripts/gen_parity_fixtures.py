#!/usr/bin/env python3
"""Emit fuzzed parity fixtures for the buffer-kernel bindings.

Each JSONL file holds seeded random inputs together with the values this
package computes for them, floats printed with 17 significant digits so
they round-trip bit-exactly. The bindings test suite replays the inputs
and requires identical doubles.

Usage: python scripts/gen_parity_fixtures.py --out bindings/fixtures [--cases 1000] [--seed 0]
"""

import argparse
import sys
import zlib
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gazekit.fov import fov_point_jacobian, fov_point_values
from gazekit.ioutil import write_jsonl
from gazekit.metrics import auc, average_precision, distances, phead_gt, phead_precision, point_in_box
from gazekit.supervision import (
    LossWeights,
    loss_direction,
    loss_heatmap,
    loss_inout,
    loss_total,
    normalize_gaze_point,
)


def unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def fnum(x):
    return None if x is None else float(x)


def gen_fov(rng, n_cases):
    rows = []
    for case in range(n_cases):
        n = 1000 if case == 0 else int(rng.integers(1, 9))
        pts = rng.normal(size=(n, 3)) * 3.0
        if case % 7 == 1:
            pts[0] = [0.0, 0.0, 0.0]  # at-the-eye point: value is undefined
        g = unit(rng)
        values = fov_point_values(pts, g)
        jac = fov_point_jacobian(pts, g)
        rows.append(
            {
                "cloud": [[float(v) for v in p] for p in pts],
                "gaze": [float(v) for v in g],
                "values": [None if np.isnan(v) else float(v) for v in values],
                "jacobian": [[float(v) for v in row] for row in jac],
            }
        )
    return rows


def gen_pseudo_gaze(rng, n_cases):
    rows = []
    for _ in range(n_cases):
        p = rng.normal(size=3) * 4.0
        while np.linalg.norm(p) < 1e-6:
            p = rng.normal(size=3) * 4.0
        rows.append(
            {
                "point": [float(v) for v in p],
                "expect": [float(v) for v in normalize_gaze_point(p)],
            }
        )
    return rows


def gen_losses(rng, n_cases):
    rows = []
    for _ in range(n_cases):
        h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        pred = rng.random((h, w))
        gt = rng.random((h, w))
        g_p, g_gt = unit(rng), unit(rng)
        o_p = float(rng.random())
        o_gt = float(rng.integers(0, 2))
        weights = LossWeights(
            float(rng.uniform(0, 200)), float(rng.uniform(0, 1)), float(rng.uniform(0, 2))
        )
        l_hm = loss_heatmap(pred, gt)
        l_dir = loss_direction(g_p, g_gt)
        l_io = loss_inout(o_p, o_gt)
        rows.append(
            {
                "pred": [[float(v) for v in r] for r in pred],
                "gt": [[float(v) for v in r] for r in gt],
                "g_p": [float(v) for v in g_p],
                "g_gt": [float(v) for v in g_gt],
                "o_p": o_p,
                "o_gt": o_gt,
                "lambda_hm": weights.lambda_hm,
                "lambda_dir": weights.lambda_dir,
                "lambda_io": weights.lambda_io,
                "loss_hm": l_hm,
                "loss_dir": l_dir,
                "loss_io": l_io,
                "total": loss_total((l_hm, l_dir, l_io), weights),
            }
        )
    return rows


def gen_auc(rng, n_cases):
    rows = []
    for _ in range(n_cases):
        n = int(rng.integers(4, 65))
        scores = rng.integers(0, 7, size=n) / 6.0  # coarse grid forces rank ties
        labels = rng.integers(0, 2, size=n)
        if labels.all():
            labels[0] = 0
        if not labels.any():
            labels[0] = 1
        rows.append(
            {
                "scores": [float(v) for v in scores],
                "labels": [int(v) for v in labels],
                "expect": float(auc(scores.reshape(1, -1), labels.reshape(1, -1))),
            }
        )
    return rows


def gen_distances(rng, n_cases):
    rows = []
    for _ in range(n_cases):
        pred = tuple(rng.random(2))
        pts = [tuple(p) for p in rng.random((int(rng.integers(1, 17)), 2))]
        d_min, d_avg = distances(pred, pts)
        rows.append(
            {
                "pred": [float(v) for v in pred],
                "gt": [[float(v) for v in p] for p in pts],
                "min": d_min,
                "avg": d_avg,
            }
        )
    return rows


def gen_ap(rng, n_cases):
    rows = []
    for _ in range(n_cases):
        n = int(rng.integers(1, 17))
        scores = rng.integers(0, 9, size=n) / 8.0
        labels = rng.integers(0, 2, size=n)
        if not labels.any():
            labels[rng.integers(0, n)] = 1
        rows.append(
            {
                "scores": [float(v) for v in scores],
                "labels": [int(v) for v in labels],
                "expect": float(average_precision(scores.tolist(), labels.tolist())),
            }
        )
    return rows


def random_boxes(rng, max_n=4):
    boxes = []
    for _ in range(int(rng.integers(0, max_n))):
        x0, y0 = rng.random(2) * 0.6
        boxes.append((x0, y0, x0 + 0.05 + rng.random() * 0.3, y0 + 0.05 + rng.random() * 0.3))
    return boxes


def gen_phead(rng, n_cases):
    rows = []
    for _ in range(n_cases):
        pts = [tuple(p) for p in rng.random((int(rng.integers(0, 6)), 2))]
        boxes = random_boxes(rng)
        rows.append(
            {
                "points": [[float(v) for v in p] for p in pts],
                "boxes": [[float(v) for v in b] for b in boxes],
                "single": phead_gt(pts, boxes, "single"),
                "multi": phead_gt(pts, boxes, "multi"),
            }
        )
    return rows


def gen_phead_precision(rng, n_cases):
    rows = []
    for _ in range(n_cases):
        items = []
        for _ in range(int(rng.integers(1, 13))):
            items.append((tuple(rng.random(2)), random_boxes(rng), bool(rng.integers(0, 2))))
        if not any(any(point_in_box(p, b) for b in bs) for p, bs, _ in items):
            items.append(((0.2, 0.2), [(0.1, 0.1, 0.3, 0.3)], True))
        rows.append(
            {
                "instances": [
                    {
                        "point": [float(v) for v in p],
                        "boxes": [[float(v) for v in b] for b in bs],
                        "gt": gt,
                    }
                    for p, bs, gt in items
                ],
                "expect": phead_precision(items),
            }
        )
    return rows


GENERATORS = {
    "fov": gen_fov,
    "pseudo_gaze": gen_pseudo_gaze,
    "losses": gen_losses,
    "auc": gen_auc,
    "distances": gen_distances,
    "ap": gen_ap,
    "phead": gen_phead,
    "phead_precision": gen_phead_precision,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--cases", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, gen in GENERATORS.items():
        rng = np.random.default_rng([args.seed, zlib.crc32(name.encode())])
        rows = gen(rng, args.cases)
        write_jsonl(out / f"{name}.jsonl", rows)
        print(f"{name}: {len(rows)} cases")
    return 0


if __name__ == "__main__":
    sys.exit(main())
