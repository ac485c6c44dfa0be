/**
 * Evaluation-metric kernels: rank-based AUC, point distances, average
 * precision and looking-at-heads precision. Bit-exact mirrors of the
 * core implementations; errors carry the same messages.
 */

export type Box = readonly [number, number, number, number];
export type Point = readonly [number, number];

export function validateBox(box: ArrayLike<number>): Box {
  const [x0, y0, x1, y1] = [box[0], box[1], box[2], box[3]];
  if (!(x0 < x1 && y0 < y1)) {
    throw new RangeError(`invalid box (${x0}, ${y0}, ${x1}, ${y1}): min must be < max per axis`);
  }
  return [x0, y0, x1, y1];
}

export function pointInBox(point: ArrayLike<number>, box: ArrayLike<number>): boolean {
  return box[0] <= point[0] && point[0] <= box[2] && box[1] <= point[1] && point[1] <= box[3];
}

/** ROC AUC over score/label buffers; ties rank-averaged (Mann-Whitney). */
export function auc(scores: ArrayLike<number>, labels: ArrayLike<number>): number {
  if (scores.length !== labels.length) {
    throw new RangeError("heatmap and GT mask shapes differ");
  }
  const n = scores.length;
  let nPos = 0;
  for (let i = 0; i < n; i++) {
    if (labels[i]) nPos++;
  }
  const nNeg = n - nPos;
  if (nPos === 0 || nNeg === 0) {
    throw new RangeError("degenerate GT mask: need at least one positive and one negative pixel");
  }
  const order = Array.from({ length: n }, (_, i) => i);
  order.sort((a, b) => scores[a] - scores[b]); // stable in ES2019+
  const ranks = new Float64Array(n);
  let i = 0;
  while (i < n) {
    let j = i;
    while (j + 1 < n && scores[order[j + 1]] === scores[order[i]]) j++;
    const avgRank = (i + j + 2) / 2.0;
    for (let k = i; k <= j; k++) ranks[order[k]] = avgRank;
    i = j + 1;
  }
  let rankSum = 0.0;
  for (let idx = 0; idx < n; idx++) {
    if (labels[idx]) rankSum += ranks[idx];
  }
  return (rankSum - (nPos * (nPos + 1)) / 2.0) / (nPos * nNeg);
}

/** (min, mean) Euclidean distance from a prediction to the GT points. */
export function distances(
  pred: ArrayLike<number>,
  gtPoints: ReadonlyArray<ArrayLike<number>>,
): { min: number; avg: number } {
  if (gtPoints.length === 0) {
    throw new RangeError("distance needs at least one GT point");
  }
  const px = pred[0], py = pred[1];
  let dMin = Infinity;
  let total = 0.0;
  let first = true;
  for (const p of gtPoints) {
    const dx = px - p[0];
    const dy = py - p[1];
    const d = Math.sqrt(dx * dx + dy * dy);
    total += d;
    if (first || d < dMin) {
      dMin = d;
      first = false;
    }
  }
  return { min: dMin, avg: total / gtPoints.length };
}

/** AP with recall-increment weighting; ties keep input order. */
export function averagePrecision(scores: ArrayLike<number>, labels: ArrayLike<number>): number {
  if (scores.length !== labels.length) {
    throw new RangeError("scores/labels length mismatch");
  }
  let nPos = 0;
  for (let i = 0; i < labels.length; i++) {
    if (labels[i] !== 0 && labels[i] !== 1) {
      throw new RangeError(`labels must be 0 or 1, got ${labels[i]}`);
    }
    if (!Number.isFinite(scores[i])) {
      throw new RangeError(`scores must be finite, got ${scores[i]}`);
    }
    if (labels[i] === 1) nPos++;
  }
  if (nPos === 0) {
    throw new RangeError("average precision needs at least one positive label");
  }
  const order = Array.from({ length: scores.length }, (_, i) => i);
  order.sort((a, b) => scores[b] - scores[a]); // stable descending
  let tp = 0;
  let total = 0.0;
  for (let rank = 1; rank <= order.length; rank++) {
    if (labels[order[rank - 1]] === 1) {
      tp++;
      total += tp / rank;
    }
  }
  return total / nPos;
}

/** GT looking-at-head flag: any point in a box, or two in the same box. */
export function pheadGt(
  points: ReadonlyArray<ArrayLike<number>>,
  boxes: ReadonlyArray<ArrayLike<number>>,
  rule: "single" | "multi" = "single",
): boolean {
  const checked = boxes.map(validateBox);
  if (rule === "single") {
    return points.some((p) => checked.some((b) => pointInBox(p, b)));
  }
  for (const b of checked) {
    let inside = 0;
    for (const p of points) {
      if (pointInBox(p, b)) inside++;
    }
    if (inside >= 2) return true;
  }
  return false;
}

export interface PheadInstance {
  point: ArrayLike<number>;
  boxes: ReadonlyArray<ArrayLike<number>>;
  gt: boolean;
}

/** TP / (TP + FP); positive = prediction inside any head box. */
export function pheadPrecision(instances: ReadonlyArray<PheadInstance>): number {
  let tp = 0;
  let fp = 0;
  for (const inst of instances) {
    const boxes = inst.boxes.map(validateBox);
    if (boxes.some((b) => pointInBox(inst.point, b))) {
      if (inst.gt) tp++;
      else fp++;
    }
  }
  if (tp + fp === 0) {
    throw new RangeError("no predicted looking-at-head positives; precision undefined");
  }
  return tp / (tp + fp);
}
