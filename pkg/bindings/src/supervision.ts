/**
 * Supervision kernels: pseudo gaze target and the three training losses.
 * Bit-exact mirrors of the core implementations on float64 buffers.
 */

import { checkUnit3 } from "./fov.js";
import { logPortable } from "./math.js";

export const BCE_CLAMP = 1e-7;

export interface LossWeights {
  lambdaHm: number;
  lambdaDir: number;
  lambdaIo: number;
}

export const DEFAULT_WEIGHTS: LossWeights = { lambdaHm: 100.0, lambdaDir: 0.1, lambdaIo: 1.0 };

/** p / ||p|| for an eye-frame gaze point. */
export function pseudoGazeGt(point: ArrayLike<number>): Float64Array {
  if (point.length !== 3) {
    throw new RangeError(`gaze point must have 3 components, got ${point.length}`);
  }
  const x = point[0], y = point[1], z = point[2];
  const norm = Math.sqrt(x * x + y * y + z * z);
  if (norm < 1e-9) {
    throw new RangeError("gaze point coincides with the eye; direction undefined");
  }
  return Float64Array.from([x / norm, y / norm, z / norm]);
}

/** Mean squared difference between two equally-shaped heatmap buffers. */
export function lossHeatmap(pred: Float64Array, gt: Float64Array): number {
  if (pred.length !== gt.length || pred.length === 0) {
    throw new RangeError(`heatmap buffers differ in length: ${pred.length} vs ${gt.length}`);
  }
  let total = 0.0;
  for (let i = 0; i < pred.length; i++) {
    const d = pred[i] - gt[i];
    total += d * d;
  }
  return total / pred.length;
}

/** 1 - <g_pred, g_gt> on unit directions. */
export function lossDirection(gPred: ArrayLike<number>, gGt: ArrayLike<number>): number {
  checkUnit3(gPred);
  checkUnit3(gGt);
  return 1.0 - (gPred[0] * gGt[0] + gPred[1] * gGt[1] + gPred[2] * gGt[2]);
}

/** Binary cross entropy with the prediction clamped to [1e-7, 1 - 1e-7]. */
export function lossInout(oPred: number, oGt: number): number {
  if (!(oPred >= 0.0 && oPred <= 1.0)) {
    throw new RangeError(`in/out score must lie in [0, 1], got ${oPred}`);
  }
  if (oGt !== 0.0 && oGt !== 1.0) {
    throw new RangeError(`in/out label must be 0 or 1, got ${oGt}`);
  }
  const p = Math.min(Math.max(oPred, BCE_CLAMP), 1.0 - BCE_CLAMP);
  return -(oGt * logPortable(p) + (1.0 - oGt) * logPortable(1.0 - p));
}

/** Weighted sum of the three loss parts. */
export function lossTotal(
  hm: number,
  dir: number,
  io: number,
  weights: LossWeights = DEFAULT_WEIGHTS,
): number {
  if (hm < 0 || dir < 0 || io < 0) throw new RangeError("loss parts must be non-negative");
  if (weights.lambdaHm < 0 || weights.lambdaDir < 0 || weights.lambdaIo < 0) {
    throw new RangeError("loss weights must be non-negative");
  }
  return weights.lambdaHm * hm + weights.lambdaDir * dir + weights.lambdaIo * io;
}
