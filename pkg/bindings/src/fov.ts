/**
 * Field-of-view kernels on flat (N, 3) float64 point buffers.
 *
 * Per point: cosine between the gaze direction and the point direction
 * from the eye, then the fixed decay map (identity above 0.9, scaled
 * exponential below). Points closer than 1e-9 to the eye have no
 * direction: their field value is NaN and their gradient is zero.
 */

import { expPortable } from "./math.js";

export const DECAY_THRESHOLD = 0.9;
export const DECAY_RATE = 5.0;
export const POINT_NORM_EPS = 1e-9;
const EXP_AT_KNEE = expPortable(DECAY_RATE * DECAY_THRESHOLD);

export function checkCloud(cloud: Float64Array): number {
  if (cloud.length % 3 !== 0) {
    throw new RangeError(`cloud buffer length ${cloud.length} is not a multiple of 3`);
  }
  return cloud.length / 3;
}

export function checkUnit3(g: ArrayLike<number>, what = "gaze direction"): void {
  if (g.length !== 3) throw new RangeError(`${what} must have 3 components, got ${g.length}`);
  const n = Math.sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
  if (Math.abs(n - 1.0) > 1e-6) {
    throw new RangeError(`${what} must be unit length (within 1e-6)`);
  }
}

/** The cosine-to-field decay map; NaN passes through. */
export function fovDecay(c: number): number {
  return c > DECAY_THRESHOLD ? c : (DECAY_THRESHOLD * expPortable(DECAY_RATE * c)) / EXP_AT_KNEE;
}

/** Field value per point of an (N, 3) eye-frame buffer. */
export function fovValues(cloud: Float64Array, gaze: ArrayLike<number>): Float64Array {
  const n = checkCloud(cloud);
  checkUnit3(gaze);
  const g0 = gaze[0], g1 = gaze[1], g2 = gaze[2];
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const x = cloud[3 * i], y = cloud[3 * i + 1], z = cloud[3 * i + 2];
    const norm = Math.sqrt(x * x + y * y + z * z);
    if (norm < POINT_NORM_EPS) {
      out[i] = NaN;
      continue;
    }
    let c = (g0 * x + g1 * y + g2 * z) / norm;
    if (c > 1.0) c = 1.0;
    else if (c < -1.0) c = -1.0;
    out[i] = fovDecay(c);
  }
  return out;
}

/** d(value)/d(gaze) per point, (N, 3) row-major; decay branch at the kink. */
export function fovJacobian(cloud: Float64Array, gaze: ArrayLike<number>): Float64Array {
  const n = checkCloud(cloud);
  checkUnit3(gaze);
  const g0 = gaze[0], g1 = gaze[1], g2 = gaze[2];
  const out = new Float64Array(3 * n);
  for (let i = 0; i < n; i++) {
    const x = cloud[3 * i], y = cloud[3 * i + 1], z = cloud[3 * i + 2];
    const norm = Math.sqrt(x * x + y * y + z * z);
    if (norm < POINT_NORM_EPS) continue; // zero gradient
    let c = (g0 * x + g1 * y + g2 * z) / norm;
    if (c > 1.0) c = 1.0;
    else if (c < -1.0) c = -1.0;
    const value = (DECAY_THRESHOLD * expPortable(DECAY_RATE * c)) / EXP_AT_KNEE;
    const scale = c > DECAY_THRESHOLD ? 1.0 : DECAY_RATE * value;
    out[3 * i] = scale * (x / norm);
    out[3 * i + 1] = scale * (y / norm);
    out[3 * i + 2] = scale * (z / norm);
  }
  return out;
}
