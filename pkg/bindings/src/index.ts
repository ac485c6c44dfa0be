/**
 * gazekit-kernels: pure compute kernels on contiguous numeric buffers,
 * bit-exact against the gazekit core on 64-bit inputs. File I/O and the
 * CLI stay in the core package; these kernels never mutate their inputs.
 */

export const VERSION = "0.1.0";

export { expPortable, logPortable, orderedSum } from "./math.js";
export {
  DECAY_RATE,
  DECAY_THRESHOLD,
  POINT_NORM_EPS,
  fovDecay,
  fovJacobian,
  fovValues,
} from "./fov.js";
export {
  BCE_CLAMP,
  DEFAULT_WEIGHTS,
  lossDirection,
  lossHeatmap,
  lossInout,
  lossTotal,
  pseudoGazeGt,
} from "./supervision.js";
export type { LossWeights } from "./supervision.js";
export {
  auc,
  averagePrecision,
  distances,
  pheadGt,
  pheadPrecision,
  pointInBox,
  validateBox,
} from "./metrics.js";
export type { Box, PheadInstance, Point } from "./metrics.js";
