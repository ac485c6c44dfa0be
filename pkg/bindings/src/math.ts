/**
 * Portable IEEE-754 exp/log (fdlibm ports) and ordered reductions.
 *
 * The core library computes these with the identical algorithm, so both
 * components produce bit-identical doubles on any IEEE-754 host; stock
 * Math.exp/Math.log differ from other runtimes' libm by a few ulp, which
 * would break the bit-exact parity contract.
 */

const EXP_OVERFLOW = 7.09782712893383973096e2;
const EXP_UNDERFLOW = -7.45133219101941108420e2;
const LN2_HI = 6.93147180369123816490e-1;
const LN2_LO = 1.90821492927058770002e-10;
const INV_LN2 = 1.44269504088896338700e0;
const EP1 = 1.66666666666666019037e-1;
const EP2 = -2.77777777770155933842e-3;
const EP3 = 6.61375632143793436117e-5;
const EP4 = -1.65339022054652515390e-6;
const EP5 = 4.13813679705723846039e-8;

const LG1 = 6.666666666666735130e-1;
const LG2 = 3.999999999940941908e-1;
const LG3 = 2.857142874366239149e-1;
const LG4 = 2.222219843214978396e-1;
const LG5 = 1.818357216161805012e-1;
const LG6 = 1.531383769920937332e-1;
const LG7 = 1.479819860511658591e-1;
const TWO54 = 1.80143985094819840000e16;

const view = new DataView(new ArrayBuffer(8));

function highWord(x: number): number {
  view.setFloat64(0, x);
  return view.getUint32(0);
}

function lowWord(x: number): number {
  view.setFloat64(0, x);
  return view.getUint32(4);
}

function withHighWord(x: number, high: number): number {
  view.setFloat64(0, x);
  view.setUint32(0, high >>> 0);
  return view.getFloat64(0);
}

/** Exact scaling by 2^k, matching ldexp rounding into subnormals. */
function scale2(y: number, k: number): number {
  if (k >= -1021 && k <= 1023) return y * 2 ** k;
  if (k > 1023) return (y * 2 ** 1023) * 2 ** (k - 1023);
  return (y * 2 ** (k + 1000)) * 2 ** -1000;
}

/** exp(x) with platform-independent (fdlibm) rounding. */
export function expPortable(x: number): number {
  const hx0 = highWord(x);
  const xsb = (hx0 >>> 31) & 1;
  const hx = hx0 & 0x7fffffff;

  if (hx >= 0x7ff00000) {
    if (((hx & 0xfffff) | lowWord(x)) !== 0) return x + x; // NaN
    return xsb === 0 ? x : 0.0; // +-inf
  }
  if (x > EXP_OVERFLOW) return Infinity;
  if (x < EXP_UNDERFLOW) return 0.0;

  let k = 0;
  let hi = x;
  let lo = 0.0;
  let r = x;
  if (hx > 0x3fd62e42) {
    // |x| > 0.5 ln2
    if (hx < 0x3ff0a2b2) {
      // |x| < 1.5 ln2
      const sign = 1.0 - 2.0 * xsb;
      hi = x - sign * LN2_HI;
      lo = sign * LN2_LO;
      k = 1 - xsb - xsb;
    } else {
      const sign = 1.0 - 2.0 * xsb;
      k = Math.trunc(INV_LN2 * x + 0.5 * sign);
      const t = k;
      hi = x - t * LN2_HI;
      lo = t * LN2_LO;
    }
    r = hi - lo;
  } else if (hx < 0x3e300000) {
    return 1.0 + x;
  }

  const t = r * r;
  const c = r - t * (EP1 + t * (EP2 + t * (EP3 + t * (EP4 + t * EP5))));
  if (k === 0) return 1.0 - ((r * c) / (c - 2.0) - r);
  const y = 1.0 - (lo - (r * c) / (2.0 - c) - hi);
  return scale2(y, k);
}

/** Natural log with platform-independent (fdlibm) rounding. */
export function logPortable(x: number): number {
  let hx = highWord(x) | 0; // signed high word
  let lx = lowWord(x);

  let k = 0;
  if (hx < 0x00100000) {
    // zero, subnormal or negative
    if (((hx & 0x7fffffff) | lx) === 0) return -Infinity;
    if (hx < 0) return NaN;
    k -= 54;
    x *= TWO54;
    hx = highWord(x) | 0;
    lx = lowWord(x);
  }
  if (hx >= 0x7ff00000) return x + x; // inf or nan
  k += (hx >> 20) - 1023;
  hx &= 0x000fffff;
  const i0 = (hx + 0x95f64) & 0x100000;
  x = withHighWord(x, hx | (i0 ^ 0x3ff00000));
  k += i0 >> 20;
  const f = x - 1.0;
  if ((0x000fffff & (2 + hx)) < 3) {
    // |f| < 2**-20
    if (f === 0.0) {
      if (k === 0) return 0.0;
      const dk = k;
      return dk * LN2_HI + dk * LN2_LO;
    }
    const r = f * f * (0.5 - 0.33333333333333333 * f);
    if (k === 0) return f - r;
    const dk = k;
    return dk * LN2_HI - ((r - dk * LN2_LO) - f);
  }
  const s = f / (2.0 + f);
  const dk = k;
  const z = s * s;
  let i = (hx - 0x6147a) | 0;
  const w = z * z;
  const j = (0x6b851 - hx) | 0;
  const t1 = w * (LG2 + w * (LG4 + w * LG6));
  const t2 = z * (LG1 + w * (LG3 + w * (LG5 + w * LG7)));
  i |= j;
  const r = t2 + t1;
  if (i > 0) {
    const hfsq = 0.5 * f * f;
    if (k === 0) return f - (hfsq - s * (hfsq + r));
    return dk * LN2_HI - ((hfsq - (s * (hfsq + r) + dk * LN2_LO)) - f);
  }
  if (k === 0) return f - s * (f - r);
  return dk * LN2_HI - ((s * (f - r) - dk * LN2_LO) - f);
}

/** Strict left-to-right sum; the core's parity-stable reduction rule. */
export function orderedSum(values: ArrayLike<number>): number {
  let total = 0.0;
  for (let i = 0; i < values.length; i++) total += values[i];
  return total;
}
