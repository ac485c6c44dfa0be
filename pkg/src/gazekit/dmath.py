"""Portable IEEE-754 double-precision exp/log and ordered reductions.

libm implementations differ by a few ulp between platforms and runtimes,
which would break byte-exact golden outputs and the bit-exact parity
contract of the buffer-kernel twin under bindings/. These kernels are
straight ports of the classic fdlibm routines: they use only exactly
rounded double arithmetic plus explicit bit manipulation, so every
IEEE-754 host computes identical bits. Accuracy is within ~1 ulp.

``ordered_sum`` is the companion rule for reductions whose result is part
of a parity or golden-file contract: strict left-to-right accumulation in
row-major order, never pairwise.
"""

from __future__ import annotations

import struct

import numpy as np

_EXP_OVERFLOW = 7.09782712893383973096e02
_EXP_UNDERFLOW = -7.45133219101941108420e02
_LN2_HI = 6.93147180369123816490e-01
_LN2_LO = 1.90821492927058770002e-10
_INV_LN2 = 1.44269504088896338700e00
_EP1 = 1.66666666666666019037e-01
_EP2 = -2.77777777770155933842e-03
_EP3 = 6.61375632143793436117e-05
_EP4 = -1.65339022054652515390e-06
_EP5 = 4.13813679705723846039e-08

_LG1 = 6.666666666666735130e-01
_LG2 = 3.999999999940941908e-01
_LG3 = 2.857142874366239149e-01
_LG4 = 2.222219843214978396e-01
_LG5 = 1.818357216161805012e-01
_LG6 = 1.531383769920937332e-01
_LG7 = 1.479819860511658591e-01
_TWO54 = 1.80143985094819840000e16


def _exp_array(x: np.ndarray) -> np.ndarray:
    bits = x.view(np.uint64)
    hx = ((bits >> np.uint64(32)) & np.uint64(0x7FFFFFFF)).astype(np.int64)
    xsb = (bits >> np.uint64(63)).astype(np.int64)

    nonfinite = hx >= 0x7FF00000
    overflow = (x > _EXP_OVERFLOW) & ~nonfinite
    underflow = (x < _EXP_UNDERFLOW) & ~nonfinite
    tiny = hx < 0x3E300000
    special = nonfinite | overflow | underflow | tiny
    xs = np.where(special, 0.0, x)

    sign = 1.0 - 2.0 * xsb.astype(np.float64)
    big = hx > 0x3FD62E42  # |x| > 0.5 ln2
    mid = hx < 0x3FF0A2B2  # |x| < 1.5 ln2

    k_mid = (1 - 2 * xsb).astype(np.int64)
    k_far = np.trunc(_INV_LN2 * xs + 0.5 * sign).astype(np.int64)
    k = np.where(big, np.where(mid, k_mid, k_far), 0)
    t = k.astype(np.float64)
    hi = np.where(big, np.where(mid, xs - sign * _LN2_HI, xs - t * _LN2_HI), xs)
    lo = np.where(big, np.where(mid, sign * _LN2_LO, t * _LN2_LO), 0.0)
    r = np.where(big, hi - lo, xs)

    rr = r * r
    c = r - rr * (_EP1 + rr * (_EP2 + rr * (_EP3 + rr * (_EP4 + rr * _EP5))))
    y_k0 = 1.0 - ((r * c / (c - 2.0)) - r)
    y_kn = 1.0 - ((lo - (r * c / (2.0 - c))) - hi)
    out = np.ldexp(np.where(k == 0, y_k0, y_kn), k.astype(np.int32))

    out = np.where(tiny, 1.0 + x, out)
    out = np.where(overflow, np.inf, out)
    out = np.where(underflow, 0.0, out)
    out = np.where(nonfinite, np.where(xsb == 1, 0.0, np.inf), out)
    out = np.where(np.isnan(x), x, out)
    return out


def exp64(x):
    """exp(x) with platform-independent (fdlibm) rounding; scalar or ndarray."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        return float(_exp_array(arr.reshape(1))[0])
    return _exp_array(np.ascontiguousarray(arr))


def _double_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", x))[0]


def _with_high_word(x: float, high: int) -> float:
    low = _double_bits(x) & 0xFFFFFFFF
    return struct.unpack("<d", struct.pack("<Q", ((high & 0xFFFFFFFF) << 32) | low))[0]


def log64(x: float) -> float:
    """Natural log with platform-independent (fdlibm) rounding; scalar only."""
    x = float(x)
    bits = _double_bits(x)
    hx = bits >> 32
    if hx >= 0x80000000:
        hx -= 0x100000000  # signed high word
    lx = bits & 0xFFFFFFFF

    k = 0
    if hx < 0x00100000:  # zero, subnormal or negative
        if ((hx & 0x7FFFFFFF) | lx) == 0:
            return float("-inf")
        if hx < 0:
            return float("nan")
        k -= 54
        x *= _TWO54
        bits = _double_bits(x)
        hx = bits >> 32
    if hx >= 0x7FF00000:
        return x + x  # inf or nan
    k += (hx >> 20) - 1023
    hx &= 0x000FFFFF
    i = (hx + 0x95F64) & 0x100000
    x = _with_high_word(x, hx | (i ^ 0x3FF00000))
    k += i >> 20
    f = x - 1.0
    if (0x000FFFFF & (2 + hx)) < 3:  # |f| < 2**-20
        if f == 0.0:
            if k == 0:
                return 0.0
            dk = float(k)
            return dk * _LN2_HI + dk * _LN2_LO
        r = f * f * (0.5 - 0.33333333333333333 * f)
        if k == 0:
            return f - r
        dk = float(k)
        return dk * _LN2_HI - ((r - dk * _LN2_LO) - f)
    s = f / (2.0 + f)
    dk = float(k)
    z = s * s
    i = hx - 0x6147A
    w = z * z
    j = 0x6B851 - hx
    t1 = w * (_LG2 + w * (_LG4 + w * _LG6))
    t2 = z * (_LG1 + w * (_LG3 + w * (_LG5 + w * _LG7)))
    i |= j
    r = t2 + t1
    if i > 0:
        hfsq = 0.5 * f * f
        if k == 0:
            return f - (hfsq - s * (hfsq + r))
        return dk * _LN2_HI - ((hfsq - (s * (hfsq + r) + dk * _LN2_LO)) - f)
    if k == 0:
        return f - s * (f - r)
    return dk * _LN2_HI - ((s * (f - r) - dk * _LN2_LO) - f)


def ordered_sum(values) -> float:
    """Strict left-to-right sum (row-major for arrays); parity-stable."""
    if isinstance(values, np.ndarray):
        values = values.ravel().tolist()
    total = 0.0
    for v in values:
        total += v
    return total


def ordered_mean(values) -> float:
    if isinstance(values, np.ndarray):
        values = values.ravel().tolist()
    else:
        values = list(values)
    if not values:
        raise ValueError("mean of empty sequence")
    return ordered_sum(values) / len(values)
