"""Torus arithmetic helpers.

Points on the circle R/Z are stored as float64 values in [0, 1).  The
distance of x to 0 is ``min(x, 1-x)``; two points are "within eps" of
each other when the circular distance between them is <= eps.

The delicate part is reducing a*alpha mod 1 for large integers a: a
plain float multiply destroys the low-order bits as soon as a*alpha
crosses 2**53.  Two exact routes are provided:

* a compensated (Dekker) product for integers up to 2**53, vectorised
  over numpy arrays, accurate to about 2**-52 after reduction;
* exact big-integer reduction for anything larger, using the fact that
  every float64 is a dyadic rational p / 2**k.

Both stay far inside the 2**-40 accuracy budget that the statistics
code assumes.
"""

from __future__ import annotations

import math

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker split constant
MAX_EXACT_FLOAT_INT = 1 << 53


def wrap_unit(x: float) -> float:
    """Reduce a real number to [0, 1)."""
    r = math.fmod(x, 1.0)
    if r < 0.0:
        r += 1.0
    return r + 0.0


def dist_to_zero(x: float) -> float:
    """Distance of a torus point in [0, 1) to 0, i.e. min(x, 1-x)."""
    return min(x, 1.0 - x)


def circ_dist(a: float, b: float) -> float:
    """Circular distance between two points of [0, 1)."""
    d = abs(a - b)
    return min(d, 1.0 - d)


def circ_dist_vec(a, b):
    """Vectorised ``circ_dist``; identical float operations."""
    d = np.abs(a - b)
    return np.minimum(d, 1.0 - d)


def shift_mod1(points: np.ndarray, gamma: float) -> np.ndarray:
    """(x + gamma) mod 1 for x, gamma in [0, 1); exact wrap by -1."""
    v = points + gamma
    return np.where(v >= 1.0, v - 1.0, v) + 0.0


def _two_prod(a: np.ndarray, b: float):
    """Dekker product: p + err == a*b exactly (|a| <= 2**53, |b| <= 1)."""
    p = a * b
    abig = a * _SPLITTER
    ahi = abig - (abig - a)
    alo = a - ahi
    bbig = b * _SPLITTER
    bhi = bbig - (bbig - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


def frac_product_compensated(a: np.ndarray, alpha: float) -> np.ndarray:
    """Fractional part of a*alpha for exact-integer float64 a.

    Error <= 2**-52 in absolute value.  Requires 0 <= a <= 2**53 and
    0 <= alpha < 1.
    """
    p, err = _two_prod(a, alpha)
    f = p - np.floor(p)            # exact: p and floor(p) within a factor 2
    x = f + err                    # one rounding, <= 2**-53
    x = np.where(x < 0.0, x + 1.0, x)
    x = np.where(x >= 1.0, x - 1.0, x)
    return x + 0.0


def div_mod1(rem: int, den: int) -> float:
    """rem/den as a float in [0, 1); a quotient that rounds up to 1.0
    wraps to 0.0 (the true value is within 2**-54 of the circle seam)."""
    x = rem / den
    return 0.0 if x == 1.0 else x


def frac_multiple_exact(a: int, alpha: float) -> float:
    """Correctly-rounded fractional part of a*alpha for any integer a >= 0.

    alpha is interpreted exactly as the dyadic rational it stores.
    """
    num, den = alpha.as_integer_ratio()   # den is a power of two
    return div_mod1((a * num) % den, den)


def frac_multiple_rational(a: int, num: int, bits: int) -> float:
    """Fractional part of a * (num / 2**bits), correctly rounded."""
    return div_mod1((a * num) & ((1 << bits) - 1), 1 << bits)
