"""The sharp constant ``C*``, its maximiser ``t0``, ``p(t)`` and the threshold ``t1``.

``C* = sup_{0<t<1} (1 - t) / P(|G| > t sqrt 3)``.  The ratio is scanned on
a fine grid first, so that a unique interior maximum is observed rather
than assumed, and the maximiser is then pinned down as the root of the
derivative of the ratio, which vanishes exactly where
``2 Q(t sqrt 3) = 2 sqrt 3 (1 - t) phi(t sqrt 3)``.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .special import SQRT3, scaled_two_sided_tail, std_normal_density, upper_tail
from .uniform_sum import equal_weights_tail

__all__ = [
    "SharpConstants",
    "ratio",
    "compute_c_star",
    "compute_t1",
    "sharp_constants",
    "p_of_t",
    "p_prime",
    "t1_gap",
]

SCAN_STEP = 1e-4


@dataclass(frozen=True)
class SharpConstants:
    c_star: float
    t0: float
    t1: float

    def as_dict(self) -> dict[str, float]:
        return {"c_star": self.c_star, "t0": self.t0, "t1": self.t1}


def ratio(t):
    """``r(t) = (1 - t) / P(|G| > t sqrt 3)``."""
    t = np.asarray(t, dtype=float)
    out = (1.0 - t) / scaled_two_sided_tail(t)
    return float(out) if np.ndim(out) == 0 else out


def _ratio_slope_sign(t: float) -> float:
    # numerator of r'(t) up to the positive factor 1/P(t)^2
    return -2.0 * upper_tail(t * SQRT3) + (1.0 - t) * 2.0 * SQRT3 * std_normal_density(t * SQRT3)


def compute_c_star(step: float = SCAN_STEP, xtol: float = 1e-13) -> tuple[float, float]:
    """Return ``(c_star, t0)``.

    The grid ``step, 2 step, ..., 1 - step`` is scanned for the largest
    ratio; a warning is issued if the sampled ratios are not strictly
    unimodal.  The maximiser is then refined by Brent's method on the
    derivative inside the two grid cells around the best sample.
    """
    grid = np.arange(1, int(round(1.0 / step))) * step
    vals = ratio(grid)
    k = int(np.argmax(vals))
    d = np.diff(vals)
    if np.any(d[:k] <= 0) or np.any(d[k:] >= 0):
        warnings.warn("ratio (1-t)/P(|G|>t sqrt3) is not unimodal on the scan grid", RuntimeWarning)
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    t0 = optimize.brentq(_ratio_slope_sign, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return float(ratio(t0)), float(t0)


def t1_gap(t):
    """``P(|U1+U2+U3|/sqrt 3 > t) - P(|G|/sqrt 3 > t)``; changes sign at ``t1``."""
    return equal_weights_tail(3, t).prob - scaled_two_sided_tail(t)


def compute_t1(xtol: float = 1e-13) -> float:
    """Unique crossing of the three-term equal-weight tail and the Gaussian tail on (1, sqrt 3)."""
    lo, hi = 1.0, 1.2
    if not (t1_gap(lo) > 0 > t1_gap(hi)):
        raise RuntimeError("t1 bracket [1, 1.2] does not straddle a sign change; exact tail is suspect")
    root = optimize.bisect(t1_gap, lo, hi, xtol=xtol)
    return float(root)


@functools.lru_cache(maxsize=1)
def sharp_constants() -> SharpConstants:
    """Cached record shared by every downstream check."""
    c_star, t0 = compute_c_star()
    return SharpConstants(c_star=c_star, t0=t0, t1=compute_t1())


def p_of_t(t, c_star: float | None = None):
    """``p(t) = 1 - C* P(|G| > t sqrt 3)``, concave and increasing in ``t``."""
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("t must be positive")
    c = sharp_constants().c_star if c_star is None else c_star
    out = 1.0 - c * np.asarray(scaled_two_sided_tail(arr))
    return float(out) if out.ndim == 0 else out


def p_prime(t, c_star: float | None = None):
    """Derivative of :func:`p_of_t`: ``2 sqrt 3 C* phi(t sqrt 3)``."""
    arr = np.asarray(t, dtype=float)
    c = sharp_constants().c_star if c_star is None else c_star
    out = 2.0 * SQRT3 * c * np.asarray(std_normal_density(arr * SQRT3))
    return float(out) if out.ndim == 0 else out
