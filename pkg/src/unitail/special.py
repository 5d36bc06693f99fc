"""Standard normal density and tail functions.

The tail ``Q(x) = P(G > x)`` is evaluated through the complementary error
function rather than ``1 - Phi(x)``, so that far tails keep full relative
accuracy.  The argument ``x / sqrt(2)`` is formed in double-double
arithmetic and its rounding error is folded back in with a first-order
correction; without it the relative error grows like ``x**2 * eps`` and
exceeds 1e-13 beyond ``x ~ 30``.

Accuracy (checked against 50-digit mpmath in the test-suite): relative
error below 1e-13 wherever ``Q(x)`` is a normal double, i.e. for
``x <= 37.5``.  Past that the value becomes subnormal and eventually
underflows to 0, which is harmless for every inequality in this package.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

__all__ = [
    "std_normal_density",
    "upper_tail",
    "log_upper_tail",
    "scaled_two_sided_tail",
    "SQRT3",
]

SQRT3 = math.sqrt(3.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)

# 1/sqrt(2) as an unevaluated sum hi + lo
_S_HI = 0.7071067811865476
_S_LO = -4.833646656726457e-17

_SPLITTER = 134217729.0  # 2**27 + 1


def _check_finite(x: np.ndarray, name: str = "x") -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")


def _split(v):
    t = _SPLITTER * v
    hi = t - (t - v)
    return hi, v - hi


def _scaled_arg(x):
    """Return (z, dz) with z + dz = x/sqrt(2) to about 1e-32 relative."""
    z = x * _S_HI
    xh, xl = _split(x)
    sh, sl = _split(_S_HI)
    err = ((xh * sh - z) + xh * sl + xl * sh) + xl * sl
    return z, err + x * _S_LO


def std_normal_density(x):
    """Standard normal density ``exp(-x**2/2) / sqrt(2*pi)``.

    Accepts scalars or arrays; raises ``ValueError`` on non-finite input.
    """
    arr = np.asarray(x, dtype=float)
    _check_finite(arr)
    out = _INV_SQRT_2PI * np.exp(-0.5 * arr * arr)
    return float(out) if out.ndim == 0 else out


def upper_tail(x):
    """Gaussian upper tail ``Q(x) = P(G > x)``.

    Parameters
    ----------
    x : float or array_like
        Finite abscissa.

    Returns
    -------
    float or ndarray
        Tail probability in [0, 1], strictly decreasing in ``x`` until it
        underflows (``x`` beyond about 38).
    """
    arr = np.asarray(x, dtype=float)
    _check_finite(arr)
    z, dz = _scaled_arg(arr)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        base = _sp.erfc(z)
        # d/dz erfc(z) = -2/sqrt(pi) exp(-z^2) = -(2/sqrt(pi)) erfc(z)/erfcx(z)
        pos = z > 0
        corr = np.where(pos, 1.0 - dz * _TWO_OVER_SQRT_PI / _sp.erfcx(np.where(pos, z, 1.0)), 1.0)
        out = np.where(pos, 0.5 * base * corr, 0.5 * _sp.erfc(z + dz))
    return float(out) if out.ndim == 0 else out


def log_upper_tail(x):
    """Natural log of ``Q(x)``; finite far beyond the underflow of ``Q``."""
    arr = np.asarray(x, dtype=float)
    _check_finite(arr)
    out = _sp.log_ndtr(-arr)
    return float(out) if out.ndim == 0 else out


def scaled_two_sided_tail(t):
    """``P(|G| > t*sqrt(3)) = 2 Q(t*sqrt(3))``, the tail of ``|G|/sqrt(3)``."""
    arr = np.asarray(t, dtype=float)
    _check_finite(arr, "t")
    if np.any(arr < 0):
        raise ValueError("t must be nonnegative")
    out = 2.0 * np.asarray(upper_tail(arr * SQRT3))
    return float(out) if out.ndim == 0 else out
