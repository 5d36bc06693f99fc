"""Tail probabilities of weighted sums of independent uniforms.

``S = sum_j a_j U_j`` with ``U_j`` i.i.d. uniform on [-1, 1] and
``sum_j a_j**2 = 1``.  Two engines are provided:

* an exact engine based on the inclusion-exclusion formula for the
  weighted Irwin-Hall distribution,

      P(S <= s) = (2**n n! prod a_j)**-1
                  * sum_{eps in {0,1}^n} (-1)**|eps| (s + c - 2 sum_{j in eps} a_j)_+**n,

  with ``c = sum_j a_j``.  Terms are summed with ``math.fsum`` and a
  running error bound is reported.  When the bound is too loose (small
  coefficients make the prefactor huge and the alternating sum cancels
  badly) the same formula is re-evaluated in exact integer arithmetic:
  every double is a dyadic rational, so scaling by a common power of two
  turns the whole computation into Python ints.

* a Monte Carlo engine with streams keyed on (seed, vector, threshold).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Sequence

import numpy as np

from .rng import stream, vector_hash

__all__ = [
    "CapacityError",
    "UnitVector",
    "TailValue",
    "MCEstimate",
    "DEFAULT_EXACT_CAP",
    "MIN_MC_TRIALS",
    "exact_tail_two_sided",
    "exact_tail_many",
    "mc_tail_two_sided",
    "equal_weights_tail",
    "milman_vector",
    "random_unit_vector",
]

DEFAULT_EXACT_CAP = 20
MIN_MC_TRIALS = 10_000
# float results whose error bound exceeds this are recomputed exactly
FALLBACK_ERR = 1e-14

_EPS = sys.float_info.epsilon


class CapacityError(ValueError):
    """Raised when the exact engine is asked for more summands than its cap."""


@dataclass(frozen=True)
class UnitVector:
    """Canonical coefficient vector of a weighted uniform sum.

    Entries are stored as absolute values with zeros dropped, sorted in
    decreasing order.  None of these operations changes the law of ``|S|``,
    so two vectors that differ only by signs, zeros or order compare equal.

    Use :meth:`from_coeffs` rather than the raw constructor.
    """

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.coeffs:
            raise ValueError("a unit vector needs at least one nonzero coefficient")
        arr = np.asarray(self.coeffs, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        if np.any(arr <= 0) or np.any(np.diff(arr) > 0):
            raise ValueError("coefficients must be canonical; use UnitVector.from_coeffs")
        if abs(math.fsum(arr * arr) - 1.0) > 1e-12:
            raise ValueError(f"sum of squares is {math.fsum(arr * arr)!r}, expected 1")

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[float], normalize: bool = False) -> "UnitVector":
        arr = np.abs(np.asarray(list(coeffs), dtype=float))
        if arr.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr = arr[arr > 0]
        if normalize:
            if arr.size == 0:
                raise ValueError("cannot normalize the zero vector")
            arr = arr / math.sqrt(math.fsum(arr * arr))
        return cls(tuple(float(v) for v in np.sort(arr)[::-1]))

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    @property
    def l1(self) -> float:
        """``sum a_j``, the right end of the support of ``S``."""
        return math.fsum(self.coeffs)


@dataclass(frozen=True)
class TailValue:
    prob: float
    method: Literal["exact", "mc"]
    err_bound: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"probability out of range: {self.prob!r}")
        if self.err_bound < 0:
            raise ValueError("err_bound must be nonnegative")


@dataclass(frozen=True)
class MCEstimate:
    """Indicator-mean estimate.  ``stderr`` is the binomial standard error."""

    mean: float
    stderr: float
    trials: int
    seed: int

    def as_tail(self) -> TailValue:
        return TailValue(self.mean, "mc", self.stderr)

    def interval(self, z: float = 4.0) -> tuple[float, float]:
        return self.mean - z * self.stderr, self.mean + z * self.stderr


def milman_vector(k: int) -> UnitVector:
    """``(1, ..., 1) / sqrt(k)`` with ``k`` entries."""
    if k < 1:
        raise ValueError("k must be positive")
    return UnitVector((1.0 / math.sqrt(k),) * k) if k > 1 else UnitVector((1.0,))


def random_unit_vector(n: int, rng: np.random.Generator) -> UnitVector:
    """Uniformly distributed direction: normalized standard normal sample."""
    while True:
        g = rng.standard_normal(n)
        if np.any(g != 0):
            return UnitVector.from_coeffs(g, normalize=True)


# --------------------------------------------------------------------------
# exact engine


def _subset_tables(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All 2**n subset sums of ``a`` and the matching signs (-1)**|eps|."""
    sums = np.zeros(1)
    signs = np.ones(1)
    for aj in a:
        sums = np.concatenate([sums, sums + aj])
        signs = np.concatenate([signs, -signs])
    return sums, signs


def _float_lower_tails(a: np.ndarray, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P(S <= -t) for each t, plus an absolute error bound per entry."""
    n = a.size
    c = math.fsum(a)
    sums, signs = _subset_tables(a)
    probs = np.empty(ts.size)
    errs = np.empty(ts.size)
    # absolute rounding error of c - t - 2*sum(eps)
    dx = (n + 3) * _EPS * (c + ts.max(initial=0.0)) * 2.0
    nfact = float(math.factorial(n))
    for i, t in enumerate(ts):
        x = c - t - 2.0 * sums
        keep = x > 0
        if not np.any(keep):
            probs[i] = 0.0
            errs[i] = 0.0
            continue
        xk = x[keep]
        term = np.ones(xk.size)
        for aj in a:
            term *= xk / (2.0 * aj)
        term /= nfact
        signed = signs[keep] * term
        total = math.fsum(signed)
        rel = (n + 3) * _EPS + n * dx / xk
        err = float(np.sum(term * rel)) + _EPS * abs(total)
        # never report less than (#terms) * eps * (largest term)
        err = max(err, xk.size * _EPS * float(term.max()))
        probs[i] = total
        errs[i] = err
    return probs, errs


def _dyadic(v: float) -> tuple[int, int]:
    """Write a finite double as m * 2**e with integer m."""
    m, e = math.frexp(v)
    return int(m * (1 << 53)), e - 53


def _exact_lower_tail(a: Sequence[float], t: float) -> float:
    """P(S <= -t) by inclusion-exclusion over the integers, correctly rounded."""
    parts = [_dyadic(v) for v in a] + [_dyadic(t)]
    emin = min(e for m, e in parts if m != 0)
    ints = [m << (e - emin) for m, e in parts]
    A, T = ints[:-1], ints[-1]
    n = len(A)
    limit = sum(A) - T  # (c - t) in scaled units
    if limit <= 0:
        return 0.0
    total = 0
    # depth-first over subsets; supersets of an infeasible set are infeasible
    stack = [(0, 0, 1)]
    while stack:
        start, s2, sign = stack.pop()
        x = limit - s2
        total += sign * x**n
        for j in range(start, n):
            s_next = s2 + 2 * A[j]
            if s_next < limit:
                stack.append((j + 1, s_next, -sign))
    den = (1 << n) * math.factorial(n) * math.prod(A)
    return float(Fraction(total, den))


def _check_exact_args(a: UnitVector, cap: int) -> None:
    if not isinstance(a, UnitVector):
        raise TypeError("expected a UnitVector")
    if a.n > cap:
        raise CapacityError(
            f"n = {a.n} exceeds the exact-engine cap {cap}; use mc_tail_two_sided instead"
        )


def exact_tail_many(a: UnitVector, ts, cap: int = DEFAULT_EXACT_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`exact_tail_two_sided`: returns ``(probs, err_bounds)``."""
    _check_exact_args(a, cap)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(~np.isfinite(ts)) or np.any(ts <= 0):
        raise ValueError("thresholds must be finite and positive")
    lower, errs = _float_lower_tails(a.array, ts)
    probs = 2.0 * lower
    errs = 2.0 * errs
    for i in np.flatnonzero(errs > FALLBACK_ERR):
        probs[i] = 2.0 * _exact_lower_tail(a.coeffs, float(ts[i]))
        errs[i] = _EPS * probs[i]
    return np.clip(probs, 0.0, 1.0), errs


def exact_tail_two_sided(a: UnitVector, t: float, cap: int = DEFAULT_EXACT_CAP) -> TailValue:
    """``P(|S| > t)`` from the weighted Irwin-Hall formula.

    Raises
    ------
    CapacityError
        If ``a.n > cap``.
    ValueError
        If ``t <= 0``.
    """
    probs, errs = exact_tail_many(a, [t], cap)
    return TailValue(float(probs[0]), "exact", float(errs[0]))


def equal_weights_tail(n: int, t: float, cap: int = DEFAULT_EXACT_CAP) -> TailValue:
    """Exact tail for the Milman-form vector with ``n`` equal entries."""
    return exact_tail_two_sided(milman_vector(n), t, cap)


# --------------------------------------------------------------------------
# Monte Carlo engine


def mc_tail_two_sided(
    a: UnitVector, t: float, trials: int, seed: int, chunk: int = 1 << 22
) -> MCEstimate:
    """Monte Carlo estimate of ``P(|S| > t)``.

    Deterministic in ``(a, t, trials, seed)``; ``chunk`` bounds the number
    of uniforms held in memory at once and does not affect the result.
    """
    if trials < MIN_MC_TRIALS:
        raise ValueError(f"trials must be at least {MIN_MC_TRIALS}")
    if not (t > 0 and math.isfinite(t)):
        raise ValueError("t must be finite and positive")
    rng = stream(seed, "mc_tail", vector_hash(a.coeffs), float(t))
    coeffs = a.array
    rows = max(1, chunk // a.n)
    hits = 0
    done = 0
    while done < trials:
        m = min(rows, trials - done)
        s = rng.uniform(-1.0, 1.0, size=(m, a.n)) @ coeffs
        hits += int(np.count_nonzero(np.abs(s) > t))
        done += m
    mean = hits / trials
    return MCEstimate(mean, math.sqrt(mean * (1.0 - mean) / trials), trials, seed)
