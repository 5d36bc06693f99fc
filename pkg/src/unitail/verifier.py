"""End-to-end checks of the tail bound against the exact and Monte Carlo engines.

Main inequality, for every unit vector ``a`` and ``t > 0``:

    P(|sum a_j U_j| > t) <= C* P(|G| / sqrt 3 > t).

Also covered: the slab bound ``P(|S| <= t) >= t`` for ``t <= 3/4``, the
inductive step for ``t >= 1``, self-normalised sums, the negative-moment
sphere formula and the constant-1 conjecture above ``t1`` (probe only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .ave_tail import averaged_tail
from .constants import sharp_constants
from .report import CertReport
from .rng import DEFAULT_SEED, stream, vector_hash
from .special import SQRT3, scaled_two_sided_tail, upper_tail
from .uniform_sum import (
    DEFAULT_EXACT_CAP,
    TailValue,
    UnitVector,
    equal_weights_tail,
    exact_tail_many,
    exact_tail_two_sided,
    mc_tail_two_sided,
    milman_vector,
    random_unit_vector,
)

__all__ = [
    "Margin",
    "SelfNormSpec",
    "EXACT_TOL",
    "MC_SIGMAS",
    "tail",
    "bound",
    "sweep_vectors",
    "default_main_t_grid",
    "verify_main_inequality",
    "sweep_main",
    "verify_bk_small_width",
    "sweep_bk",
    "inductive_step_check",
    "verify_self_normalized",
    "sphere_negative_moment_check",
    "tangent_minorant_check",
    "conjecture_probe",
]

EXACT_TOL = 1e-12
MC_SIGMAS = 4.0
SPHERE_SIGMAS = 3.0
EQUALITY_TOL = 1e-9

Mode = Literal["exact", "mc"]


@dataclass(frozen=True)
class Margin:
    """Signed slack of an inequality together with the tolerance it is judged by."""

    value: float
    tolerance: float
    tail: TailValue

    @property
    def passed(self) -> bool:
        return self.value >= -self.tolerance

    def __float__(self) -> float:
        return self.value


def bound(t, c_star: float | None = None):
    """Right-hand side ``C* P(|G| > t sqrt 3)``."""
    c = sharp_constants().c_star if c_star is None else c_star
    out = c * np.asarray(scaled_two_sided_tail(t))
    return float(out) if out.ndim == 0 else out


def tail(a: UnitVector, t: float, mode: Mode = "exact", trials: int = 10**6,
         seed: int = DEFAULT_SEED, cap: int = DEFAULT_EXACT_CAP) -> TailValue:
    if mode == "exact":
        return exact_tail_two_sided(a, t, cap)
    if mode == "mc":
        return mc_tail_two_sided(a, t, trials, seed).as_tail()
    raise ValueError(f"unknown mode {mode!r}")


def _tolerance(tv: TailValue) -> float:
    return EXACT_TOL if tv.method == "exact" else MC_SIGMAS * tv.err_bound


# --------------------------------------------------------------------------
# main inequality


def verify_main_inequality(a: UnitVector, t: float, mode: Mode = "exact", trials: int = 10**6,
                           seed: int = DEFAULT_SEED, cap: int = DEFAULT_EXACT_CAP) -> Margin:
    """``C* P(|G| > t sqrt3) - P(|S| > t)``; passes at ``>= -1e-12`` (exact) or ``>= -4 stderr`` (mc)."""
    if not t > 0:
        raise ValueError("t must be positive")
    tv = tail(a, t, mode, trials, seed, cap)
    return Margin(bound(t) - tv.prob, _tolerance(tv), tv)


def default_main_t_grid(steps: int = 50, t_max: float = 3.0) -> np.ndarray:
    return np.linspace(t_max / steps, t_max, steps)


def sweep_vectors(n_max: int, vectors_per_n: int, seed: int = DEFAULT_SEED,
                  include_milman: bool = True) -> list[tuple[str, UnitVector]]:
    """Deterministic vector set: random directions per ``n`` plus every Milman-form vector.

    Random vectors are drawn from streams keyed on ``(seed, n, index)``; the
    single vector for ``n = 1`` is drawn once.
    """
    out: list[tuple[str, UnitVector]] = []
    for n in range(1, n_max + 1):
        count = 1 if n == 1 else vectors_per_n
        for i in range(count):
            out.append((f"random/n={n}/{i}", random_unit_vector(n, stream(seed, "sweep", n, i))))
    if include_milman:
        for k in range(2, n_max + 1):
            out.append((f"milman/k={k}", milman_vector(k)))
    return out


def sweep_main(n_max: int = 8, vectors_per_n: int = 1000, t_grid=None, seed: int = DEFAULT_SEED,
               cap: int = DEFAULT_EXACT_CAP, exact_n_max: int | None = None,
               mc_trials: int = 10**6, mc_t_grid: Sequence[float] = (0.5, 1.0, 1.5)) -> CertReport:
    """Sweep the main inequality over random and Milman-form vectors.

    Rows with ``n <= exact_n_max`` (default ``min(n_max, cap)``) use the exact
    engine on the full ``t_grid``; larger ``n`` use Monte Carlo on ``mc_t_grid``.
    The unique equality case ``n = 1, t = t0`` is checked explicitly.
    """
    const = sharp_constants()
    t_grid = default_main_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    exact_n_max = min(n_max, cap) if exact_n_max is None else exact_n_max
    rhs = bound(t_grid)
    rep = CertReport("main")
    per_n: dict[int, dict] = {}
    near_equality: list[tuple[str, float, float]] = []

    for label, a in sweep_vectors(n_max, vectors_per_n, seed):
        rec = per_n.setdefault(a.n, {"cells": 0, "violations": 0, "min": math.inf, "where": "",
                                    "min_rel": math.inf, "where_rel": ""})
        if a.n <= exact_n_max:
            probs, _ = exact_tail_many(a, t_grid, cap)
            margins = rhs - probs
            tol = EXACT_TOL
            k = int(np.argmin(margins))
            rec["cells"] += margins.size
            rec["violations"] += int(np.count_nonzero(margins < -tol))
            if margins[k] < rec["min"]:
                rec["min"], rec["where"] = float(margins[k]), f"{label} t={t_grid[k]:.4g}"
            rel = margins / rhs
            k = int(np.argmin(rel))
            if rel[k] < rec["min_rel"]:
                rec["min_rel"], rec["where_rel"] = float(rel[k]), f"{label} t={t_grid[k]:.4g}"
            for j in np.flatnonzero(np.abs(margins) <= EQUALITY_TOL):
                near_equality.append((label, float(t_grid[j]), float(margins[j])))
        else:
            for t in mc_t_grid:
                est = mc_tail_two_sided(a, float(t), mc_trials, seed)
                m = bound(float(t)) - est.mean
                rec["cells"] += 1
                rec["violations"] += int(m < -MC_SIGMAS * est.stderr)
                if m < rec["min"]:
                    rec["min"], rec["where"] = m, f"{label} t={t:.4g} (mc, stderr {est.stderr:.2g})"

    for n in sorted(per_n):
        rec = per_n[n]
        rep.add(f"n={n}", rec["violations"] == 0, rec["min"],
                EXACT_TOL if n <= exact_n_max else MC_SIGMAS,
                f"{rec['cells']} cells, {rec['violations']} violations, min at {rec['where']}"
                + (f"; min relative slack {rec['min_rel']:.4g} at {rec['where_rel']}" if rec["where_rel"] else ""))

    m0 = verify_main_inequality(UnitVector((1.0,)), const.t0)
    rep.add("equality/n=1,t=t0", abs(m0.value) <= EQUALITY_TOL, -abs(m0.value), EQUALITY_TOL,
            f"t0 = {const.t0!r}")
    rep.add("equality/unique", not near_equality, -float(len(near_equality)), EQUALITY_TOL,
            "grid cells with |margin| <= 1e-9: " + (", ".join(f"{l}@{t:.4g}" for l, t, _ in near_equality[:5]) or "none"))
    rep.data["per_n"] = per_n
    rep.data["t_grid"] = [float(t_grid[0]), float(t_grid[-1]), int(t_grid.size)]
    return rep


# --------------------------------------------------------------------------
# slab bound for t <= 3/4


def verify_bk_small_width(a: UnitVector, t: float, cap: int = DEFAULT_EXACT_CAP) -> Margin:
    """``P(|S| <= t) - t``; nonnegative for ``0 < t <= 3/4``."""
    if not 0 < t <= 0.75:
        raise ValueError("t must lie in (0, 3/4]")
    tv = exact_tail_two_sided(a, t, cap)
    return Margin((1.0 - tv.prob) - t, EXACT_TOL, tv)


def sweep_bk(n_max: int = 8, vectors_per_n: int = 1000, t_grid=None, seed: int = DEFAULT_SEED,
             cap: int = DEFAULT_EXACT_CAP) -> CertReport:
    """Slab bound over the same vector set as :func:`sweep_main`."""
    t_grid = np.linspace(0.015, 0.75, 50) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any((t_grid <= 0) | (t_grid > 0.75)):
        raise ValueError("t_grid must lie in (0, 3/4]")
    rep = CertReport("bk")
    per_n: dict[int, list] = {}
    for label, a in sweep_vectors(n_max, vectors_per_n, seed):
        probs, _ = exact_tail_many(a, t_grid, cap)
        margins = (1.0 - probs) - t_grid
        k = int(np.argmin(margins))
        rec = per_n.setdefault(a.n, [math.inf, "", 0])
        rec[2] += int(np.count_nonzero(margins < -EXACT_TOL))
        if margins[k] < rec[0]:
            rec[0], rec[1] = float(margins[k]), f"{label} t={t_grid[k]:.4g}"
    for n in sorted(per_n):
        lo, where, bad = per_n[n]
        rep.add(f"n={n}", bad == 0, lo, EXACT_TOL, f"{bad} violations, min at {where}")
    return rep


# --------------------------------------------------------------------------
# inductive step


def inductive_step_check(a: UnitVector, t: float, pivot: int = -1, trials: int | None = None,
                         seed: int = DEFAULT_SEED, cap: int = DEFAULT_EXACT_CAP) -> CertReport:
    """Check ``P(S > t) <= C* E_u Q((t - a_n u) sqrt3 / sqrt(1-a_n^2)) <= C* Q(t sqrt3)``.

    ``a_n`` is the coefficient at position ``pivot`` of the canonical vector
    (the smallest by default).  The middle term equals ``C*`` times the
    averaged tail at ``(a_n, t)`` after ``u -> -u``.  With ``trials`` set the
    left side is also estimated by Monte Carlo and compared with the exact value.
    """
    if a.n < 2:
        raise ValueError("the inductive step needs n >= 2")
    if t < 1:
        raise ValueError("the inductive step is used for t >= 1")
    an = a.coeffs[pivot]
    if not 0 < an < 1:
        raise ValueError("need 0 < a_n < 1")
    c = sharp_constants().c_star
    rep = CertReport("induction")
    left = 0.5 * exact_tail_two_sided(a, t, cap).prob
    middle = c * averaged_tail(an, t)
    right = c * upper_tail(t * SQRT3)

    # the middle term is C* E_u[Q(...)] with the inductive hypothesis applied
    # to the remaining n-1 coefficients, so check that hypothesis where used
    rest = UnitVector.from_coeffs([v for i, v in enumerate(a.coeffs) if i != pivot % a.n], normalize=True)
    s = math.sqrt(1 - an * an)
    us = np.linspace(-1, 1, 41)
    hyp = min(c * upper_tail((t - an * u) / s * SQRT3) - 0.5 * exact_tail_two_sided(rest, (t - an * u) / s, cap).prob
              for u in us)
    rep.add("hypothesis/n-1", hyp >= -EXACT_TOL, hyp, EXACT_TOL, "one-sided bound for the remaining vector")
    rep.add("left<=middle", left <= middle + EXACT_TOL, middle - left, EXACT_TOL,
            f"P(S>t) = {left:.6g}, middle = {middle:.6g}")
    rep.add("middle<=right", middle <= right + EXACT_TOL, right - middle, EXACT_TOL,
            f"right = {right:.6g}")
    if trials is not None:
        est = mc_tail_two_sided(a, t, trials, seed)
        diff = abs(0.5 * est.mean - left)
        # zero hits give a zero binomial stderr; floor it at one hit's worth
        tol = MC_SIGMAS * 0.5 * max(est.stderr, 1.0 / trials)
        rep.add("left/exact_vs_mc", diff <= tol, tol - diff, tol, f"mc one-sided {0.5 * est.mean:.6g}")
    rep.data.update(left=left, middle=middle, right=right, a_n=an)
    return rep


# --------------------------------------------------------------------------
# self-normalised sums


@dataclass(frozen=True)
class SelfNormSpec:
    """Radius law and length of a self-normalised sum ``sum R_j U_j / sqrt(sum R_j^2)``.

    ``params`` is ``(r1, r2, q)`` for the two-point law (``R = r1`` with
    probability ``q``) and ignored otherwise.
    """

    radius_law: Literal["constant", "uniform01", "exponential", "two-point"]
    n: int
    params: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.radius_law not in ("constant", "uniform01", "exponential", "two-point"):
            raise ValueError(f"unknown radius law {self.radius_law!r}")
        if self.radius_law == "two-point":
            if len(self.params) != 3:
                raise ValueError("two-point law needs params (r1, r2, q)")
            r1, r2, q = self.params
            if r1 < 0 or r2 < 0 or not 0 < q < 1:
                raise ValueError("need r1, r2 >= 0 and 0 < q < 1")
            if r1 == 0 and r2 == 0:
                raise ValueError("radii cannot both be zero")

    def sample(self, rng: np.random.Generator, rows: int) -> np.ndarray:
        shape = (rows, self.n)
        if self.radius_law == "constant":
            return np.ones(shape)
        if self.radius_law == "uniform01":
            return rng.random(shape)
        if self.radius_law == "exponential":
            return rng.exponential(1.0, shape)
        r1, r2, q = self.params
        return np.where(rng.random(shape) < q, r1, r2)


def verify_self_normalized(spec: SelfNormSpec, t_grid, trials: int = 10**5, seed: int = DEFAULT_SEED,
                           chunk: int = 1 << 21) -> CertReport:
    """Monte Carlo check of the bound for ``sum R_j U_j / sqrt(sum R_j^2)``.

    Rows whose radii are all zero are redrawn; the count is reported.
    """
    if trials < 10**5:
        raise ValueError("trials must be at least 1e5")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise ValueError("t_grid must be positive")
    rng = stream(seed, "self_norm", spec.radius_law, spec.n, repr(spec.params))
    rows = max(1, chunk // spec.n)
    hits = np.zeros(t_grid.size, dtype=np.int64)
    done = 0
    resampled = 0
    while done < trials:
        m = min(rows, trials - done)
        r = spec.sample(rng, m)
        bad = ~np.any(r > 0, axis=1)
        while np.any(bad):
            resampled += int(bad.sum())
            r[bad] = spec.sample(rng, int(bad.sum()))
            bad = ~np.any(r > 0, axis=1)
        u = rng.uniform(-1.0, 1.0, size=(m, spec.n))
        z = np.abs(np.sum(r * u, axis=1)) / np.sqrt(np.sum(r * r, axis=1))
        hits += np.count_nonzero(z[:, None] > t_grid[None, :], axis=0)
        done += m

    rep = CertReport(f"self_norm/{spec.radius_law}/n={spec.n}")
    means = hits / trials
    stderrs = np.sqrt(means * (1 - means) / trials)
    rhs = bound(t_grid)
    gauss = np.asarray(scaled_two_sided_tail(t_grid))
    for t, mu, se, b in zip(t_grid, means, stderrs, rhs):
        slack = b - mu
        rep.add(f"t={t:.4g}", slack >= -MC_SIGMAS * se, slack, MC_SIGMAS * se, f"estimate {mu:.6g} +- {se:.2g}")
    if spec.radius_law == "constant" and spec.n <= DEFAULT_EXACT_CAP:
        exact = np.array([equal_weights_tail(spec.n, float(t)).prob for t in t_grid])
        dev = np.abs(exact - means) - MC_SIGMAS * np.maximum(stderrs, 1.0 / trials)
        rep.add("constant/matches_exact", bool(np.all(dev <= 0)), -float(dev.max()), MC_SIGMAS,
                "constant radii reduce to equal weights")
    rep.data.update(means=means.tolist(), stderrs=stderrs.tolist(), resampled=resampled,
                    gaussian_gap=(means - gauss).tolist())
    return rep


# --------------------------------------------------------------------------
# negative-moment sphere formula


def _sphere(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    g = rng.standard_normal(shape + (3,))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _moments(x: np.ndarray) -> tuple[float, float]:
    return float(x.sum()), float((x * x).sum())


def _mean_se(s1: float, s2: float, n: int) -> tuple[float, float]:
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


def sphere_negative_moment_check(a: UnitVector, t: float, trials: int = 10**6, seed: int = DEFAULT_SEED,
                                 cap: int = DEFAULT_EXACT_CAP, chunk: int = 1 << 21) -> CertReport:
    """Three-way check of ``P(|S| <= t) = t E|t xi_0 + sum a_j xi_j|^-1 = t E min(1/t, 1/|X|)``.

    ``xi_j`` are independent uniform points on the unit sphere of R^3 and
    ``X = sum a_j xi_j``.  Both estimators use the same draws; their
    difference is judged by its own paired standard error.
    """
    if trials < 10**5:
        raise ValueError("trials must be at least 1e5")
    if not t > 0:
        raise ValueError("t must be positive")
    exact = 1.0 - exact_tail_two_sided(a, t, cap).prob
    rng = stream(seed, "sphere", vector_hash(a.coeffs), float(t))
    coeffs = a.array
    rows = max(1, chunk // (3 * (a.n + 1)))
    acc = np.zeros(6)
    done = 0
    while done < trials:
        m = min(rows, trials - done)
        xi = _sphere(rng, (m, a.n + 1))
        x = np.einsum("j,mjk->mk", coeffs, xi[:, 1:, :])
        v1 = t / np.linalg.norm(t * xi[:, 0, :] + x, axis=1)
        v2 = t * np.minimum(1.0 / t, 1.0 / np.linalg.norm(x, axis=1))
        acc += (*_moments(v1), *_moments(v2), *_moments(v1 - v2))
        done += m
    m1, se1 = _mean_se(acc[0], acc[1], trials)
    m2, se2 = _mean_se(acc[2], acc[3], trials)
    md, sed = _mean_se(acc[4], acc[5], trials)

    rep = CertReport("sphere")
    k = SPHERE_SIGMAS
    rep.add("moment_vs_exact", abs(m1 - exact) <= k * se1, k * se1 - abs(m1 - exact), k * se1,
            f"exact {exact:.6g}, t E|t xi0 + X|^-1 = {m1:.6g} +- {se1:.2g}")
    rep.add("min_vs_exact", abs(m2 - exact) <= k * se2, k * se2 - abs(m2 - exact), k * se2,
            f"t E min(1/t, 1/|X|) = {m2:.6g} +- {se2:.2g}")
    rep.add("moment_vs_min", abs(md) <= k * sed, k * sed - abs(md), k * sed,
            f"paired difference {md:.3g} +- {sed:.2g}")
    rep.data.update(exact=exact, moment=(m1, se1), minimum=(m2, se2), difference=(md, sed))
    return rep


def tangent_minorant_check(t: float, vectors: int = 3, n: int = 5, trials: int = 10**5,
                           seed: int = DEFAULT_SEED, x_max: float = 20.0, grid: int = 20001) -> CertReport:
    """``g(x) = 1 - (x-1)/2 <= f_t(x) = min(1/t, x^-1/2)`` for ``0 < t <= 2/3`` and its consequence.

    With ``X = sum a_j xi_j`` and ``E|X|^2 = 1`` this gives ``E f_t(|X|^2) >= 1``,
    i.e. ``P(|S| <= t) >= t``.
    """
    if not 0 < t <= 2.0 / 3.0:
        raise ValueError("t must lie in (0, 2/3]")
    rep = CertReport("tangent_minorant")
    xs = np.linspace(0.0, x_max, grid)
    with np.errstate(divide="ignore"):
        f = np.minimum(1.0 / t, xs ** -0.5)
    g = 1.0 - 0.5 * (xs - 1.0)
    gap = float(np.min(f - g))
    rep.add("g<=f_t", gap >= -1e-15, gap, 1e-15, f"x in [0, {x_max:g}]")
    rep.add("g(0)<=1/t", 1.5 <= 1.0 / t * (1 + 1e-15), 1.0 / t - 1.5, 0.0)
    rep.add("tangency/x=1", abs(min(1.0 / t, 1.0) - 1.0) == 0.0, 0.0, 0.0, "g(1) = f_t(1) = 1")
    for i in range(vectors):
        a = random_unit_vector(n, stream(seed, "tangent", n, i))
        rng = stream(seed, "tangent/mc", vector_hash(a.coeffs), float(t))
        x = np.einsum("j,mjk->mk", a.array, _sphere(rng, (trials, a.n)))
        r2 = np.sum(x * x, axis=1)
        vals = np.minimum(1.0 / t, 1.0 / np.sqrt(r2))
        mean, se = float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(trials))
        rep.add(f"E f_t(|X|^2)>=1/vector{i}", mean >= 1 - MC_SIGMAS * se, mean - 1, MC_SIGMAS * se,
                f"E|X|^2 = {r2.mean():.5f}")
    return rep


# --------------------------------------------------------------------------
# conjecture probe


def conjecture_probe(t_grid, k_max: int = 12, random_vectors: int = 50, n_max: int = 8,
                     mc_vectors: int = 0, mc_n: int = 30, trials: int = 10**5,
                     seed: int = DEFAULT_SEED, strict: bool = True) -> CertReport:
    """Evidence for ``P(|S| > t) <= P(|G|/sqrt3 > t)`` when ``t > t1`` (no ``C*``).

    Informational: a ratio above 1 is reported as ``warn``, never ``fail``,
    and passing rows are evidence only.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    t1 = sharp_constants().t1
    if strict and np.any(t_grid <= t1):
        raise ValueError(f"t_grid entries must exceed t1 = {t1:.6f}")
    rep = CertReport("conjecture")
    vecs = [(f"milman/k={k}", milman_vector(k)) for k in range(1, k_max + 1)]
    for i in range(random_vectors):
        n = 2 + i % (n_max - 1)
        vecs.append((f"random/n={n}/{i}", random_unit_vector(n, stream(seed, "probe", n, i))))
    rhs = np.asarray(scaled_two_sided_tail(t_grid))
    for j, t in enumerate(t_grid):
        worst, where = -math.inf, ""
        for label, a in vecs:
            r = exact_tail_two_sided(a, float(t)).prob / rhs[j]
            if r > worst:
                worst, where = r, label
        rep.add(f"t={t:.4g}", worst <= 1 + 1e-12, 1 - worst, 1e-12, f"max ratio {worst:.6g} at {where}",
                warn_only=True)
        for i in range(mc_vectors):
            a = random_unit_vector(mc_n, stream(seed, "probe/mc", mc_n, i))
            est = mc_tail_two_sided(a, float(t), trials, seed)
            slack = rhs[j] - est.mean
            rep.add(f"t={t:.4g}/mc{i}", slack >= -MC_SIGMAS * est.stderr, slack,
                    MC_SIGMAS * est.stderr, f"n = {mc_n}", warn_only=True)
    return rep
