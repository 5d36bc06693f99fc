"""Certification of ``G(t, p(t), x) >= 0`` for ``3/4 < t < 1``, ``0 < x < 1``.

Here ``psi(x) = (1/x) int_0^x log(1-y)**2 dy`` and
``G(t, p, x) = 3 t**2 psi(x) - log(1 - p x)**2``.  By the log-concave
relaxation, nonnegativity of ``G`` on ``(0, 1)`` gives
``P(|X| <= t) >= p`` for every symmetric log-concave ``X`` with variance 1/3.

The certificate follows a fixed chain:

1. ``p(t)`` is replaced by a piecewise-linear majorant through three nodes;
   concavity of ``p`` and two tangent lines prove the majorisation.
2. Because ``-log(1 - p x)`` is convex in ``p`` and the majorant is linear
   between nodes, the inequality only has to hold at the nodes.
3. Node 0 is ``G(3/4, 3/4, x) >= 0``; nodes 1 and 2 are split into
   ``x < 0.15`` (concavity argument) and 17 netting cells on ``[0.15, 1]``
   where ``psi`` is bounded below by mid-point tangents.

An independent dense sweep of ``G(t, p(t), x)`` is run alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .constants import p_of_t, p_prime, sharp_constants
from .report import CertReport

__all__ = [
    "NodeTable",
    "TangentLine",
    "NettingCell",
    "Table1Report",
    "DEFAULT_NODES",
    "TABLE1_PRINTED",
    "TABLE1_ROW_LABELS",
    "CLAIM_BOUNDS",
    "psi",
    "psi_prime",
    "g_fn",
    "g_infimum",
    "check_g_bk",
    "tilde_p",
    "netting_cells",
    "certify_claim_tangents",
    "certify_small_x",
    "certify_netting",
    "direct_sweep",
    "certify_lemma_g",
]

TOL = 1e-9
SERIES_CUTOFF = 0.1
_SERIES_TERMS = 60  # 0.1**60 is far below double precision


@dataclass(frozen=True)
class NodeTable:
    """Interpolation nodes of the piecewise-linear majorant and tangent points."""

    nodes: tuple[tuple[float, float], ...] = ((0.75, 0.75), (0.92, 0.855), (1.0, 0.888))
    tangent_points: tuple[float, float] = (0.85, 1.0)

    def with_node(self, j: int, p: float) -> "NodeTable":
        nodes = list(self.nodes)
        nodes[j] = (nodes[j][0], p)
        return replace(self, nodes=tuple(nodes))

    @property
    def ts(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.nodes)

    @property
    def ps(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.nodes)


DEFAULT_NODES = NodeTable()

# Intermediate bounds quoted for the tangent lines:
# l1(t0) < 0.748, l1(t1) < 0.8545, l2(t1) < 0.8549, l2(t2) < 0.888
CLAIM_BOUNDS = {
    ("l1", 0): 0.748,
    ("l1", 1): 0.8545,
    ("l2", 1): 0.8549,
    ("l2", 2): 0.888,
}

TABLE1_ROW_LABELS = (
    "10^3(psi_k(x_k) - g_1(x_k))",
    "10^3(psi_k(x_{k+1}) - g_1(x_{k+1}))",
    "10^3(psi_k(x_k) - g_2(x_k))",
    "10^3(psi_k(x_{k+1}) - g_2(x_{k+1}))",
)

# Printed lower bounds, rows in the order of TABLE1_ROW_LABELS, k = 0..16.
TABLE1_PRINTED = np.array([
    [0.7, 1.4, 2.4, 3.6, 4.9, 6.4, 8.1, 9.8, 11, 13, 14, 16, 17, 20, 24, 34, 48],
    [1.5, 2.4, 3.6, 5, 6.5, 8.1, 9.9, 11, 13, 15, 16, 18, 21, 26, 41, 87, 304],
    [1.3, 2.5, 4.2, 6.2, 8.5, 11, 14, 17, 20, 24, 27, 29, 31, 30, 28, 23, 3.0],
    [2.6, 4.2, 6.2, 8.6, 11, 14, 17, 20, 24, 27, 30, 31, 32, 30, 30, 41, 17],
])


@dataclass(frozen=True)
class TangentLine:
    base_point: float
    value: float
    slope: float

    def __call__(self, x):
        return self.value + self.slope * (np.asarray(x, dtype=float) - self.base_point)


# --------------------------------------------------------------------------
# psi and G


def _harmonic(m: int) -> np.ndarray:
    return np.cumsum(1.0 / np.arange(1, m + 1))


_M = np.arange(2, _SERIES_TERMS + 2)
_H = _harmonic(_SERIES_TERMS + 1)[_M - 2]  # H_{m-1}
_PSI_COEF = 2.0 * _H / (_M * (_M + 1.0))
_DPSI_COEF = 2.0 * _H / (_M + 1.0)  # m * _PSI_COEF


def _as_unit_open(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError("x must lie in the open interval (0, 1)")
    return arr


def _series(x: np.ndarray, coef: np.ndarray, shift: int) -> np.ndarray:
    # Horner in x for sum_m coef[m] x**(m - shift), m starting at 2
    acc = np.zeros_like(x)
    for c in coef[::-1]:
        acc = acc * x + c
    return acc * x ** (2 - shift)


def psi(x):
    """``psi(x) = (1/x) int_0^x log(1-y)**2 dy`` on (0, 1).

    Closed form ``2 + (1-x)(2L - L**2)/x`` with ``L = log(1-x)``; below
    ``x = 0.1`` the power series ``sum_{m>=2} 2 H_{m-1} x**m / (m(m+1))`` is
    used instead because the closed form cancels.
    """
    arr = _as_unit_open(x)
    small = arr < SERIES_CUTOFF
    xs = np.where(small, arr, 0.5)
    xl = np.where(small, 0.5, arr)
    L = np.log1p(-xl)
    closed = 2.0 + (1.0 - xl) * (2.0 * L - L * L) / xl
    out = np.where(small, _series(xs, _PSI_COEF, 0), closed)
    return float(out) if out.ndim == 0 else out


def psi_prime(x):
    """Derivative of :func:`psi`: ``-(2L - L**2)/x**2 - (2 - 2L)/x``."""
    arr = _as_unit_open(x)
    small = arr < SERIES_CUTOFF
    xs = np.where(small, arr, 0.5)
    xl = np.where(small, 0.5, arr)
    L = np.log1p(-xl)
    closed = -(2.0 * L - L * L) / (xl * xl) - (2.0 - 2.0 * L) / xl
    out = np.where(small, _series(xs, _DPSI_COEF, 1), closed)
    return float(out) if out.ndim == 0 else out


def g_fn(t, p, x):
    """``G(t, p, x) = 3 t**2 psi(x) - log(1 - p x)**2``."""
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    x = _as_unit_open(x)
    if np.any(t <= 0) or np.any(p <= 0):
        raise ValueError("t and p must be positive")
    if np.any(p * x >= 1):
        raise ValueError("need p * x < 1")
    out = 3.0 * t * t * np.asarray(psi(x)) - np.log1p(-p * x) ** 2
    return float(out) if out.ndim == 0 else out


def g_infimum(t: float, p: float, step: float = 1e-4) -> tuple[float, float]:
    """Minimum of ``G(t, p, .)`` on a grid of spacing ``step``, refined locally.

    Returns ``(value, argmin)``.
    """
    n = int(round(1.0 / step))
    x = np.arange(1, n) * step
    vals = g_fn(t, p, x)
    k = int(np.argmin(vals))
    best, xbest = float(vals[k]), float(x[k])
    lo = x[k - 1] if k > 0 else 0.5 * x[0]
    hi = x[k + 1] if k + 1 < x.size else 0.5 * (x[-1] + 1.0)
    res = optimize.minimize_scalar(lambda s: g_fn(t, p, s), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    if res.success and res.fun < best:
        best, xbest = float(res.fun), float(res.x)
    return best, xbest


def check_g_bk(t: float, step: float = 1e-4) -> float:
    """Grid infimum of ``G(t, t, .)`` over (0, 1).

    For ``0 < t <= 3/4`` this is 0 (approached as ``x -> 0``) and the returned
    margin should be ``>= -1e-9``; for ``t > 3/4`` it turns negative.
    """
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    return g_infimum(t, t, step)[0]


# --------------------------------------------------------------------------
# the majorant of p(t)


def tilde_p(t, nodes: NodeTable = DEFAULT_NODES):
    """Piecewise-linear interpolation of the node table on ``[3/4, 1]``."""
    arr = np.asarray(t, dtype=float)
    ts, ps = nodes.ts, nodes.ps
    if np.any((arr < ts[0]) | (arr > ts[-1])):
        raise ValueError(f"t must lie in [{ts[0]}, {ts[-1]}]")
    out = np.interp(arr, ts, ps)
    return float(out) if out.ndim == 0 else out


def _p_tangent(t0: float) -> TangentLine:
    return TangentLine(t0, p_of_t(t0), p_prime(t0))


def certify_claim_tangents(nodes: NodeTable = DEFAULT_NODES, grid: int = 2001) -> CertReport:
    """Tangent-line proof that ``p(t) < tilde_p(t)`` on ``[3/4, 1]``."""
    rep = CertReport("claim_tangents")
    ts, ps = nodes.ts, nodes.ps
    lines = {"l1": _p_tangent(nodes.tangent_points[0]), "l2": _p_tangent(nodes.tangent_points[1])}
    rep.data["tangents"] = {k: vars(v) for k, v in lines.items()}

    for (name, j), bound in CLAIM_BOUNDS.items():
        val = float(lines[name](ts[j]))
        rep.add(f"{name}(t{j})<{bound}", val < bound, bound - val, 0.0,
                f"{name}({ts[j]}) = {val:.10f}")
        # the quoted bound must itself sit at or below the node value
        rep.add(f"{name}(t{j})<=p{j}", val <= ps[j], ps[j] - val, 0.0, f"p{j} = {ps[j]}")

    for name, line in lines.items():
        tp = line.base_point
        rep.add(f"{name}/tangency", abs(float(line(tp)) - p_of_t(tp)) <= 1e-15,
                -abs(float(line(tp)) - p_of_t(tp)), 1e-15)

    tg = np.linspace(ts[0], ts[-1], grid)
    p = p_of_t(tg)
    for name, line in lines.items():
        gap = float(np.min(line(tg) - p))
        rep.add(f"{name}/dominates_p", gap >= -TOL, gap, TOL, "min over grid of l(t) - p(t)")

    d2 = p[2:] - 2 * p[1:-1] + p[:-2]
    rep.add("p/concave", float(d2.max()) <= 1e-12, -float(d2.max()), 1e-12,
            "max second difference of p on the grid")

    gap = tilde_p(tg, nodes) - p
    k = int(np.argmin(gap))
    rep.add("p<tilde_p", float(gap[k]) > 0, float(gap[k]), 0.0, f"closest at t = {tg[k]:.6f}")
    return rep


# --------------------------------------------------------------------------
# small x


def _small_x_fn(x, tj: float, pj: float):
    return tj * np.asarray(x, dtype=float) + np.log1p(-pj * np.asarray(x, dtype=float))


def certify_small_x(nodes: NodeTable = DEFAULT_NODES, x_end: float = 0.15, grid: int = 1501) -> CertReport:
    """``t_j x + log(1 - p_j x) > 0`` on ``(0, x_end]`` for nodes 1 and 2.

    The function vanishes at 0 and is concave (second derivative
    ``-p_j**2 / (1 - p_j x)**2``), so a positive value at ``x_end`` suffices.
    Together with ``psi(x) > x**2/3`` this gives the node inequality there.
    """
    rep = CertReport("small_x")
    xs = np.linspace(0.0, x_end, grid)
    values = {}
    for j in (1, 2):
        tj, pj = nodes.nodes[j]
        f = _small_x_fn(xs, tj, pj)
        rep.add(f"phi{j}(0)=0", f[0] == 0.0, -abs(float(f[0])))
        second = -(pj**2) / (1.0 - pj * xs) ** 2
        rep.add(f"phi{j}/concave_analytic", float(second.max()) < 0, -float(second.max()))
        d2 = f[2:] - 2 * f[1:-1] + f[:-2]
        rep.add(f"phi{j}/concave_numeric", float(d2.max()) <= 1e-15, -float(d2.max()), 1e-15)
        end = float(f[-1])
        values[j] = end
        rep.add(f"phi{j}({x_end})>0", end > 0, end, 0.0, f"value {end:.6g}")
        rep.add(f"phi{j}/positive_on_grid", float(f[1:].min()) > 0, float(f[1:].min()))
    xg = xs[1:]
    lb = float(np.min(np.asarray(psi(xg)) - xg * xg / 3.0))
    rep.add("psi>x^2/3", lb > 0, lb, 0.0, f"on (0, {x_end}]")
    rep.data["endpoint_values"] = values
    return rep


# --------------------------------------------------------------------------
# netting


@dataclass(frozen=True)
class NettingCell:
    k: int
    x_lo: float
    x_hi: float
    x_mid: float
    tangent: TangentLine


def netting_cells(x_start: float = 0.15, width: float = 0.05, count: int = 17) -> list[NettingCell]:
    """Cells ``[x_start + width k, x_start + width (k+1)]`` with tangents of psi at mid-points."""
    cells = []
    for k in range(count):
        lo = round(x_start + width * k, 12)
        hi = round(x_start + width * (k + 1), 12)
        mid = 0.5 * (lo + hi)
        cells.append(NettingCell(k, lo, hi, mid, TangentLine(mid, psi(mid), psi_prime(mid))))
    return cells


def _g_node(x, tj: float, pj: float):
    x = np.asarray(x, dtype=float)
    return np.log1p(-pj * x) ** 2 / (3.0 * tj * tj)


@dataclass
class Table1Report(CertReport):
    """Netting report with the 4 x 17 table of ``10**3 * (tangent - g_j)``."""

    table: np.ndarray = field(default_factory=lambda: np.zeros((4, 17)))
    row_labels: tuple[str, ...] = TABLE1_ROW_LABELS

    def to_rows(self) -> list[list[str]]:
        header = ["k"] + [str(k) for k in range(self.table.shape[1])]
        rows = [header]
        for label, row in zip(self.row_labels, self.table):
            rows.append([label] + [repr(float(v)) for v in row])
        return rows


def certify_netting(nodes: NodeTable = DEFAULT_NODES, convexity_grid: int = 2001,
                    interior_points: int = 10) -> Table1Report:
    """Tangent-netting check of ``psi(x) >= g_j(x)`` on ``[0.15, 1]`` for nodes 1 and 2."""
    rep = Table1Report("netting")
    cells = netting_cells()
    table = np.empty((4, len(cells)))
    for r, j in enumerate((1, 2)):
        tj, pj = nodes.nodes[j]
        for cell in cells:
            for side, x in enumerate((cell.x_lo, cell.x_hi)):
                delta = float(cell.tangent(x) - _g_node(x, tj, pj))
                table[2 * r + side, cell.k] = 1e3 * delta
                end = "x_k" if side == 0 else "x_k+1"
                rep.add(f"delta/j{j}/k{cell.k}/{end}", delta > 0, delta, 0.0)

    # the endpoint check is sufficient only if g_j is convex on each cell
    xg = np.linspace(0.15, 1.0, convexity_grid)
    for j in (1, 2):
        tj, pj = nodes.nodes[j]
        g = _g_node(xg, tj, pj)
        d2 = g[2:] - 2 * g[1:-1] + g[:-2]
        rep.add(f"g{j}/convex", float(d2.min()) >= -1e-12, float(d2.min()), 1e-12)

    worst = math.inf
    for cell in cells:
        # stay off the right end x = 1 where psi is only defined as a limit
        xi = np.linspace(cell.x_lo, min(cell.x_hi, 1.0 - 1e-9), interior_points + 2)[1:-1]
        worst = min(worst, float(np.min(np.asarray(psi(xi)) - cell.tangent(xi))))
    rep.add("psi>=tangent", worst >= -1e-15, worst, 1e-15, "interior points of every cell")

    if nodes == DEFAULT_NODES:
        diff = table - TABLE1_PRINTED
        i, k = np.unravel_index(int(np.argmin(diff)), diff.shape)
        rep.add("table1>=printed", bool(np.all(diff >= 0)), float(diff[i, k]), 0.0,
                f"closest: row {i + 1}, k = {k}")
    rep.table = table
    rep.data["table"] = table.tolist()
    return rep


# --------------------------------------------------------------------------
# direct sweep and aggregate


def direct_sweep(t_steps: int = 400, x_steps: int = 400) -> tuple[float, float, float]:
    """Minimum of ``G(t, p(t), x)`` on an interior grid of ``(3/4, 1) x (0, 1)``.

    Returns ``(min, t_at_min, x_at_min)``.
    """
    t = 0.75 + 0.25 * np.arange(1, t_steps + 1) / (t_steps + 1)
    x = np.arange(1, x_steps + 1) / (x_steps + 1)
    T, X = np.meshgrid(t, x, indexing="ij")
    vals = g_fn(T, p_of_t(T), X)
    i, k = np.unravel_index(int(np.argmin(vals)), vals.shape)
    return float(vals[i, k]), float(t[i]), float(x[k])


def certify_lemma_g(nodes: NodeTable = DEFAULT_NODES, sweep: tuple[int, int] = (400, 400),
                    step: float = 1e-4) -> CertReport:
    """Run the whole certificate and the independent sweep; one aggregate report."""
    rep = CertReport("lemma_g")
    const = sharp_constants()
    rep.data["c_star"] = const.c_star

    t0n, p0n = nodes.nodes[0]
    if t0n == p0n:
        m = check_g_bk(t0n, step)
    else:
        m = g_infimum(t0n, p0n, step)[0]
    rep.add("node0/G(t0,p0,.)>=0", m >= -TOL, m, TOL, f"grid infimum, t0 = p0 = {t0n}")

    xg = np.linspace(1e-3, 1 - 1e-3, 1000)
    ps = np.asarray(psi(xg))
    d2 = ps[2:] - 2 * ps[1:-1] + ps[:-2]
    rep.add("psi/convex", float(d2.min()) >= -1e-10, float(d2.min()), 1e-10)
    lb = float(np.min(ps - xg * xg / 3.0))
    rep.add("psi>x^2/3", lb > 0, lb)

    for sub in (certify_claim_tangents(nodes), certify_small_x(nodes), certify_netting(nodes)):
        rep.extend(sub)
        if isinstance(sub, Table1Report):
            rep.data["table1"] = sub.table.tolist()

    gmin, tmin, xmin = direct_sweep(*sweep)
    rep.add("sweep/G(t,p(t),x)>=0", gmin >= -TOL, gmin, TOL,
            f"{sweep[0]}x{sweep[1]} grid, min at t = {tmin:.5f}, x = {xmin:.5f}")
    rep.data["sweep_min"] = {"value": gmin, "t": tmin, "x": xmin}
    return rep
