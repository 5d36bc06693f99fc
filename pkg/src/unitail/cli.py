"""Command-line front end.

Every subcommand produces one document: a ``meta`` header echoing the full
configuration, followed by either a ``report`` (checks with status, margin,
tolerance and detail) or a table.  Output is byte-for-byte reproducible for a
fixed configuration; the wall-clock duration goes to stderr and is only
embedded in the document with ``--timing``.

Exit codes: 0 when no check fails, 1 when any check fails, 2 on usage or
domain errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .ave_tail import certify_lemma_avetail, default_a_grid
from .constants import sharp_constants
from .lemma_g import TABLE1_ROW_LABELS, certify_lemma_g, certify_netting
from .report import CertReport
from .rng import DEFAULT_SEED, stream
from .uniform_sum import DEFAULT_EXACT_CAP, UnitVector, milman_vector, random_unit_vector
from . import verifier

__all__ = ["RunConfig", "OUT_DIR_ENV", "build_parser", "run", "main"]

OUT_DIR_ENV = "UNITAIL_OUT_DIR"
FORMATS = ("json", "csv", "md")
EXT = {"json": "json", "csv": "csv", "md": "md"}

# per-command defaults for the shared grid flags: (t_min, t_max, t_steps, trials)
_DEFAULTS: dict[str, tuple[float, float, int, int]] = {
    "certify ave-tail": (1.001, 10.0, 60, 0),
    "verify main": (0.06, 3.0, 50, 10**6),
    "verify bk": (0.015, 0.75, 50, 0),
    "verify induction": (1.0, 3.0, 9, 10**5),
    "verify self-norm": (0.25, 2.5, 10, 10**5),
    "verify sphere": (0.1, 1.5, 20, 10**6),
    "probe conjecture": (1.1, 3.0, 20, 10**5),
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Parsed subcommand and flags; every field is echoed into the report header."""

    command: str
    seed: int = DEFAULT_SEED
    trials: int | None = None
    exact_cap: int = DEFAULT_EXACT_CAP
    t_min: float | None = None
    t_max: float | None = None
    t_steps: int | None = None
    a_steps: int = 99
    fmt: str = "json"
    out: str | None = None
    timing: bool = False
    extra: dict[str, Any] = field(default_factory=dict)

    def grid(self) -> np.ndarray:
        t_min, t_max, steps, _ = _DEFAULTS[self.command]
        t_min = t_min if self.t_min is None else self.t_min
        t_max = t_max if self.t_max is None else self.t_max
        steps = steps if self.t_steps is None else self.t_steps
        if steps < 1 or not t_max >= t_min:
            raise UsageError("need t-steps >= 1 and t-max >= t-min")
        if self.command == "certify ave-tail":
            return np.geomspace(t_min, t_max, steps)
        return np.linspace(t_min, t_max, steps)

    def n_trials(self) -> int:
        return _DEFAULTS[self.command][3] if self.trials is None else self.trials

    def meta(self) -> dict[str, Any]:
        m: dict[str, Any] = {
            "tool": "unitail",
            "version": __version__,
            "command": self.command,
            "seed": self.seed,
            "exact_cap": self.exact_cap,
            "format": self.fmt,
        }
        if self.command in _DEFAULTS:
            g = self.grid()
            m["t_grid"] = {"min": float(g[0]), "max": float(g[-1]), "steps": int(g.size)}
            m["trials"] = self.n_trials()
        if self.command == "certify ave-tail":
            m["a_steps"] = self.a_steps
        m.update({k: _jsonable(v) for k, v in sorted(self.extra.items())})
        return m


# --------------------------------------------------------------------------
# pipelines


def _constants(cfg: RunConfig) -> dict[str, float]:
    return sharp_constants().as_dict()


def _table1(cfg: RunConfig) -> list[list[str]]:
    rep = certify_netting()
    header = ["row"] + [str(k) for k in range(rep.table.shape[1])]
    rows = [header]
    for label, row in zip(TABLE1_ROW_LABELS, rep.table):
        rows.append([label] + [_num(v) for v in row])
    return rows


def _induction_vectors(cfg: RunConfig) -> list[UnitVector]:
    coeffs = cfg.extra.get("coeffs")
    if coeffs:
        return [UnitVector.from_coeffs(coeffs, normalize=True)]
    return [UnitVector.from_coeffs([0.6, 0.8]), milman_vector(3), milman_vector(5),
            random_unit_vector(6, stream(cfg.seed, "cli/induction"))]


def _pipeline(cfg: RunConfig) -> CertReport:
    c = cfg.command
    cap = cfg.exact_cap
    if c == "certify lemma-g":
        return certify_lemma_g()
    if c == "certify ave-tail":
        return certify_lemma_avetail(default_a_grid(cfg.a_steps), cfg.grid())
    if c == "verify main":
        return verifier.sweep_main(cfg.extra["n_max"], cfg.extra["vectors"], cfg.grid(), cfg.seed,
                                   cap=cap, mc_trials=cfg.n_trials())
    if c == "verify bk":
        return verifier.sweep_bk(cfg.extra["n_max"], cfg.extra["vectors"], cfg.grid(), cfg.seed, cap=cap)
    if c == "verify induction":
        rep = CertReport("induction")
        for i, a in enumerate(_induction_vectors(cfg)):
            for t in cfg.grid():
                sub = verifier.inductive_step_check(a, float(t), trials=cfg.n_trials() or None,
                                                    seed=cfg.seed, cap=cap)
                rep.extend(sub, prefix=f"v{i}/n={a.n}/t={t:.4g}/")
        return rep
    if c == "verify self-norm":
        laws = [cfg.extra["law"]] if cfg.extra.get("law") else ["constant", "uniform01", "exponential", "two-point"]
        rep = CertReport("self_norm")
        for law in laws:
            params = tuple(cfg.extra["params"]) if law == "two-point" else ()
            spec = verifier.SelfNormSpec(law, cfg.extra["n"], params)
            rep.extend(verifier.verify_self_normalized(spec, cfg.grid(), cfg.n_trials(), cfg.seed))
        return rep
    if c == "verify sphere":
        rep = CertReport("sphere")
        ts = cfg.grid()
        for i in range(cfg.extra["pairs"]):
            rng = stream(cfg.seed, "cli/sphere", i)
            n = int(rng.integers(1, cfg.extra["n_max"] + 1))
            a = random_unit_vector(n, rng)
            t = float(ts[i % ts.size])
            sub = verifier.sphere_negative_moment_check(a, t, cfg.n_trials(), cfg.seed, cap)
            rep.extend(sub, prefix=f"pair{i}/n={n}/t={t:.4g}/")
        return rep
    if c == "probe conjecture":
        return verifier.conjecture_probe(cfg.grid(), k_max=cfg.extra["k_max"], trials=cfg.n_trials(),
                                         seed=cfg.seed, mc_vectors=cfg.extra["mc_vectors"])
    raise UsageError(f"unknown command {c!r}")


# --------------------------------------------------------------------------
# rendering


def _num(v: float) -> str:
    v = float(v)
    if math.isnan(v) or math.isinf(v):
        return str(v)
    return f"{v:.17g}"


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _csv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerows(rows)
    return buf.getvalue()


def _md(rows: Sequence[Sequence[Any]], title: str = "") -> str:
    head, *body = rows
    lines = [f"# {title}", ""] if title else []
    lines.append("| " + " | ".join(str(h) for h in head) + " |")
    lines.append("|" + "---|" * len(head))
    lines += ["| " + " | ".join(str(c).replace("|", "\\|") for c in r) + " |" for r in body]
    return "\n".join(lines) + "\n"


def _check_rows(rep: CertReport) -> list[list[str]]:
    rows = [["id", "status", "margin", "tolerance", "detail"]]
    rows += [[c.check_id, c.status, _num(c.margin), _num(c.tolerance), c.detail] for c in rep]
    return rows


def render(cfg: RunConfig, result: Any, duration: float | None = None) -> str:
    meta = cfg.meta()
    if duration is not None:
        meta["duration_s"] = duration
    if isinstance(result, CertReport):
        status = result.status
        if cfg.fmt == "json":
            doc = {"meta": meta, "status": status, "report": result.as_dict(),
                   "data": _jsonable(result.data)}
            return json.dumps(doc, indent=2, allow_nan=False) + "\n"
        rows = _check_rows(result)
    elif isinstance(result, dict):
        status = "pass"
        if cfg.fmt == "json":
            return json.dumps({"meta": meta, "status": status, "values": _jsonable(result)},
                              indent=2, allow_nan=False) + "\n"
        rows = [["name", "value"]] + [[k, _num(v)] for k, v in result.items()]
    else:
        status = "pass"
        if cfg.fmt == "json":
            return json.dumps({"meta": meta, "status": status, "table": result}, indent=2) + "\n"
        rows = result
    if cfg.fmt == "csv":
        return _csv(rows)
    header = "\n".join(f"- {k}: {json.dumps(_jsonable(v))}" for k, v in meta.items())
    return _md(rows, f"unitail {cfg.command}: {status}") + "\n" + header + "\n"


# --------------------------------------------------------------------------
# entry points


def run(cfg: RunConfig) -> int:
    """Execute the configured pipeline, write the document, return the exit code."""
    if cfg.fmt not in FORMATS:
        raise UsageError(f"unknown format {cfg.fmt!r}")
    start = time.perf_counter()
    if cfg.command == "constants":
        result: Any = _constants(cfg)
    elif cfg.command == "table1":
        result = _table1(cfg)
    else:
        result = _pipeline(cfg)
    duration = time.perf_counter() - start
    text = render(cfg, result, duration if cfg.timing else None)

    out = cfg.out
    if out is None and os.environ.get(OUT_DIR_ENV):
        out = str(Path(os.environ[OUT_DIR_ENV]) / f"{cfg.command.replace(' ', '_')}.{EXT[cfg.fmt]}")
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    print(f"unitail {cfg.command}: {duration:.3f} s", file=sys.stderr)
    if isinstance(result, CertReport) and not result.passed:
        return 1
    return 0


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--trials", type=_positive_int, help="Monte Carlo trials per estimate")
    common.add_argument("--exact-cap", type=_positive_int, default=DEFAULT_EXACT_CAP,
                        help="largest n handled by the exact engine")
    common.add_argument("--t-min", type=float)
    common.add_argument("--t-max", type=float)
    common.add_argument("--t-steps", type=_positive_int)
    common.add_argument("--format", dest="fmt", choices=FORMATS, default="json")
    common.add_argument("--out", help=f"output path ('-' for stdout; default ${OUT_DIR_ENV}/<command> or stdout)")
    common.add_argument("--timing", action="store_true", help="embed the wall-clock duration in the document")

    p = argparse.ArgumentParser(prog="unitail", description="Gaussian tail domination for weighted uniform sums.")
    p.add_argument("--version", action="version", version=f"unitail {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    sub.add_parser("constants", parents=[common], help="C*, t0 and t1")
    sub.add_parser("table1", parents=[common], help="netting table of 10^3 (tangent - g_j)")

    cert = sub.add_parser("certify", help="certify a lemma").add_subparsers(dest="what", required=True)
    cert.add_parser("lemma-g", parents=[common])
    ave = cert.add_parser("ave-tail", parents=[common])
    ave.add_argument("--a-steps", type=_positive_int, default=99)

    ver = sub.add_parser("verify", help="verify an inequality").add_subparsers(dest="what", required=True)
    for name in ("main", "bk"):
        s = ver.add_parser(name, parents=[common])
        s.add_argument("--n-max", type=_positive_int, default=8)
        s.add_argument("--vectors", type=_positive_int, default=1000, help="random vectors per n")
    ind = ver.add_parser("induction", parents=[common])
    ind.add_argument("--coeffs", type=float, nargs="+", help="vector to test (normalised)")
    sn = ver.add_parser("self-norm", parents=[common])
    sn.add_argument("--law", choices=("constant", "uniform01", "exponential", "two-point"))
    sn.add_argument("--n", type=_positive_int, default=10)
    sn.add_argument("--params", type=float, nargs=3, default=(0.0, 1.0, 0.5), metavar=("R1", "R2", "Q"))
    sph = ver.add_parser("sphere", parents=[common])
    sph.add_argument("--pairs", type=_positive_int, default=20)
    sph.add_argument("--n-max", type=_positive_int, default=8)

    probe = sub.add_parser("probe", help="informational probes").add_subparsers(dest="what", required=True)
    conj = probe.add_parser("conjecture", parents=[common])
    conj.add_argument("--k-max", type=_positive_int, default=12)
    conj.add_argument("--mc-vectors", type=int, default=0)
    return p


_BASE = {"cmd", "what", "seed", "trials", "exact_cap", "t_min", "t_max", "t_steps", "fmt", "out",
         "timing", "a_steps"}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    command = ns.cmd if getattr(ns, "what", None) is None else f"{ns.cmd} {ns.what}"
    extra = {k: v for k, v in vars(ns).items() if k not in _BASE}
    return RunConfig(command=command, seed=ns.seed, trials=ns.trials, exact_cap=ns.exact_cap,
                     t_min=ns.t_min, t_max=ns.t_max, t_steps=ns.t_steps,
                     a_steps=getattr(ns, "a_steps", 99), fmt=ns.fmt, out=ns.out,
                     timing=ns.timing, extra=extra)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run(config_from_args(ns))
    except (UsageError, ValueError) as exc:
        print(f"unitail: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
