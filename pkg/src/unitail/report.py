"""Certification reports: an ordered list of named numeric checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Literal

Status = Literal["pass", "fail", "warn"]


@dataclass(frozen=True)
class Check:
    check_id: str
    status: Status
    margin: float
    tolerance: float = 0.0
    detail: str = ""

    def as_dict(self) -> dict[str, Any]:
        return {
            "id": self.check_id,
            "status": self.status,
            "margin": _json_float(self.margin),
            "tolerance": _json_float(self.tolerance),
            "detail": self.detail,
        }


def _json_float(v: float) -> float | str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass
class CertReport:
    """Aggregate of checks; fails iff any check fails.

    ``data`` carries auxiliary numeric output (tables, sweep extrema) that
    callers may want besides the pass/fail lines.
    """

    name: str
    checks: list[Check] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)

    def add(self, check_id: str, passed: bool, margin: float, tolerance: float = 0.0,
            detail: str = "", warn_only: bool = False) -> Check:
        if passed:
            status: Status = "pass"
        else:
            status = "warn" if warn_only else "fail"
        chk = Check(check_id, status, float(margin), float(tolerance), detail)
        self.checks.append(chk)
        return chk

    def extend(self, other: "CertReport", prefix: str | None = None) -> None:
        pre = f"{other.name}/" if prefix is None else prefix
        for c in other.checks:
            self.checks.append(Check(pre + c.check_id, c.status, c.margin, c.tolerance, c.detail))

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    @property
    def status(self) -> Status:
        if not self.passed:
            return "fail"
        return "warn" if any(c.status == "warn" for c in self.checks) else "pass"

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.status == "fail"]

    def __iter__(self) -> Iterator[Check]:
        return iter(self.checks)

    def __getitem__(self, check_id: str) -> Check:
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def min_margin(self) -> float:
        return min((c.margin for c in self.checks), default=math.inf)

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "status": self.status,
            "checks": [c.as_dict() for c in self.checks],
        }

    def summary(self) -> str:
        lines = [f"[{self.status.upper()}] {self.name}"]
        for c in self.checks:
            lines.append(f"  {c.status:4s} {c.check_id}  margin={c.margin:.6g}  {c.detail}".rstrip())
        return "\n".join(lines)
