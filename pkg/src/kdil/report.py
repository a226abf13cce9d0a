"""Residual reports shared by all verifiers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from . import errors

HARD = "hard"
WARNING = "warning"


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    residual: float
    threshold: float
    tier: str = HARD
    # for checks where larger is better (e.g. a minimum eigenvalue), pass means residual >= threshold
    lower_bound: bool = False
    error: type[errors.KdilError] = errors.VerificationFailed
    witness: Any = None

    @property
    def passed(self) -> bool:
        if not (self.residual == self.residual):  # NaN
            return False
        if self.lower_bound:
            return self.residual >= self.threshold
        return self.residual <= self.threshold

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        return "fail" if self.tier == HARD else "warn"

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "anchor": self.anchor,
            "residual": float(self.residual),
            "threshold": float(self.threshold),
            "tier": self.tier,
            "status": self.status,
        }
        if self.witness is not None:
            d["witness"] = _jsonable(self.witness)
        return d


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (list, tuple)):
        return [_jsonable(o) for o in obj]
    if hasattr(obj, "item"):
        return obj.item()
    return obj


@dataclass
class Report:
    """An ordered list of checks; the overall verdict ignores warning-tier checks."""

    checks: list[Check] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            if prefix:
                c = Check(prefix + c.name, c.anchor, c.residual, c.threshold, c.tier,
                          c.lower_bound, c.error, c.witness)
            self.checks.append(c)
        for k, v in other.info.items():
            self.info[prefix + k] = v

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.tier == HARD)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.tier == HARD and not c.passed]

    @property
    def warnings(self) -> list[Check]:
        return [c for c in self.checks if c.tier == WARNING and not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def residuals(self) -> dict[str, float]:
        return {c.name: float(c.residual) for c in self.checks}

    def require(self) -> "Report":
        """Raise the error attached to the first failed hard check."""
        for c in self.failures:
            raise c.error(
                f"{c.name} failed: residual {c.residual:.3e} vs threshold {c.threshold:.3e}",
                residual=float(c.residual),
                witness=c.witness,
            )
        return self

    def to_dict(self) -> dict:
        d = {
            "status": self.status,
            "checks": [c.to_dict() for c in self.checks],
            "warnings": [c.name for c in self.warnings],
        }
        if self.info:
            d["info"] = {k: _jsonable(v) for k, v in self.info.items()}
        return d


def emit_report(report: Report, fmt: str = "json") -> str:
    """Serialize a report; field order is fixed so output is reproducible."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"overall: {report.status.upper()}"]
    width = max((len(c.name) for c in report.checks), default=0)
    for c in report.checks:
        op = ">=" if c.lower_bound else "<="
        lines.append(
            f"  [{c.status:4}] {c.name:<{width}}  {c.residual:.3e} {op} {c.threshold:.3e}   {c.anchor}"
        )
    warns = report.warnings
    if warns:
        lines.append("warnings:")
        lines.extend(f"  {c.name}: {c.residual:.3e}" for c in warns)
    return "\n".join(lines) + "\n"
