"""Pass/fail rows shared by all verification reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    value: float
    threshold: float | None
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "value": _num(self.value), "threshold": _num(self.threshold),
                "passed": self.passed, "note": self.note}


@dataclass
class Report:
    """Ordered list of checks plus free-form scalar data."""

    title: str
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    applicable: bool = True

    def add(self, name: str, value: float, threshold: float | None = None, passed: bool | None = None,
            note: str = "") -> Check:
        if passed is None:
            passed = threshold is None or (value <= threshold)
        c = Check(name, float(value), threshold, bool(passed), note)
        self.checks.append(c)
        return c

    def skip(self, name: str, note: str) -> None:
        self.checks.append(Check(name, math.nan, None, True, "skipped: " + note))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"title": self.title, "applicable": self.applicable, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks], "data": jsonable(self.data)}


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def jsonable(obj):
    """Plain JSON types; NaN becomes null and infinities become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return jsonable(obj.tolist())
    if isinstance(obj, float):
        return _num(obj)
    return obj
