"""Experiment reports, CSV output and the small fits used by the lab."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Sequence

import numpy as np

__all__ = ["ExperimentReport", "LinearFit", "linear_fit", "spread"]


@dataclass
class ExperimentReport:
    """Outcome of one experiment.

    ``rows`` are per-instance dictionaries written as CSV; ``fitted`` is the
    fitted constant and ``budget`` the bound it is held to.
    """

    name: str
    instance: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    lhs: float = math.nan
    rhs: float = math.nan
    ratio: float = math.nan
    fitted: float = math.nan
    budget: float = math.nan
    passed: bool = False
    runtime: float = 0.0
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} {_fmt(self.fitted)} {_fmt(self.budget)}"

    def columns(self) -> list[str]:
        cols: list[str] = []
        for row in self.rows:
            for k in row:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_csv(self, timestamp: bool = True) -> str:
        buf = io.StringIO()
        if timestamp:
            buf.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
        for k in sorted(self.instance):
            buf.write(f"# {k}={_fmt(self.instance[k])}\n")
        cols = self.columns()
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in cols})
        return buf.getvalue()


def _fmt(x: Any) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (list, tuple)):
        return " ".join(_fmt(v) for v in x)
    return str(x)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float
    n: int


def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Least-squares line with coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        return LinearFit(math.nan, math.nan, math.nan, len(x))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2, len(x))


def spread(values: Sequence[float]) -> float:
    """``max / min`` of positive values (1 for a single value)."""
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    if len(v) == 0 or v.min() <= 0:
        return math.inf
    return float(v.max() / v.min())
