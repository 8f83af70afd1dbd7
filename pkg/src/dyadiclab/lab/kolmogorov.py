"""Two-sided comparison of weak norms with truncated integrals over sets.

Sets ``E`` are fractional masks over the finest cells: a cell may be only
partly inside ``E``, which is legitimate since ``f`` is constant on cells
and the cell itself is a continuum.
"""

from __future__ import annotations

import math
import time
from typing import Sequence

import numpy as np

from ..errors import BracketViolation, ExponentError
from ..gridfunc import GridFunction, _cell_masses, weak_norm_measure
from .report import ExperimentReport

__all__ = ["kolmogorov_optimal_c", "kolmogorov_variant_c", "kolmogorov_check", "blowup_factor"]

_RTOL = 1e-12


def blowup_factor(p: float, theta: float) -> float:
    """``(p / (p - theta))**(1/theta)``, the gap between the two brackets."""
    return (p / (p - theta)) ** (1.0 / theta)


def _sorted_levels(f: GridFunction, mu: GridFunction | None):
    vals = np.abs(f.values).reshape(-1)
    masses = _cell_masses(f, mu).reshape(-1)
    keep = masses > 0
    vals, masses = vals[keep], masses[keep]
    order = np.argsort(-vals, kind="stable")
    return vals[order], masses[order]


def _set_ratio(vals, masses, frac, p, theta) -> float:
    """``(p - theta)/p * int_E |f|^theta / mu(E)^(1 - theta/p)`` for a fractional set."""
    mass = float(np.sum(frac * masses))
    if mass <= 0:
        return 0.0
    integral = float(np.sum(frac * masses * vals ** theta))
    return (p - theta) / p * integral / mass ** (1.0 - theta / p)


def kolmogorov_optimal_c(f: GridFunction, p: float, theta: float,
                         mu: GridFunction | None = None) -> float:
    """Smallest ``C`` with ``int_E |f|^theta <= p/(p-theta) C^theta mu(E)^(1-theta/p)`` for all ``E``.

    For a fixed measure ``t`` the best ``E`` is the top of the decreasing
    rearrangement, and between two consecutive values of ``|f|`` the ratio
    ``(a + b t) / t^c`` with ``0 < c < 1`` has no interior maximum, so the
    supremum is taken at the ends of the superlevel sets.
    """
    if not 0 < theta < p:
        raise ExponentError(f"theta must lie in (0, p), got {theta}")
    vals, masses = _sorted_levels(f, mu)
    if vals.size == 0:
        return 0.0
    t = np.cumsum(masses)
    acc = np.cumsum(masses * vals ** theta)
    last = np.append(vals[1:] != vals[:-1], True)
    ratios = (p - theta) / p * acc[last] / t[last] ** (1.0 - theta / p)
    return float(ratios.max()) ** (1.0 / theta)


def _smallest_half(vals, masses, frac) -> float:
    """``int_{E'} |f|`` with ``E'`` the half of ``E`` (by measure) where ``|f|`` is smallest.

    ``vals`` is sorted decreasingly, so the largest cells are dropped first.
    """
    m = frac * masses
    half = 0.5 * float(m.sum())
    dropped = np.cumsum(m) - m
    keep = np.clip(m - np.clip(half - dropped, 0.0, None), 0.0, None)
    return float(np.sum(keep * vals))


def kolmogorov_variant_c(f: GridFunction, p: float, mu: GridFunction | None = None,
                         sets: Sequence[np.ndarray] = ()) -> float:
    """Best ``C'`` over the superlevel sets and the supplied fractional sets.

    ``sets`` are masks over the cells of ``f`` with entries in ``[0, 1]``.
    Including the superlevel sets is what makes ``||f|| <= 2 C'`` exact.
    """
    vals, masses = _sorted_levels(f, mu)
    if vals.size == 0:
        return 0.0
    keep = _cell_masses(f, mu).reshape(-1) > 0
    order = np.argsort(-np.abs(f.values).reshape(-1)[keep], kind="stable")
    cands = []
    last = np.flatnonzero(np.append(vals[1:] != vals[:-1], True))
    for k in last:
        frac = np.zeros(vals.size)
        frac[: k + 1] = 1.0
        cands.append(frac)
    for s in sets:
        cands.append(np.asarray(s, dtype=float).reshape(-1)[keep][order])
    best = 0.0
    for frac in cands:
        mass = float(np.sum(frac * masses))
        if mass > 0:
            best = max(best, _smallest_half(vals, masses, frac) / mass ** (1.0 - 1.0 / p))
    return best


def _random_sets(shape, rng, count: int) -> list[np.ndarray]:
    out = []
    for k in range(count):
        if k % 2:
            out.append(rng.random(shape))
        else:
            out.append((rng.random(shape) < rng.uniform(0.05, 0.95)).astype(float))
    return out


def kolmogorov_check(f: GridFunction, p: float, mu: GridFunction | None = None,
                     theta_grid: Sequence[float] | None = None, E_samples: int = 16,
                     seed: int = 0, strict: bool = True) -> ExperimentReport:
    """Check both bracket pairs for one function.

    The optimal ``C`` per ``theta`` is exact; sampled sets only give lower
    bounds for it and are reported alongside.  With ``strict`` a violated
    bracket raises :class:`BracketViolation`.
    """
    start = time.perf_counter()
    if not 0 < p < math.inf:
        raise ExponentError("p must lie in (0, inf)")
    thetas = [p / 4, p / 2, 3 * p / 4] if theta_grid is None else list(theta_grid)
    for th in thetas:
        if not 0 < th < p:
            raise ExponentError(f"theta must lie in (0, p), got {th}")
    rng = np.random.default_rng(seed)
    sets = _random_sets(f.domain.shape, rng, E_samples)
    weak = weak_norm_measure(f, p, mu)
    vals, masses = _sorted_levels(f, mu)
    keep = _cell_masses(f, mu).reshape(-1) > 0
    order = np.argsort(-np.abs(f.values).reshape(-1)[keep], kind="stable")
    rows = []
    ok = True
    for th in sorted(thetas):
        c = kolmogorov_optimal_c(f, p, th, mu)
        sampled = max((_set_ratio(vals, masses, s.reshape(-1)[keep][order], p, th) for s in sets),
                      default=0.0) ** (1.0 / th)
        lower, upper = c, blowup_factor(p, th) * c
        row_ok = (lower <= weak * (1 + _RTOL) and weak <= upper * (1 + _RTOL)
                  and sampled <= c * (1 + _RTOL))
        ok &= row_ok
        rows.append({"variant": "theta", "theta": th, "C": c, "C_sampled": sampled,
                     "weak_norm": weak, "lower": lower, "upper": upper, "ok": row_ok})
    cv = kolmogorov_variant_c(f, p, mu, sets)
    lower, upper = 2.0 ** (-1.0 / p) * cv, 2.0 * cv
    row_ok = lower <= weak * (1 + _RTOL) and weak <= upper * (1 + _RTOL)
    ok &= row_ok
    rows.append({"variant": "half-set", "theta": 1.0, "C": cv, "C_sampled": cv,
                 "weak_norm": weak, "lower": lower, "upper": upper, "ok": row_ok})
    report = ExperimentReport(
        name="kolmogorov",
        instance={"d": f.domain.dim, "L": f.domain.max_level, "p": p, "seed": seed},
        rows=rows, lhs=weak, rhs=max(r["upper"] for r in rows),
        ratio=max(r["weak_norm"] / r["upper"] for r in rows if r["upper"] > 0) if weak > 0 else 0.0,
        fitted=1.0, budget=1.0, passed=ok, runtime=time.perf_counter() - start)
    if strict and not ok:
        bad = next(r for r in rows if not r["ok"])
        raise BracketViolation(f"Kolmogorov bracket fails: {bad}")
    return report
