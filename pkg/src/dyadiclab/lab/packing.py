"""Carleson packing of products of fractional averages over a sparse family."""

from __future__ import annotations

import math
import time
from typing import Sequence

import numpy as np

from ..dyadic import Cube, contains
from ..errors import BracketViolation, ExponentError
from ..gridfunc import GridFunction
from ..operators import product_averages
from .report import ExperimentReport

__all__ = ["default_thetas", "packing_budget", "carleson_packing_check"]


def default_thetas(alphas: Sequence[float]) -> list[float]:
    """``theta_j = alpha_j + (1 - sum alpha) / m``."""
    slack = 1.0 - sum(alphas)
    return [a + slack / len(alphas) for a in alphas]


def packing_budget(alphas: Sequence[float], thetas: Sequence[float]) -> float:
    """``prod_j (1 / (1 - alpha_j / theta_j))^theta_j``."""
    return float(np.prod([(1.0 / (1.0 - a / t)) ** t for a, t in zip(alphas, thetas)]))


def carleson_packing_check(S, gs: Sequence[GridFunction], alphas: Sequence[float], Q: Cube,
                           eta: float | None = None, thetas: Sequence[float] | None = None,
                           strict: bool = True) -> ExperimentReport:
    """``sum_{Q' in S, Q' c Q} prod <g_j>_Q'^alpha_j |Q'|`` against ``prod <g_j>_Q^alpha_j |Q|``.

    Chaining sparseness, Hoelder with the ``theta_j`` and the weak (1,1)
    bound of the dyadic maximal function (constant 1) through Kolmogorov's
    inequality gives the bound with constant ``packing_budget / eta``
    exactly; ``fitted`` is the observed ``lhs / (budget rhs)``.
    """
    start = time.perf_counter()
    alphas = [float(a) for a in alphas]
    if len(alphas) != len(gs):
        raise ExponentError("one exponent per function")
    if any(a < 0 for a in alphas) or sum(alphas) >= 1:
        raise ExponentError(f"need alpha_j >= 0 with sum < 1, got {alphas}")
    thetas = default_thetas(alphas) if thetas is None else [float(t) for t in thetas]
    if abs(sum(thetas) - 1) > 1e-12 or any(t <= a for a, t in zip(alphas, thetas)):
        raise ExponentError("need theta_j > alpha_j with sum theta_j = 1")
    eta = getattr(S, "eta", None) if eta is None else eta
    if eta is None:
        raise ValueError("the sparseness constant is needed (pass eta or a SparseCollection)")
    domain = gs[0].domain
    tables = [product_averages([g]) for g in gs]

    def term(c: Cube) -> float:
        return float(np.prod([t[c.level][c.index] ** a for t, a in zip(tables, alphas)])) * float(c.volume)

    cubes = [c for c in getattr(S, "cubes", S) if contains(Q, c)]
    lhs = sum(term(c) for c in cubes)
    rhs = term(Q)
    k = packing_budget(alphas, thetas)
    fitted = lhs / (k * rhs) if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    passed = fitted <= (1.0 / eta) * (1 + 1e-12)
    if strict and not passed:
        raise BracketViolation(f"packing ratio {fitted} exceeds 1/eta = {1 / eta}")
    return ExperimentReport(
        name="packing",
        instance={"d": domain.dim, "L": domain.max_level, "Q": str(Q), "alphas": alphas,
                  "thetas": thetas, "eta": eta},
        rows=[{"cubes": len(cubes), "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else math.inf,
               "theta_budget": k, "fitted": fitted, "bound": 1.0 / eta}],
        lhs=lhs, rhs=rhs, ratio=lhs / rhs if rhs > 0 else math.inf, fitted=fitted, budget=1.0 / eta,
        passed=bool(passed), runtime=time.perf_counter() - start)
