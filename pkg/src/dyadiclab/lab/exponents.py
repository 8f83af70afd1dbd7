"""Exponent bookkeeping for the weak-type bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..constants import WeightTuple, fw_constant
from ..gridfunc import INF, ExponentTuple, conjugate

__all__ = ["ExponentReport", "alpha_beta", "improvement_region", "sharp_fw_factor", "ratio"]


def ratio(a: float, b: float) -> float:
    """``a / b`` with ``inf / inf`` read as 1 (equal limits) and ``x / inf = 0``."""
    if a == INF and b == INF:
        return 1.0
    if b == INF:
        return 0.0
    if a == INF:
        return INF
    return a / b


@dataclass(frozen=True)
class ExponentReport:
    pvec: ExponentTuple
    alpha: float
    beta: float
    improvement_region: bool
    appendix_gamma: float
    appendix_delta: float
    c_w: float = math.nan

    @property
    def best(self) -> float:
        return min(self.alpha, self.beta)


def alpha_beta(pvec: ExponentTuple, weights: WeightTuple | None = None, scope=None) -> ExponentReport:
    if not pvec.all_at_least_one():
        raise ValueError("exponents must lie in [1, inf]")
    p = pvec.p
    q = pvec.conjugates
    m = pvec.m
    best = -INF
    for k in range(m):
        cands = [ratio(q[j], q[k]) for j in range(m) if j != k] + [ratio(p, q[k])]
        best = max(best, min(cands))
    alpha = 1.0 + best
    beta = max([p, *q])
    gamma = min(ratio(qj, p) for qj in q)
    delta = max(ratio(qj, pj) for qj, pj in zip(q, pvec.ps))
    cw = sharp_fw_factor(weights, scope) if weights is not None and pvec.interior() else math.nan
    return ExponentReport(pvec, alpha, beta, improvement_region(pvec), gamma, delta, cw)


def improvement_region(pvec: ExponentTuple) -> bool:
    """Whether ``1/m <= p <= 1 / (sqrt(m + 1/4) - 1/2)``."""
    m = pvec.m
    p = pvec.p
    return 1.0 / m <= p <= 1.0 / (math.sqrt(m + 0.25) - 0.5)


def sharp_fw_factor(weights: WeightTuple, scope=None) -> float:
    """``max_k min({[v_j]_FW : j != k} + {[w^p]_FW})^(1/p_k')`` with ``v_j = w_j^(-p_j')``."""
    pv = weights.pvec
    if not pv.interior():
        raise ValueError("the sharp factor needs p_j in (1, inf) and p > 1")
    fw_v = [fw_constant(weights.v_j(j), scope).value for j in range(weights.m)]
    fw_w = fw_constant(weights.v, scope).value
    out = 0.0
    for k in range(weights.m):
        pool = [fw_v[j] for j in range(weights.m) if j != k] + [fw_w]
        out = max(out, min(pool) ** (1.0 / conjugate(pv.ps[k])))
    return out
