"""Comparisons between the product Fujii-Wilson constant and the A_p characteristic."""

from __future__ import annotations

import math
import time

from ..constants import WeightTuple, fw_constant, fw_prod_constant, ml_fw_constant, multilinear_ap
from ..errors import ExponentError
from ..gridfunc import INF
from .exponents import alpha_beta
from .report import ExperimentReport

__all__ = ["appendix_check"]

_RTOL = 1e-12


def appendix_check(weights: WeightTuple, scope=None) -> ExperimentReport:
    """Exact and fitted comparisons, all in one cube scope.

    Exact (pass/fail): ``min_j [v_j]_FW^(1/p) <= [w]_p^gamma`` with
    ``gamma = min_j p_j'/p``, and ``FW_prod <= [v]_FW`` (Hoelder on the
    denominators).  Fitted: ``FW_prod / min_j [v_j]_FW^(1/p)``,
    ``[v]_FW / [w]_p^delta`` and ``FW_prod / [w]_p^min(gamma, delta)``.
    """
    start = time.perf_counter()
    pv = weights.pvec
    if any(pj <= 1 for pj in pv.ps) or not pv.p > 1.0 / pv.m:
        raise ExponentError("the comparison needs p_j in (1, inf] and p > 1/m")
    ap = multilinear_ap(weights, scope=scope).value
    fw_v = [fw_constant(weights.v_j(j), scope).value for j in range(weights.m)]
    vs = [weights.v_j(j) for j in range(weights.m)]
    prod = fw_prod_constant(weights, scope=scope).value
    ml = ml_fw_constant(vs, pv, scope=scope).value
    rep = alpha_beta(pv)
    gamma, delta = rep.appendix_gamma, rep.appendix_delta
    left = min(fw_v) ** (1.0 / pv.p)
    right = ap ** gamma
    holds = left <= right * (1 + _RTOL)
    holder = prod <= ml * (1 + _RTOL)
    best = min(gamma, delta)
    row = {"ap": ap, "min_fw_v": min(fw_v), "lhs": left, "rhs": right, "exact_holds": holds,
           "fw_prod": prod, "ml_fw_v": ml, "holder_holds": holder,
           "gamma": gamma, "delta": delta,
           "fit_prod_over_fw": prod / left,
           "fit_ml_over_ap_delta": ml / ap ** delta if delta < INF else math.nan,
           "fit_prod_over_ap_best": prod / ap ** best}
    d = weights.domain
    return ExperimentReport(
        name="appendix", instance={"d": d.dim, "L": d.max_level, "pvec": str(pv),
                                   "scope": "dyadic" if scope is None else str(scope)},
        rows=[row], lhs=left, rhs=right, ratio=left / right, fitted=row["fit_prod_over_ap_best"],
        budget=1.0, passed=bool(holds and holder), runtime=time.perf_counter() - start)
