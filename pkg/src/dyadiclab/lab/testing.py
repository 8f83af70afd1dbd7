"""Local testing constant of a sparse operator on one cube of the collection."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..constants import WeightTuple
from ..dyadic import Cube, contains
from ..errors import ExponentError
from ..gridfunc import GridFunction, conjugate
from ..operators import sparse_operator
from .report import ExperimentReport

__all__ = ["TestingResult", "testing_constant", "testing_experiment"]


@dataclass(frozen=True)
class TestingResult:
    """Lower bound for the testing supremum and the functions attaining it.

    For ``m = 1`` the value is exact; ``closed_form`` repeats it from the
    dual formula as a second route.
    """

    value: float
    functions: tuple
    trace: tuple
    converged: bool
    iterations: int
    strategy: str
    closed_form: float = math.nan
    notes: list = field(default_factory=list)


def _subcollection(S, Q0: Cube) -> list[Cube]:
    cubes = list(getattr(S, "cubes", S))
    if Q0 not in set(cubes):
        raise ValueError("Q0 must belong to the collection")
    return [c for c in cubes if contains(Q0, c)]


def _normalise(f: np.ndarray, w: np.ndarray, p: float, cell: float) -> np.ndarray:
    norm = float(np.sum((f * w) ** p) * cell) ** (1.0 / p)
    return f / norm if norm > 0 else f


def _value(sub, fs, v, mask, cell, pp) -> float:
    A = sparse_operator(sub, fs).values
    return float(np.sum(A * v.values * mask) * cell) * float(np.sum(v.values * mask) * cell) ** (-1.0 / pp)


def testing_constant(S, weights: WeightTuple, Q0: Cube, strategy: str = "auto",
                     max_iter: int = 200, tol: float = 1e-12) -> TestingResult:
    """``sup v(Q0)^(-1/p') int_Q0 A_S(Q0)(f) v`` over ``||f_j w_j||_{L^p_j(Q0)} = 1``.

    ``strategy`` is ``closed-form`` (``m = 1`` only), ``alternating`` or
    ``auto``.  The alternating scheme fixes all but ``f_k`` and takes the
    exact maximiser in ``f_k``: with ``G_k = A_S(Q0)(f_1, .., v, .., f_m)``
    the best choice is ``f_k w_k`` proportional to ``(G_k / w_k)^(p_k' - 1)``.
    The value never decreases, so every iterate is a certified lower bound.
    """
    pv = weights.pvec
    if not pv.interior():
        raise ExponentError("the testing constant needs p_j in (1, inf) and p > 1")
    if strategy == "auto":
        strategy = "closed-form" if weights.m == 1 else "alternating"
    if strategy not in ("closed-form", "alternating"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "closed-form" and weights.m != 1:
        raise ValueError("the closed form only exists for m = 1")
    domain = weights.domain
    cell = domain.cell_volume
    sub = _subcollection(S, Q0)
    mask = np.zeros(domain.shape)
    mask[Q0.cell_slices(domain)] = 1.0
    v = weights.v
    vQ = float(np.sum(v.values * mask) * cell)
    pp = pv.p_prime
    ws = [wj.values for wj in weights.weights]

    def best_response(fs, k):
        others = list(fs)
        others[k] = GridFunction(domain, v.values * mask)
        G = sparse_operator(sub, others).values * mask
        qk = conjugate(pv.ps[k])
        dual = float(np.sum((G / ws[k]) ** qk) * cell) ** (1.0 / qk)
        h = (G / ws[k]) ** (qk - 1.0)
        return _normalise(h / ws[k], ws[k], pv.ps[k], cell), dual * vQ ** (-1.0 / pp)

    fs = [GridFunction(domain, _normalise(mask.copy(), w, p, cell)) for w, p in zip(ws, pv.ps)]
    if strategy == "closed-form":
        f, value = best_response(fs, 0)
        direct = _value(sub, [GridFunction(domain, f)], v, mask, cell, pp)
        return TestingResult(value, (GridFunction(domain, f),), (value,), True, 1, strategy, direct)
    trace = [_value(sub, fs, v, mask, cell, pp)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        for k in range(weights.m):
            f, _ = best_response(fs, k)
            fs[k] = GridFunction(domain, f)
        trace.append(_value(sub, fs, v, mask, cell, pp))
        if trace[-1] - trace[-2] <= tol * trace[-1]:
            converged = True
            break
    best = int(np.argmax(trace))
    notes = [] if converged else [f"no fixed point after {max_iter} sweeps"]
    return TestingResult(trace[best], tuple(fs), tuple(trace), converged, it, strategy, notes=notes)


def testing_experiment(S, weights: WeightTuple, roots=None, max_iter: int = 200) -> ExperimentReport:
    """Testing constant for every ``Q0`` (or the given roots) of the collection.

    Passes when every run converged, every trace is non-decreasing and, for
    ``m = 1``, the dual formula agrees with direct evaluation of the
    maximiser to 1e-10.
    """
    start = time.perf_counter()
    cubes = list(getattr(S, "cubes", S))
    roots = cubes if roots is None else list(roots)
    rows = []
    ok = True
    for Q0 in roots:
        res = testing_constant(cubes, weights, Q0, max_iter=max_iter)
        monotone = all(b >= a * (1 - 1e-12) for a, b in zip(res.trace, res.trace[1:]))
        agree = True
        if weights.m == 1:
            agree = abs(res.value - res.closed_form) <= 1e-10 * max(res.value, 1e-300)
        row_ok = res.converged and monotone and agree
        ok &= row_ok
        rows.append({"Q0": str(Q0), "M": res.value, "strategy": res.strategy,
                     "iterations": res.iterations, "converged": res.converged,
                     "monotone": monotone, "dual_route": res.closed_form, "ok": row_ok})
    best = max((r["M"] for r in rows), default=0.0)
    d = weights.domain
    return ExperimentReport(
        name="testing",
        instance={"d": d.dim, "L": d.max_level, "pvec": str(weights.pvec), "cubes": len(cubes)},
        rows=rows, lhs=best, rhs=math.nan, ratio=math.nan, fitted=best, budget=math.nan,
        passed=ok, runtime=time.perf_counter() - start)
