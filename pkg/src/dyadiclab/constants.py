"""Weight characteristics computed as exact suprema over a cube scope.

Every function returns a :class:`Characteristic` carrying the value and the
cube where it is attained (first maximiser in scope order).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .dyadic import Cube, LatticeCube
from .errors import ExponentError
from .gridfunc import INF, ExponentTuple, GridFunction, conjugate
from .scope import DYADIC, CubeScope

__all__ = [
    "Characteristic",
    "WeightTuple",
    "ap_constant",
    "multilinear_ap",
    "fw_constant",
    "ml_fw_constant",
    "fw_prod_constant",
    "reverse_holder_check",
    "ReverseHolderReport",
]


class Characteristic(NamedTuple):
    value: float
    cube: Cube | LatticeCube
    scope: str


def _scope(scope) -> CubeScope:
    if scope is None:
        return DYADIC
    return scope if isinstance(scope, CubeScope) else CubeScope(scope)


@dataclass(frozen=True)
class WeightTuple:
    """Weights ``w_1..w_m`` with the products used by the multilinear theory."""

    weights: tuple[GridFunction, ...]
    pvec: ExponentTuple
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        ws = tuple(self.weights)
        if len(ws) != self.pvec.m:
            raise ExponentError(f"{len(ws)} weights for {self.pvec.m} exponents")
        for w in ws:
            if not w.is_weight:
                raise ValueError("weights must be strictly positive and finite")
            if w.domain != ws[0].domain:
                raise ValueError("weights live on different domains")
        object.__setattr__(self, "weights", ws)

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def domain(self):
        return self.weights[0].domain

    @property
    def w(self) -> GridFunction:
        """``w = prod_j w_j``."""
        if "w" not in self._cache:
            vals = np.prod([wj.values for wj in self.weights], axis=0)
            self._cache["w"] = GridFunction(self.domain, vals)
        return self._cache["w"]

    @property
    def v(self) -> GridFunction:
        """``v = w**p``."""
        return self.w.power(self.pvec.p)

    def v_j(self, j: int) -> GridFunction:
        """``v_j = w_j**(-p_j')``; ``p_j = 1`` has no such weight."""
        pj = self.pvec.ps[j]
        if pj <= 1:
            raise ExponentError(f"v_{j + 1} needs p_{j + 1} > 1")
        return self.weights[j].power(-conjugate(pj))


def _root_mean(avgs: list[np.ndarray], r: float) -> list[np.ndarray]:
    return [a ** (1.0 / r) for a in avgs]


def ap_constant(w: GridFunction, p: float, scope=None) -> Characteristic:
    """``sup_Q <w>_Q <w^(1-p')>_Q^(p-1)``, or ``<w>_Q sup_Q w^-1`` when ``p = 1``."""
    sc = _scope(scope)
    if p < 1:
        raise ExponentError("A_p needs p >= 1")
    wavg = sc.averages(w)
    if p == 1:
        dual = sc.maxima(w.power(-1.0))
    elif p == INF:
        raise ExponentError("A_infinity is not computed here, use fw_constant")
    else:
        dual = [a ** (p - 1) for a in sc.averages(w, 1.0 - conjugate(p))]
    tables = [a * b for a, b in zip(wavg, dual)]
    value, cube = sc.argmax(w.domain, tables)
    return Characteristic(value, cube, str(sc))


def _p_means(f: GridFunction, r: float, sc: CubeScope) -> list[np.ndarray]:
    """``<f>_{r,Q}`` for every cube, ``r`` in ``(0, inf]``."""
    if r == INF:
        return sc.maxima(f)
    return _root_mean(sc.averages(f, r), r)


def multilinear_ap(weights, pvec: ExponentTuple | None = None,
                   omega: GridFunction | None = None, scope=None) -> Characteristic:
    """``sup_Q <omega>_{p,Q} prod_j <w_j^-1>_{p_j',Q}``; ``omega`` defaults to ``w``."""
    wt = weights if isinstance(weights, WeightTuple) else WeightTuple(tuple(weights), pvec)
    sc = _scope(scope)
    pv = wt.pvec
    if not pv.all_at_least_one():
        raise ExponentError("multilinear A_p needs every p_j >= 1")
    om = wt.w if omega is None else omega
    tables = _p_means(om, pv.p, sc)
    for wj, pj in zip(wt.weights, pv.ps):
        q = conjugate(pj)
        tables = [t * s for t, s in zip(tables, _p_means(wj.power(-1.0), q, sc))]
    value, cube = sc.argmax(wt.domain, tables)
    return Characteristic(value, cube, str(sc))


def fw_constant(w: GridFunction, scope=None) -> Characteristic:
    """``sup_Q w(Q)^-1 int_Q M(w 1_Q)``."""
    sc = _scope(scope)
    mass = sc.sums(w)
    avgs = [t / v for t, v in zip(mass, sc.volumes(w.domain))]
    local = sc.local_sup_integrals(w.domain, avgs)
    value, cube = sc.argmax(w.domain, [a / b for a, b in zip(local, mass)])
    return Characteristic(value, cube, str(sc))


def _product_means(fs: Sequence[GridFunction], ps: Sequence[float], sc: CubeScope):
    """``prod_j <f_j>_Q^(1/p_j)`` per cube; this is ``prod_j <f_j^(1/p_j) 1_Q>_{p_j,Q'}``."""
    tables = None
    for f, pj in zip(fs, ps):
        if pj == INF:
            continue
        t = [a ** (1.0 / pj) for a in sc.averages(f)]
        tables = t if tables is None else [x * y for x, y in zip(tables, t)]
    return tables


def ml_fw_constant(weights, pvec: ExponentTuple | None = None, scope=None) -> Characteristic:
    """``sup_Q (int_Q M_p(w^(1/p) 1_Q)^p / int_Q prod_j w_j^(p/p_j))^(1/p)``."""
    wt = weights if isinstance(weights, WeightTuple) else WeightTuple(tuple(weights), pvec)
    sc = _scope(scope)
    pv = wt.pvec
    p = pv.p
    local_means = _product_means(wt.weights, pv.ps, sc)
    local = sc.local_sup_integrals(wt.domain, local_means, p)
    dens = np.ones(wt.domain.shape)
    for wj, pj in zip(wt.weights, pv.ps):
        if pj != INF:
            dens = dens * wj.values ** (p / pj)
    denom = sc.sums(GridFunction(wt.domain, dens))
    tables = [(a / b) ** (1.0 / p) for a, b in zip(local, denom)]
    value, cube = sc.argmax(wt.domain, tables)
    return Characteristic(value, cube, str(sc))


def fw_prod_constant(weights, pvec: ExponentTuple | None = None, scope=None) -> Characteristic:
    """Same local maximal integral built from ``v_j = w_j^(-p_j')``, normalised by
    ``prod_j v_j(Q)^(1/p_j)``."""
    wt = weights if isinstance(weights, WeightTuple) else WeightTuple(tuple(weights), pvec)
    sc = _scope(scope)
    pv = wt.pvec
    if any(pj <= 1 for pj in pv.ps):
        raise ExponentError("the product constant needs every p_j > 1")
    p = pv.p
    vs = [wt.v_j(j) for j in range(wt.m)]
    local = sc.local_sup_integrals(wt.domain, _product_means(vs, pv.ps, sc), p)
    denom = None
    for v, pj in zip(vs, pv.ps):
        if pj == INF:
            continue
        t = [s ** (1.0 / pj) for s in sc.sums(v)]
        denom = t if denom is None else [x * y for x, y in zip(denom, t)]
    tables = [a ** (1.0 / p) / b for a, b in zip(local, denom)]
    value, cube = sc.argmax(wt.domain, tables)
    return Characteristic(value, cube, str(sc))


@dataclass(frozen=True)
class ReverseHolderReport:
    fw: float
    r: float
    max_ratio: float
    worst_cube: Cube | LatticeCube
    violations: int
    scope: str

    @property
    def ok(self) -> bool:
        return self.violations == 0


def reverse_holder_check(w: GridFunction, scope=None) -> ReverseHolderReport:
    """Check ``<w>_{r,Q} <= 2 <w>_{1,Q}`` on every cube with ``r' = 2^(d+1) [w]_FW``."""
    sc = _scope(scope)
    fw = fw_constant(w, sc).value
    r_prime = 2.0 ** (w.domain.dim + 1) * fw
    r = r_prime / (r_prime - 1.0)
    upper = _root_mean(sc.averages(w, r), r)
    lower = sc.averages(w)
    ratios = [a / b for a, b in zip(upper, lower)]
    worst, cube = sc.argmax(w.domain, ratios)
    # relative slack for rounding in the power means
    violations = int(sum(np.count_nonzero(t > 2.0 * (1 + 1e-12)) for t in ratios))
    return ReverseHolderReport(fw, r, worst, cube, violations, str(sc))
