"""Sparse and maximal operators on the unshifted dyadic grid.

A collection of cubes is held as one boolean array per level ("level
masks"); coefficients likewise as one array per level with zeros off the
collection.  Every operator is then a single pass down the levels that
upsamples the running aggregate and folds in the next level.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from typing import NamedTuple, Sequence

import numpy as np

from .dyadic import Cube, Domain
from .gridfunc import INF, ExponentTuple, GridFunction, coarsen, upsample

__all__ = [
    "CoefficientMap",
    "level_masks",
    "level_coefficients",
    "sparse_operator",
    "sparse_q_operator",
    "maximal",
    "multilinear_maximal",
    "dyadic_multilinear_maximal",
    "sparse_form",
    "CovSides",
    "cov_both_sides",
    "product_averages",
]


def _check_cube(c: Cube, domain: Domain):
    if not c.is_unshifted or not c.in_base() or c.level > domain.max_level:
        raise ValueError(f"{c} is not a cube of the unshifted grid of the domain")
    if c.dim != domain.dim:
        raise ValueError(f"{c} has the wrong dimension")


def level_masks(cubes: Iterable[Cube], domain: Domain) -> list[np.ndarray]:
    masks = [np.zeros((1 << lv,) * domain.dim, dtype=bool) for lv in range(domain.max_level + 1)]
    for c in cubes:
        _check_cube(c, domain)
        masks[c.level][c.index] = True
    return masks


class CoefficientMap(Mapping):
    """Positive coefficients ``a_Q`` indexed by unshifted dyadic cubes."""

    def __init__(self, domain: Domain, coeffs: Mapping[Cube, float] | Iterable[tuple[Cube, float]]):
        items = dict(coeffs.items() if isinstance(coeffs, Mapping) else coeffs)
        for c, a in items.items():
            _check_cube(c, domain)
            if not (np.isfinite(a) and a > 0):
                raise ValueError(f"coefficient of {c} must be positive and finite, got {a}")
        self.domain = domain
        self._data = {c: float(a) for c, a in sorted(items.items())}

    def __getitem__(self, c: Cube) -> float:
        return self._data[c]

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def __repr__(self):
        return f"CoefficientMap({len(self)} cubes)"

    def tables(self) -> list[np.ndarray]:
        out = [np.zeros((1 << lv,) * self.domain.dim) for lv in range(self.domain.max_level + 1)]
        for c, a in self._data.items():
            out[c.level][c.index] = a
        return out

    @classmethod
    def from_averages(cls, cubes: Iterable[Cube], fs: Sequence[GridFunction]) -> "CoefficientMap":
        """``a_Q = prod_j <f_j>_{1,Q}`` on the given cubes (cubes with ``a_Q = 0`` dropped)."""
        domain = fs[0].domain
        avgs = product_averages(fs)
        data = {}
        for c in cubes:
            _check_cube(c, domain)
            a = float(avgs[c.level][c.index])
            if a > 0:
                data[c] = a
        return cls(domain, data)


def product_averages(fs: Sequence[GridFunction], ps: Sequence[float] | None = None) -> list[np.ndarray]:
    """``prod_j <f_j>_{p_j,Q}`` for every dyadic cube, one array per level."""
    domain = fs[0].domain
    ps = [1.0] * len(fs) if ps is None else list(ps)
    vols = [2.0 ** (-lv * domain.dim) for lv in range(domain.max_level + 1)]
    out = [np.ones((1 << lv,) * domain.dim) for lv in range(domain.max_level + 1)]
    for f, p in zip(fs, ps):
        if f.domain != domain:
            raise ValueError("functions live on different domains")
        if p == INF:
            tabs = GridFunction(domain, np.abs(f.values)).max_pyramid()
        else:
            tabs = [(s / v) ** (1.0 / p)
                    for s, v in zip(GridFunction(domain, np.abs(f.values)).pyramid(p), vols)]
        out = [o * t for o, t in zip(out, tabs)]
    return out


def level_coefficients(S, domain: Domain, fs: Sequence[GridFunction] | None = None) -> list[np.ndarray]:
    """Per-level coefficient arrays from a CoefficientMap or from cubes and functions."""
    if isinstance(S, CoefficientMap):
        return S.tables()
    masks = level_masks(_cubes_of(S), domain)
    if fs is None:
        return [m.astype(float) for m in masks]
    return [m * a for m, a in zip(masks, product_averages(fs))]


def _cubes_of(S):
    return getattr(S, "cubes", S)


def _accumulate(tables: list[np.ndarray], combine) -> np.ndarray:
    acc = tables[0]
    for t in tables[1:]:
        acc = combine(upsample(acc), t)
    return acc


def sparse_operator(S, fs: Sequence[GridFunction]) -> GridFunction:
    """``sum_{Q in S} prod_j <f_j>_{1,Q} 1_Q``."""
    domain = fs[0].domain
    return GridFunction(domain, _accumulate(level_coefficients(S, domain, fs), np.add))


def sparse_q_operator(S, q: float, fs: Sequence[GridFunction] | None = None,
                      domain: Domain | None = None) -> GridFunction:
    """``|| {a_Q 1_Q} ||_{l^q}`` cell-wise; ``q = inf`` is the maximum.

    ``S`` is a CoefficientMap, or a cube collection together with ``fs``
    (then ``a_Q = prod_j <f_j>_{1,Q}``).
    """
    if q <= 0:
        raise ValueError("q must be positive")
    if domain is None:
        domain = S.domain if isinstance(S, CoefficientMap) else fs[0].domain
    tables = level_coefficients(S, domain, fs)
    if q == INF:
        return GridFunction(domain, _accumulate(tables, np.maximum))
    acc = _accumulate([t ** q for t in tables], np.add)
    return GridFunction(domain, acc ** (1.0 / q))


def maximal(f: GridFunction, w: GridFunction | None = None, P=None) -> GridFunction:
    """``sup_{Q in P} <f>^w_{1,Q} 1_Q``; ``P`` defaults to every dyadic cube."""
    domain = f.domain
    absf = GridFunction(domain, np.abs(f.values))
    if w is None:
        vols = [2.0 ** (-lv * domain.dim) for lv in range(domain.max_level + 1)]
        avgs = [s / v for s, v in zip(absf.pyramid(), vols)]
    else:
        avgs = [a / b for a, b in zip((absf * w).pyramid(), w.pyramid())]
    return _masked_max(avgs, P, domain)


def _masked_max(tables: list[np.ndarray], P, domain: Domain) -> GridFunction:
    if P is not None:
        masks = level_masks(_cubes_of(P), domain)
        tables = [np.where(m, t, 0.0) for m, t in zip(masks, tables)]
    return GridFunction(domain, _accumulate(tables, np.maximum))


def multilinear_maximal(fs: Sequence[GridFunction], pvec: ExponentTuple | Sequence[float],
                        P=None) -> GridFunction:
    """``sup_Q prod_j <f_j>_{p_j,Q} 1_Q`` over dyadic cubes (or ``P``)."""
    ps = pvec.ps if isinstance(pvec, ExponentTuple) else tuple(pvec)
    if len(ps) != len(fs):
        raise ValueError("one exponent per function")
    return _masked_max(product_averages(fs, ps), P, fs[0].domain)


def dyadic_multilinear_maximal(fs: Sequence[GridFunction], P=None) -> GridFunction:
    """``M^D f = sup_Q prod_j <f_j>_{1,Q} 1_Q``."""
    return _masked_max(product_averages(fs), P, fs[0].domain)


def sparse_form(S, fs: Sequence[GridFunction], g: GridFunction, p: float = 1.0,
                kind: str = "ellp") -> float:
    """``sum_Q (prod_j <f_j>_Q)^p <g>_Q^e |Q|`` with ``e = p`` (``ellp``) or
    ``e = 1`` (``ellp-measure``)."""
    if not 0 < p <= 1:
        raise ValueError("sparse forms take p in (0, 1]")
    if kind not in ("ellp", "ellp-measure"):
        raise ValueError(f"unknown form kind {kind!r}")
    domain = fs[0].domain
    coeffs = level_coefficients(S, domain, fs)
    gavgs = product_averages([g])
    ge = p if kind == "ellp" else 1.0
    total = 0.0
    for lv, (c, ga) in enumerate(zip(coeffs, gavgs)):
        total += float(np.sum(c ** p * ga ** ge)) * 2.0 ** (-lv * domain.dim)
    return total


class CovSides(NamedTuple):
    lhs: float
    rhs: float
    rhs_literal: float


def cov_both_sides(F, a: CoefficientMap, q: float, v: GridFunction) -> CovSides:
    """Both sides of the two-sided estimate for ``|| sum a_Q 1_Q ||_{L^q(v)}``.

    ``rhs`` uses the inner factor ``v(Q)^-1 sum_{Q' c Q} a_Q' v(Q')``; the
    literal variant ``rhs_literal`` uses ``v(Q)`` in place of ``v(Q')``,
    which reduces the inner factor to ``sum_{Q' c Q} a_Q'``.
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    domain = v.domain
    cubes = sorted(set(_cubes_of(F)))
    coeff = [np.zeros((1 << lv,) * domain.dim) for lv in range(domain.max_level + 1)]
    for c in cubes:
        _check_cube(c, domain)
        coeff[c.level][c.index] = a[c]
    total = _accumulate(coeff, np.add)
    lhs = float(np.sum(total ** q * v.values) * domain.cell_volume) ** (1.0 / q)
    vq = v.pyramid()
    # subtree sums of a_Q' v(Q') and of a_Q' over the collection
    weighted = _subtree_sums([c * s for c, s in zip(coeff, vq)], domain)
    plain = _subtree_sums(coeff, domain)
    rhs = rhs_lit = 0.0
    for c in cubes:
        vQ = float(vq[c.level][c.index])
        aQ = a[c]
        inner_b = float(weighted[c.level][c.index]) / vQ
        inner_a = float(plain[c.level][c.index])
        rhs += inner_b ** (q - 1) * aQ * vQ
        rhs_lit += inner_a ** (q - 1) * aQ * vQ
    return CovSides(lhs, rhs ** (1.0 / q), rhs_lit ** (1.0 / q))


def _subtree_sums(tables: list[np.ndarray], domain: Domain) -> list[np.ndarray]:
    """``T_l[Q] = sum over cubes Q' c Q (levels >= l) of tables[Q']``."""
    out = [None] * len(tables)
    acc = tables[-1].copy()
    out[-1] = acc
    for lv in range(len(tables) - 2, -1, -1):
        acc = coarsen(acc) + tables[lv]
        out[lv] = acc
    return out
