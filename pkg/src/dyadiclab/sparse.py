"""Sparse collections and the stopping-time constructions built on them.

Witnesses are stored as arrays over the finest cells holding the fraction of
each cell assigned to ``E_Q``.  The canonical witness ("``Q`` minus its
maximal proper subcubes in the collection") only uses fractions 0 and 1; the
max-flow fallback may split cells, which is legitimate because ``E_Q`` is
any measurable subset of ``Q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .dyadic import Cube, Domain, contains, parent
from .errors import DegenerateDecompositionError, GeneratorError, NotSparseError
from .gridfunc import GridFunction, coarsen, upsample
from .operators import (
    CoefficientMap,
    _check_cube,
    dyadic_multilinear_maximal,
    level_masks,
    product_averages,
    sparse_q_operator,
)

__all__ = [
    "SparseCollection",
    "verify_sparse",
    "canonical_witness_ratios",
    "CZDecomposition",
    "cz_decompose",
    "StoppingFamily",
    "principal_cubes",
    "superlevel_decomposition",
    "height_function",
    "random_sparse",
    "sparse_from_maximal",
]

# relative slack when comparing witness measures against eta |Q|
_TOL = 1e-12


@dataclass(frozen=True)
class SparseCollection:
    domain: Domain
    cubes: tuple[Cube, ...]
    eta: float
    witness: dict = field(repr=False)
    method: str = "canonical"

    def __iter__(self):
        return iter(self.cubes)

    def __len__(self):
        return len(self.cubes)

    def __contains__(self, c):
        return c in self.witness

    def witness_measure(self, c: Cube) -> float:
        return float(self.witness[c].sum()) * self.domain.cell_volume

    def check(self):
        """Assert disjointness, containment and the eta lower bound."""
        total = np.zeros(self.domain.shape)
        for c in self.cubes:
            e = self.witness[c]
            inside = np.zeros(self.domain.shape, dtype=bool)
            inside[c.cell_slices(self.domain)] = True
            if np.any(e[~inside] != 0) or np.any(e < 0) or np.any(e > 1):
                raise AssertionError(f"witness of {c} leaves the cube")
            if self.witness_measure(c) < self.eta * float(c.volume) * (1 - _TOL):
                raise AssertionError(f"witness of {c} is too small")
            total += e
        if np.any(total > 1 + _TOL):
            raise AssertionError("witnesses overlap")
        return True


def _normalise(cubes: Iterable[Cube], domain: Domain) -> tuple[Cube, ...]:
    out = sorted(set(cubes), key=lambda c: (c.level, c.index))
    for c in out:
        _check_cube(c, domain)
    return tuple(out)


def _owner(cubes: Sequence[Cube], domain: Domain) -> np.ndarray:
    """Index of the smallest collection cube containing each cell (-1 if none)."""
    ids = [np.full((1 << lv,) * domain.dim, -1, dtype=np.int64) for lv in range(domain.max_level + 1)]
    for i, c in enumerate(cubes):
        ids[c.level][c.index] = i
    acc = ids[0]
    for t in ids[1:]:
        acc = upsample(acc)
        acc = np.where(t >= 0, t, acc)
    return acc


def canonical_witness_ratios(cubes: Sequence[Cube], domain: Domain) -> np.ndarray:
    """``|E_Q| / |Q|`` for the canonical witness, in the order of ``cubes``."""
    owner = _owner(cubes, domain)
    counts = np.bincount(owner[owner >= 0].ravel(), minlength=len(cubes))
    sizes = np.array([(1 << (domain.max_level - c.level)) ** domain.dim for c in cubes], dtype=float)
    return counts / sizes if len(cubes) else np.zeros(0)


def verify_sparse(cubes: Iterable[Cube], eta: float, domain: Domain | None = None,
                  use_flow: bool = True) -> SparseCollection:
    """Build and check a witness family; raise NotSparseError if none exists."""
    cubes = list(cubes)
    if domain is None:
        if not cubes:
            raise ValueError("an empty collection needs an explicit domain")
        domain = Domain(cubes[0].dim, max(1, max(c.level for c in cubes)))
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    cubes = _normalise(cubes, domain)
    if not cubes:
        return SparseCollection(domain, (), eta, {})
    owner = _owner(cubes, domain)
    ratios = canonical_witness_ratios(cubes, domain)
    bad = np.nonzero(ratios < eta * (1 - _TOL))[0]
    if len(bad) == 0:
        witness = {c: (owner == i).astype(float) for i, c in enumerate(cubes)}
        coll = SparseCollection(domain, cubes, eta, witness)
        coll.check()
        return coll
    first = cubes[int(bad[0])]
    achievable = float(ratios.min())
    if not use_flow:
        raise NotSparseError(
            f"canonical witness of {first} covers {ratios[bad[0]]:.6g} of the cube (< {eta})",
            cube=first, achievable_eta=achievable)
    witness = _flow_witness(cubes, eta, domain)
    if witness is None:
        raise NotSparseError(
            f"no {eta}-sparse witness exists; canonical witness fails first at {first}",
            cube=first, achievable_eta=achievable, flow_feasible=False)
    coll = SparseCollection(domain, cubes, eta, witness, method="flow")
    coll.check()
    return coll


def _flow_witness(cubes: Sequence[Cube], eta: float, domain: Domain):
    """Exact feasibility via integer max-flow: source -> cube -> cell -> sink.

    Each cell is split into ``K`` units where ``eta = num / K``, so demands
    ``eta |Q|`` are integral and the flow is exact.
    """
    import networkx as nx

    frac = Fraction(eta).limit_denominator(1 << 20)
    K = frac.denominator
    G = nx.DiGraph()
    n = domain.side
    demand_total = 0
    for i, c in enumerate(cubes):
        ncell = (1 << (domain.max_level - c.level)) ** domain.dim
        need = math.ceil(frac * ncell * K)
        demand_total += need
        G.add_edge("s", ("q", i), capacity=need)
        sl = c.cell_slices(domain)
        for cell in np.ndindex(*[s.stop - s.start for s in sl]):
            idx = tuple(s.start + k for s, k in zip(sl, cell))
            G.add_edge(("q", i), ("c", idx))
    for idx in np.ndindex(*((n,) * domain.dim)):
        if G.has_node(("c", idx)):
            G.add_edge(("c", idx), "t", capacity=K)
    value, flow = nx.maximum_flow(G, "s", "t")
    if value < demand_total:
        return None
    witness = {}
    for i, c in enumerate(cubes):
        e = np.zeros(domain.shape)
        for node, amount in flow[("q", i)].items():
            e[node[1]] = amount / K
        witness[c] = e
    return witness


# Calderon-Zygmund


@dataclass(frozen=True)
class CZDecomposition:
    good: GridFunction
    bad_parts: dict
    bad_cubes: tuple[Cube, ...]
    omega: np.ndarray
    height: float

    def check(self, f: GridFunction, rtol: float = 1e-12) -> bool:
        d = f.domain
        total = self.good.values.copy()
        union = np.zeros(d.shape, dtype=bool)
        for c in self.bad_cubes:
            b = self.bad_parts[c].values
            inside = np.zeros(d.shape, dtype=bool)
            inside[c.cell_slices(d)] = True
            assert not np.any(b[~inside]), f"bad part of {c} leaks"
            assert not np.any(union & inside), "bad cubes overlap"
            scale = np.abs(f.values[inside]).sum()
            assert abs(b[inside].sum()) <= rtol * max(scale, 1.0), f"bad part of {c} has nonzero mean"
            union |= inside
            total = total + b
        assert np.array_equal(union, self.omega)
        assert np.allclose(total, f.values, rtol=rtol, atol=rtol * np.abs(f.values).max())
        assert self.good.values.max() <= 2 ** d.dim * self.height * (1 + rtol)
        l1g = np.abs(self.good.values).sum()
        assert l1g <= np.abs(f.values).sum() * (1 + rtol)
        return True


def _stopping_masks(tables: list[np.ndarray], domain: Domain) -> list[np.ndarray]:
    """Maximal cubes among the True entries of per-level boolean tables."""
    covered = np.zeros((1,) * domain.dim, dtype=bool)
    out = []
    for lv, t in enumerate(tables):
        if lv:
            covered = upsample(covered)
        sel = t & ~covered
        out.append(sel)
        covered = covered | sel
    return out


def _masks_to_cubes(masks: list[np.ndarray]) -> list[Cube]:
    out = []
    for lv, m in enumerate(masks):
        for idx in zip(*np.nonzero(m)):
            out.append(Cube((0,) * m.ndim, lv, tuple(int(i) for i in idx)))
    return out


def cz_decompose(f: GridFunction, lam: float) -> CZDecomposition:
    """Stop at maximal dyadic cubes with ``<f>_Q > lam``."""
    if lam <= 0:
        raise ValueError("height must be positive")
    d = f.domain
    avgs = product_averages([f])
    if avgs[0].flat[0] > lam:
        raise DegenerateDecompositionError(
            f"root average {avgs[0].flat[0]:.6g} exceeds the height {lam:.6g}")
    stops = _stopping_masks([a > lam for a in avgs], d)
    cubes = _masks_to_cubes(stops)
    good = f.values.astype(float).copy()
    omega = np.zeros(d.shape, dtype=bool)
    bad = {}
    for c in cubes:
        sl = c.cell_slices(d)
        mean = float(avgs[c.level][c.index])
        b = np.zeros(d.shape)
        b[sl] = f.values[sl] - mean
        bad[c] = GridFunction(d, b, signed=True)
        good[sl] = mean
        omega[sl] = True
    return CZDecomposition(GridFunction(d, good), bad, tuple(cubes), omega, float(lam))


# principal cubes


@dataclass(frozen=True)
class StoppingFamily:
    root: Cube
    members: tuple[Cube, ...]
    averages: dict
    projection: dict
    children: dict
    domain: Domain

    def lacunary(self) -> bool:
        return all(self.averages[c] > 2 * self.averages[q]
                   for q, chs in self.children.items() for c in chs)

    def sum_and_max(self) -> tuple[np.ndarray, np.ndarray]:
        """``sum_{Q in E} lam_Q 1_Q`` and ``sup_{Q in E} lam_Q 1_Q`` on the cells."""
        d = self.domain
        tabs = [np.zeros((1 << lv,) * d.dim) for lv in range(d.max_level + 1)]
        for c in self.members:
            tabs[c.level][c.index] = self.averages[c]
        acc_s, acc_m = tabs[0], tabs[0]
        for t in tabs[1:]:
            acc_s = upsample(acc_s) + t
            acc_m = np.maximum(upsample(acc_m), t)
        return acc_s, acc_m

    def sum_over_max(self) -> float:
        """Largest ratio ``sum / max`` on the root; at most 2 by lacunarity."""
        s, m = self.sum_and_max()
        mask = m > 0
        return float((s[mask] / m[mask]).max()) if mask.any() else 0.0

    def projection_ratio(self) -> float:
        """Largest ``lam_Q / lam_{pi(Q)}``; at most 2."""
        r = 0.0
        for q, p in self.projection.items():
            if self.averages[p] > 0:
                r = max(r, self.averages[q] / self.averages[p])
        return r


def principal_cubes(f: GridFunction, v: GridFunction, Q0: Cube, S) -> StoppingFamily:
    """Principal cubes of ``lam_Q = int_Q f / v(Q)`` inside ``Q0`` along ``S``."""
    d = f.domain
    cubes = list(getattr(S, "cubes", S))
    if Q0 not in set(cubes):
        raise ValueError("the root must belong to the collection")
    sub = sorted((c for c in cubes if contains(Q0, c)), key=lambda c: (c.level, c.index))
    fint = f.pyramid()
    vint = v.pyramid()
    lam = {c: float(fint[c.level][c.index] / vint[c.level][c.index]) for c in sub}
    inS = set(sub)
    proj: dict = {}
    chs: dict = {Q0: []}
    members = [Q0]
    for c in sub:
        if c == Q0:
            proj[c] = c
            continue
        a = parent(c)
        while a not in inS:
            a = parent(a)
        top = proj[a]
        if lam[c] > 2 * lam[top]:
            proj[c] = c
            members.append(c)
            chs[top].append(c)
            chs[c] = []
        else:
            proj[c] = top
    return StoppingFamily(Q0, tuple(members), lam, proj, chs, d)


# superlevel sets and heights


def superlevel_decomposition(S, a: CoefficientMap, r: float, lam: float,
                             domain: Domain | None = None) -> list[Cube]:
    """Maximal dyadic cubes inside ``{A^r_S(a) > lam}``; their union is exactly that set."""
    domain = a.domain if domain is None else domain
    keep = set(getattr(S, "cubes", S))
    coeffs = CoefficientMap(domain, {c: x for c, x in a.items() if c in keep})
    A = sparse_q_operator(coeffs, r, domain=domain).values
    level_set = A > lam
    full = [level_set]
    for _ in range(domain.max_level):
        full.append(coarsen(full[-1], np.logical_and))
    full.reverse()
    stops = _stopping_masks(full, domain)
    cubes = _masks_to_cubes(stops)
    union = np.zeros(domain.shape, dtype=bool)
    for c in cubes:
        union[c.cell_slices(domain)] = True
        if c.level:
            assert not level_set[parent(c).cell_slices(domain)].all()
    assert np.array_equal(union, level_set)
    return cubes


def height_function(S, Q0: Cube, domain: Domain) -> GridFunction:
    """``sum_{Q in S, Q c Q0} 1_Q``."""
    masks = level_masks((c for c in getattr(S, "cubes", S) if contains(Q0, c)), domain)
    acc = masks[0].astype(np.int64)
    for m in masks[1:]:
        acc = upsample(acc) + m
    return GridFunction(domain, acc.astype(float))


# generators


def random_sparse(domain: Domain, seed: int, eta: float, count: int | None = None,
                  max_level: int | None = None) -> SparseCollection:
    """A random stopping tree of ``count`` cubes, canonically ``eta``-sparse.

    Starting from the root, each cube hands at most ``(1 - eta)|Q|`` to
    randomly chosen disjoint descendants one to three levels down, which are
    then processed in turn (breadth first).  ``count = None`` grows the tree
    until it dies out.
    """
    if not 0 < eta <= 1:
        raise GeneratorError(f"eta must lie in (0, 1], got {eta}")
    if count is not None and count < 1:
        raise GeneratorError("count must be positive")
    limit = math.inf if count is None else count
    rng = np.random.default_rng(seed)
    top = domain.max_level if max_level is None else min(max_level, domain.max_level)
    d = domain.dim
    root = Cube((0,) * d, 0, (0,) * d)
    cubes = [root]
    queue = [root]
    while queue and len(cubes) < limit:
        q = queue.pop(0)
        budget = (1 - eta) * (1 + _TOL)
        used = 0.0
        taken: list[Cube] = []
        cands = []
        for depth in range(1, 4):
            if q.level + depth > top:
                break
            for off in np.ndindex(*((1 << depth,) * d)):
                cands.append(Cube((0,) * d, q.level + depth,
                                  tuple((i << depth) + o for i, o in zip(q.index, off))))
        for k in rng.permutation(len(cands)):
            c = cands[int(k)]
            share = 2.0 ** (-(c.level - q.level) * d)
            if used + share > budget or rng.random() < 0.25:
                continue
            if any(contains(t, c) or contains(c, t) for t in taken):
                continue
            taken.append(c)
            used += share
        for c in taken:
            if len(cubes) >= limit:
                break
            cubes.append(c)
            queue.append(c)
    if len(cubes) < limit < math.inf:
        raise GeneratorError(f"only {len(cubes)} of {count} cubes fit at eta={eta}")
    return verify_sparse(cubes, eta, domain, use_flow=False)


def default_base(m: int, d: int) -> float:
    """Level ratio ``2^(md) (2m)^m`` that makes the maximal-function cubes 1/2-sparse."""
    return 2.0 ** (m * d) * (2.0 * m) ** m


def sparse_from_maximal(fs: Sequence[GridFunction], base: float | None = None,
                        eta: float = 0.5) -> SparseCollection:
    """Maximal dyadic cubes of ``{M^D f > t base^k}``, ``k = 0, 1, ...``.

    The ladder starts at ``t = 2^(-md) prod_j <f_j>_root`` so that the root,
    like every other stopping cube, has a product average at most ``2^(md)``
    times its own threshold.  The union is verified ``eta``-sparse.
    """
    domain = fs[0].domain
    m, d = len(fs), domain.dim
    a = default_base(m, d) if base is None else float(base)
    if a <= 1:
        raise GeneratorError("the level ratio must exceed 1")
    avgs = product_averages(fs)
    root = float(avgs[0].flat[0])
    if root <= 0:
        return verify_sparse([], eta, domain)
    top = float(dyadic_multilinear_maximal(fs).values.max())
    t = root * 2.0 ** (-m * d)
    cubes: set = set()
    while t < top:
        cubes.update(_masks_to_cubes(_stopping_masks([x > t for x in avgs], domain)))
        t *= a
    try:
        return verify_sparse(cubes, eta, domain)
    except NotSparseError as exc:
        raise GeneratorError(f"maximal-function cubes are not {eta}-sparse: {exc}") from exc
