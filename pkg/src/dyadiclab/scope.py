"""Finite families of cubes over which suprema are taken.

``dyadic`` is every unshifted dyadic cube of the domain, grouped by level.
``all`` is every axis-aligned cube with corners on the finest cell lattice,
grouped by side length; its cost grows like ``n**(d+2)`` so it is only
allowed for ``d = 1`` or ``L <= 4``.

Each group is an array over cube positions ("table"), which keeps the
suprema fully vectorised.
"""

from __future__ import annotations

import itertools

import numpy as np

from .dyadic import Cube, Domain, LatticeCube
from .errors import ScopeCostError
from .gridfunc import GridFunction, coarsen, upsample

__all__ = ["CubeScope", "DYADIC", "ALL"]


class CubeScope:
    DYADIC = "dyadic"
    ALL = "all"

    def __init__(self, mode: str = "dyadic"):
        if mode in ("dyadic", "dyadic-grid"):
            mode = self.DYADIC
        elif mode in ("all", "all-lattice-aligned"):
            mode = self.ALL
        else:
            raise ValueError(f"unknown scope {mode!r}")
        self.mode = mode

    def __repr__(self):
        return f"CubeScope({self.mode!r})"

    def __str__(self):
        return self.mode

    def __eq__(self, other):
        return isinstance(other, CubeScope) and other.mode == self.mode

    def __hash__(self):
        return hash(self.mode)

    @property
    def dyadic(self) -> bool:
        return self.mode == self.DYADIC

    def check(self, domain: Domain):
        if not self.dyadic and not (domain.dim == 1 or domain.max_level <= 4):
            raise ScopeCostError(
                f"all-lattice-aligned scope needs d = 1 or L <= 4 (got d={domain.dim}, "
                f"L={domain.max_level})")

    # tables

    def volumes(self, domain: Domain) -> list[float]:
        if self.dyadic:
            return [2.0 ** (-lv * domain.dim) for lv in range(domain.max_level + 1)]
        return [(s / domain.side) ** domain.dim for s in range(1, domain.side + 1)]

    def sums(self, f: GridFunction, power: float = 1.0) -> list[np.ndarray]:
        """``int_Q f**power`` for every cube of the scope."""
        self.check(f.domain)
        if self.dyadic:
            return list(f.pyramid(power))
        sat = f.summed_volume(power)
        return [_box_sums(sat, s) for s in range(1, f.domain.side + 1)]

    def averages(self, f: GridFunction, power: float = 1.0) -> list[np.ndarray]:
        """``<f>_{power,Q}**power`` (mean of ``f**power``) for every cube."""
        return [t / v for t, v in zip(self.sums(f, power), self.volumes(f.domain))]

    def maxima(self, f: GridFunction) -> list[np.ndarray]:
        self.check(f.domain)
        if self.dyadic:
            return list(f.max_pyramid())
        out = [f.values]
        for _ in range(2, f.domain.side + 1):
            out.append(_corner_max(out[-1]))
        return out

    def local_sup_integrals(self, domain: Domain, values: list[np.ndarray],
                            power: float = 1.0) -> list[np.ndarray]:
        """For each cube ``Q``: ``int_Q (sup_{x in Q' in scope, Q' c Q} a_Q')**power dx``.

        ``values`` holds one coefficient ``a_Q'`` per cube in table layout.
        Restricting the supremum to subcubes is exact for localised maximal
        functions: a cube sticking out of ``Q`` sees no more mass than a
        subcube of ``Q`` of no larger volume containing the overlap.
        """
        self.check(domain)
        cell = domain.cell_volume
        if self.dyadic:
            L = domain.max_level
            running = np.asarray(values[L], dtype=float)
            out = [None] * (L + 1)
            out[L] = running ** power * cell
            for lv in range(L - 1, -1, -1):
                running = np.maximum(running, upsample(values[lv], 1 << (L - lv)))
                integ = running ** power * cell
                for _ in range(L - lv):
                    integ = coarsen(integ)
                out[lv] = integ
            return out
        d = domain.dim
        n = domain.side
        grid = np.asarray(values[0], dtype=float).reshape((n,) * d + (1,) * d)
        out = [(grid ** power).sum(axis=tuple(range(d, 2 * d))) * cell]
        for s in range(2, n + 1):
            m = n - s + 1
            new = np.zeros((m,) * d + (s,) * d)
            for e in itertools.product((0, 1), repeat=d):
                src = grid[tuple(slice(ei, ei + m) for ei in e)]
                dst = (slice(None),) * d + tuple(slice(ei, ei + s - 1) for ei in e)
                np.maximum(new[dst], src, out=new[dst])
            own = np.asarray(values[s - 1], dtype=float).reshape((m,) * d + (1,) * d)
            np.maximum(new, own, out=new)
            out.append((new ** power).sum(axis=tuple(range(d, 2 * d))) * cell)
            grid = new
        return out

    # cube bookkeeping

    def cube(self, domain: Domain, cls: int, idx) -> Cube | LatticeCube:
        idx = tuple(int(i) for i in np.atleast_1d(idx))
        if self.dyadic:
            return Cube((0,) * domain.dim, cls, idx)
        return LatticeCube(idx, cls + 1)

    def order(self, domain: Domain):
        """Class order used for tie-breaking: large cubes first."""
        n = len(self.volumes(domain))
        return range(n) if self.dyadic else range(n - 1, -1, -1)

    def argmax(self, domain: Domain, tables: list[np.ndarray]) -> tuple[float, Cube | LatticeCube]:
        best, where = -np.inf, None
        for cls in self.order(domain):
            t = tables[cls]
            flat = int(np.argmax(t))
            val = float(t.reshape(-1)[flat])
            if val > best:
                best, where = val, (cls, np.unravel_index(flat, t.shape))
        return best, self.cube(domain, *where)

    def iter_cubes(self, domain: Domain):
        self.check(domain)
        for cls in self.order(domain):
            shape = (1 << cls,) * domain.dim if self.dyadic else (domain.side - cls,) * domain.dim
            for idx in itertools.product(*(range(k) for k in shape)):
                yield self.cube(domain, cls, idx)


DYADIC = CubeScope("dyadic")
ALL = CubeScope("all")


def _box_sums(sat: np.ndarray, s: int) -> np.ndarray:
    d = sat.ndim
    m = sat.shape[0] - s
    total = np.zeros((m,) * d)
    for corner in itertools.product((0, 1), repeat=d):
        sl = tuple(slice(s, s + m) if c else slice(0, m) for c in corner)
        sign = (-1) ** (d - sum(corner))
        total += sign * sat[sl]
    return total


def _corner_max(prev: np.ndarray) -> np.ndarray:
    d = prev.ndim
    m = prev.shape[0] - 1
    out = None
    for e in itertools.product((0, 1), repeat=d):
        src = prev[tuple(slice(ei, ei + m) for ei in e)]
        out = src.copy() if out is None else np.maximum(out, src)
    return out
