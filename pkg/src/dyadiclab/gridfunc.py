"""Piecewise-constant functions on the finest cells of a domain.

Every integral is a finite sum, so averages, distribution functions and
weak/Lorentz norms are exact up to floating point.  Two accelerators are
cached per exponent: a pyramid of dyadic block integrals (one array per
level) and a summed-volume table for arbitrary lattice-aligned boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dyadic import Cube, Domain, LatticeCube
from .errors import ExponentError, ZeroMassError

__all__ = [
    "GridFunction",
    "ExponentTuple",
    "conjugate",
    "coarsen",
    "upsample",
    "average",
    "measure",
    "weak_norm",
    "weak_norm_measure",
    "lp_norm",
    "lp_norm_measure",
    "lorentz_norm",
    "lorentz_lp_factor",
]

INF = math.inf


def conjugate(p: float) -> float:
    """Hoelder conjugate of ``p`` in ``[1, inf]``."""
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    if p < 1:
        raise ExponentError(f"conjugate exponent undefined for p={p} < 1")
    return p / (p - 1.0)


def coarsen(arr: np.ndarray, op=np.add) -> np.ndarray:
    """Combine each ``2 x ... x 2`` block of ``arr`` with the ufunc ``op``."""
    d = arr.ndim
    shape = []
    for n in arr.shape:
        shape += [n // 2, 2]
    blocks = arr.reshape(shape)
    return op.reduce(blocks, axis=tuple(range(1, 2 * d, 2)))


def upsample(arr: np.ndarray, factor: int = 2) -> np.ndarray:
    """Repeat every entry ``factor`` times along every axis."""
    out = arr
    for ax in range(arr.ndim):
        out = np.repeat(out, factor, axis=ax)
    return out


class GridFunction:
    """Nonnegative piecewise-constant function on ``domain``.

    ``values`` may be given flat (row-major) or in the domain shape.  The
    array is stored read-only; derived functions are new instances.  Pass
    ``signed=True`` for the few signed objects (bad parts of a decomposition).
    """

    def __init__(self, domain: Domain, values, signed: bool = False):
        arr = np.array(values, dtype=float)
        if arr.size != domain.ncells:
            raise ValueError(f"expected {domain.ncells} values, got {arr.size}")
        arr = arr.reshape(domain.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("values must be finite")
        if not signed and np.any(arr < 0):
            raise ValueError("values must be nonnegative")
        arr.setflags(write=False)
        self.domain = domain
        self.values = arr
        self._pyramids: dict = {}
        self._max_pyramid = None
        self._sat: dict = {}

    @classmethod
    def constant(cls, domain: Domain, c: float = 1.0) -> "GridFunction":
        return cls(domain, np.full(domain.shape, float(c)))

    @classmethod
    def indicator(cls, domain: Domain, mask) -> "GridFunction":
        return cls(domain, np.asarray(mask, dtype=float))

    def __repr__(self):
        return f"GridFunction(d={self.domain.dim}, L={self.domain.max_level})"

    @property
    def is_weight(self) -> bool:
        return bool(np.all(self.values > 0))

    def power(self, a: float) -> "GridFunction":
        if a == 1:
            return self
        if a < 0 and not self.is_weight:
            raise ZeroMassError("negative powers need a strictly positive weight")
        return GridFunction(self.domain, self.values ** a)

    def __mul__(self, other) -> "GridFunction":
        if isinstance(other, GridFunction):
            self._check_domain(other)
            return GridFunction(self.domain, self.values * other.values)
        return GridFunction(self.domain, self.values * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "GridFunction":
        if isinstance(other, GridFunction):
            self._check_domain(other)
            return GridFunction(self.domain, self.values / other.values)
        return GridFunction(self.domain, self.values / float(other))

    def _check_domain(self, other: "GridFunction"):
        if other.domain != self.domain:
            raise ValueError("functions live on different domains")

    def restrict(self, cube: Cube) -> "GridFunction":
        """``self * 1_cube``."""
        out = np.zeros(self.domain.shape)
        sl = cube.cell_slices(self.domain)
        out[sl] = self.values[sl]
        return GridFunction(self.domain, out)

    # accelerators

    def pyramid(self, power: float = 1.0) -> list[np.ndarray]:
        """Integrals of ``f**power`` over every unshifted dyadic cube.

        Entry ``l`` has shape ``(2**l,) * d``.
        """
        key = float(power)
        if key not in self._pyramids:
            base = self.values if key == 1.0 else self.values ** key
            levels = [base * self.domain.cell_volume]
            for _ in range(self.domain.max_level):
                levels.append(coarsen(levels[-1]))
            levels.reverse()
            for a in levels:
                a.setflags(write=False)
            self._pyramids[key] = levels
        return self._pyramids[key]

    def max_pyramid(self) -> list[np.ndarray]:
        """Cell-wise maxima over every unshifted dyadic cube."""
        if self._max_pyramid is None:
            levels = [self.values]
            for _ in range(self.domain.max_level):
                levels.append(coarsen(levels[-1], np.maximum))
            levels.reverse()
            self._max_pyramid = levels
        return self._max_pyramid

    def summed_volume(self, power: float = 1.0) -> np.ndarray:
        """Zero-padded cumulative sums of ``f**power * cell_volume``."""
        key = float(power)
        if key not in self._sat:
            base = self.values if key == 1.0 else self.values ** key
            sat = np.pad(base * self.domain.cell_volume, [(1, 0)] * self.domain.dim)
            for ax in range(self.domain.dim):
                sat = np.cumsum(sat, axis=ax)
            sat.setflags(write=False)
            self._sat[key] = sat
        return self._sat[key]

    def integral(self, cube=None, power: float = 1.0) -> float:
        """``int_cube f**power dx`` through the accelerators."""
        if cube is None:
            return float(self.pyramid(power)[0].reshape(-1)[0])
        if isinstance(cube, LatticeCube):
            return box_sum(self.summed_volume(power), cube.origin, cube.size)
        if cube.level > self.domain.max_level or not cube.in_base():
            raise ValueError(f"{cube} is not a cube of the domain")
        return float(self.pyramid(power)[cube.level][cube.index])

    def sup(self, cube=None) -> float:
        if cube is None:
            return float(self.values.max())
        if isinstance(cube, LatticeCube):
            return float(self.values[cube.cell_slices()].max())
        return float(self.max_pyramid()[cube.level][cube.index])


def box_sum(sat: np.ndarray, origin: Sequence[int], size: int) -> float:
    """Sum over a box from a zero-padded summed-volume table (inclusion-exclusion)."""
    d = sat.ndim
    total = 0.0
    for corner in range(1 << d):
        idx = []
        sign = 1
        for ax in range(d):
            if corner >> ax & 1:
                idx.append(origin[ax] + size)
            else:
                idx.append(origin[ax])
                sign = -sign
        total += sign * sat[tuple(idx)]
    return float(total)


def _volume(cube, domain: Domain) -> float:
    if isinstance(cube, LatticeCube):
        return (cube.size / domain.side) ** domain.dim
    return 2.0 ** (-cube.level * domain.dim)


def average(f: GridFunction, p: float, cube, w: GridFunction | None = None) -> float:
    """The ``p``-mean of ``|f|`` over ``cube``, optionally with respect to ``w dx``.

    ``p = inf`` gives the maximum over the cells of the cube.
    """
    if p <= 0:
        raise ExponentError("p must be positive")
    if p == INF:
        return f.sup(cube)
    if w is None:
        mass = _volume(cube, f.domain)
        num = f.integral(cube, p)
    else:
        mass = w.integral(cube)
        if mass <= 0:
            raise ZeroMassError(f"weight has no mass on {cube}")
        num = (f.power(p) * w).integral(cube) if p != 1 else (f * w).integral(cube)
    return (num / mass) ** (1.0 / p)


def measure(w: GridFunction | None, cells, domain: Domain | None = None) -> float:
    """``w(A)`` for a boolean cell mask ``A``; Lebesgue measure when ``w`` is None."""
    mask = np.asarray(cells, dtype=bool)
    if w is None:
        if domain is None:
            raise ValueError("domain required for Lebesgue measure")
        return float(mask.sum()) * domain.cell_volume
    return float(w.values[mask.reshape(w.domain.shape)].sum()) * w.domain.cell_volume


@dataclass(frozen=True)
class ExponentTuple:
    """Exponents ``p_1, ..., p_m`` in ``(0, inf]`` and the derived ``p``."""

    ps: tuple[float, ...]

    def __post_init__(self):
        ps = tuple(float(x) for x in self.ps)
        if not ps:
            raise ExponentError("need at least one exponent")
        if any(not (x > 0) for x in ps):
            raise ExponentError(f"exponents must be positive, got {ps}")
        if all(x == INF for x in ps):
            raise ExponentError("at least one exponent must be finite")
        object.__setattr__(self, "ps", ps)

    @classmethod
    def of(cls, *ps) -> "ExponentTuple":
        return cls(tuple(ps))

    @property
    def m(self) -> int:
        return len(self.ps)

    @property
    def p(self) -> float:
        return 1.0 / sum(1.0 / x for x in self.ps)

    @property
    def conjugates(self) -> tuple[float, ...]:
        return tuple(conjugate(x) for x in self.ps)

    @property
    def p_prime(self) -> float:
        return conjugate(self.p)

    def all_at_least_one(self) -> bool:
        return all(x >= 1 for x in self.ps)

    def interior(self) -> bool:
        """``p_j`` in ``(1, inf)`` for all ``j`` and ``p > 1``."""
        return all(1 < x < INF for x in self.ps) and self.p > 1

    def __str__(self):
        return "(" + ",".join(_fmt(x) for x in self.ps) + ")"


def _fmt(x: float) -> str:
    return "inf" if x == INF else f"{x:g}"


# distribution-function based norms


def _levels(f: GridFunction, mu: np.ndarray):
    """Distinct values of ``|f|`` in decreasing order and ``mu({|f| >= y})``."""
    vals = np.abs(f.values).reshape(-1)
    masses = mu.reshape(-1)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    cum = np.cumsum(masses[order])
    # last position of each distinct value in the decreasing sort
    last = np.flatnonzero(np.append(vals[1:] != vals[:-1], True))
    y = vals[last]
    dist = cum[last]
    keep = y > 0
    return y[keep], dist[keep]


def _cell_masses(f: GridFunction, mu: GridFunction | None) -> np.ndarray:
    if mu is None:
        return np.full(f.domain.shape, f.domain.cell_volume)
    f._check_domain(mu)
    return mu.values * f.domain.cell_volume


def weak_norm_measure(f: GridFunction, p: float, mu: GridFunction | None = None) -> float:
    """``sup_t t * mu({|f| > t})**(1/p)`` for the measure ``mu dx``.

    The supremum is approached as ``t`` increases to a value of ``f``, so
    scanning the distinct values is exact.
    """
    if not (0 < p < INF):
        raise ExponentError("weak norms need p in (0, inf)")
    y, dist = _levels(f, _cell_masses(f, mu))
    if y.size == 0:
        return 0.0
    return float(np.max(y * dist ** (1.0 / p)))


def weak_norm(f: GridFunction, p: float, w: GridFunction | None = None) -> float:
    """Weak norm with ``w`` as a multiplier: the measure is ``w**p dx``."""
    return weak_norm_measure(f, p, None if w is None else w.power(p))


def lp_norm_measure(f: GridFunction, p: float, mu: GridFunction | None = None) -> float:
    masses = _cell_masses(f, mu)
    if p == INF:
        support = masses > 0
        return float(np.abs(f.values)[support].max()) if support.any() else 0.0
    a = np.abs(f.values)
    top = float(a.max()) if a.size else 0.0
    if top == 0:
        return 0.0
    # scale by the maximum so tiny values do not underflow when raised to p
    return top * float(np.sum((a / top) ** p * masses) ** (1.0 / p))


def lp_norm(f: GridFunction, p: float, w: GridFunction | None = None) -> float:
    """``||f w||_p`` (Lebesgue measure, ``w`` a multiplier)."""
    g = f if w is None else f * w
    return lp_norm_measure(g, p, None)


def lorentz_norm(f: GridFunction, p: float, s: float, v: GridFunction | None = None) -> float:
    """``(int_0^inf (t v({|f| > t})**(1/p))**s dt/t)**(1/s)``, with ``s = inf`` the weak norm.

    The integrand is constant in the measure between consecutive values of
    ``|f|``, so the integral is a finite sum.  No normalising constant is
    applied: ``L^{p,p}`` equals ``L^p(v)`` only after multiplying by
    :func:`lorentz_lp_factor`, and the indicator of ``E`` has norm
    ``s**(-1/s) v(E)**(1/p)``.
    """
    if not (0 < p < INF):
        raise ExponentError("Lorentz norms need p in (0, inf)")
    if s == INF:
        return weak_norm_measure(f, p, v)
    if not s > 0:
        raise ExponentError("s must be positive")
    y, dist = _levels(f, _cell_masses(f, v))
    if y.size == 0:
        return 0.0
    nxt = np.append(y[1:], 0.0)
    total = np.sum((y ** s - nxt ** s) * dist ** (s / p)) / s
    return float(total ** (1.0 / s))


def lorentz_lp_factor(p: float) -> float:
    """``p**(1/p)``: ``lp_norm = lorentz_lp_factor(p) * lorentz_norm(f, p, p)``."""
    return p ** (1.0 / p)
