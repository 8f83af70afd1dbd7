"""Shifted dyadic grids with exact integer coordinates.

A cube of the grid ``D^alpha`` with ``alpha = shift / 3`` at level ``l`` and
integer index ``k`` is the half-open box

    alpha + 2**-l * (k + [0, 1)^d).

Translating the standard grid by a fixed third keeps it nested, and at every
level its boundaries sit at distance ``2**-l / 3`` from those of the unshifted
grid, which is what the one-third trick needs.  All coordinates are handled
as integers in units of ``1 / (3 * 2**l)`` (or ``1 / (3 * 2**L)`` once a
domain resolution is fixed), so containment tests are exact.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import LevelOverflowError, NoCoverError, NoParentError

__all__ = [
    "Domain",
    "Cube",
    "LatticeCube",
    "children",
    "parent",
    "contains",
    "lattice_cover",
    "dyadic_cubes",
    "parse_cube",
]


@dataclass(frozen=True)
class Domain:
    """The base cube ``[0, 1)^dim`` resolved into ``2**(max_level * dim)`` cells."""

    dim: int
    max_level: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.max_level < 1:
            raise ValueError("max_level must be positive")

    @property
    def side(self) -> int:
        """Number of finest cells along each axis."""
        return 1 << self.max_level

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dim

    @property
    def ncells(self) -> int:
        return self.side ** self.dim

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.max_level * self.dim)

    @property
    def unit(self) -> Fraction:
        """Lattice unit ``1 / (3 * 2**L)``."""
        return Fraction(1, 3 << self.max_level)

    def root(self) -> "Cube":
        return Cube((0,) * self.dim, 0, (0,) * self.dim)

    def cell_midpoints(self) -> np.ndarray:
        """Array of shape ``shape + (dim,)`` with the midpoint of every cell."""
        h = 1.0 / self.side
        axes = [(np.arange(self.side) + 0.5) * h] * self.dim
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


@dataclass(frozen=True, order=True)
class Cube:
    """A cube of a shifted dyadic grid.

    ``shift`` holds numerators of thirds (entries in ``{0, 1, 2}``), ``level``
    the generation (side length ``2**-level``) and ``index`` the integer
    position relative to the shifted origin.
    """

    shift: tuple[int, ...]
    level: int
    index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "shift", tuple(int(s) for s in self.shift))
        object.__setattr__(self, "index", tuple(int(k) for k in self.index))
        if len(self.shift) != len(self.index):
            raise ValueError("shift and index must have the same dimension")
        if any(s not in (0, 1, 2) for s in self.shift):
            raise ValueError(f"shift entries must be 0, 1 or 2, got {self.shift}")
        if self.level < 0:
            raise ValueError("negative levels are not represented")

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> Fraction:
        return Fraction(1, 1 << self.level)

    @property
    def volume(self) -> Fraction:
        return self.side ** self.dim

    @property
    def is_unshifted(self) -> bool:
        return not any(self.shift)

    def lower(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(s, 3) + Fraction(k, 1 << self.level)
                     for s, k in zip(self.shift, self.index))

    def upper(self) -> tuple[Fraction, ...]:
        return tuple(lo + self.side for lo in self.lower())

    def units(self, level: int) -> tuple[tuple[int, ...], int]:
        """Lower corner and side as integers in units of ``1 / (3 * 2**level)``."""
        if level < self.level:
            raise ValueError("resolution level must be at least the cube level")
        scale = 1 << (level - self.level)
        lo = tuple(s * (1 << level) + 3 * k * scale for s, k in zip(self.shift, self.index))
        return lo, 3 * scale

    def cell_slices(self, domain: Domain) -> tuple[slice, ...]:
        """Array slices selecting the finest cells of an unshifted cube."""
        if not self.is_unshifted:
            raise ValueError("only unshifted cubes carry cell data")
        if self.level > domain.max_level:
            raise ValueError("cube is finer than the domain resolution")
        width = 1 << (domain.max_level - self.level)
        return tuple(slice(k * width, (k + 1) * width) for k in self.index)

    def in_base(self) -> bool:
        """Whether an unshifted cube lies inside ``[0, 1)^d``."""
        n = 1 << self.level
        return self.is_unshifted and all(0 <= k < n for k in self.index)

    def __str__(self) -> str:
        return "s=<{}>;l=<{}>;k=<{}>".format(
            ",".join(map(str, self.shift)), self.level, ",".join(map(str, self.index)))


_CUBE_RE = re.compile(r"^\s*s=<([^>]*)>;l=<(\d+)>;k=<([^>]*)>\s*$")


def parse_cube(text: str) -> Cube:
    """Inverse of ``str(cube)``."""
    m = _CUBE_RE.match(text)
    if m is None:
        raise ValueError(f"malformed cube text {text!r}")
    shift = tuple(int(t) for t in m.group(1).split(","))
    index = tuple(int(t) for t in m.group(3).split(","))
    return Cube(shift, int(m.group(2)), index)


@dataclass(frozen=True, order=True)
class LatticeCube:
    """Axis-aligned cube whose corners lie on the finest cell lattice.

    Used only by the all-lattice-aligned scope: ``origin`` is in cells and
    ``size`` is the side length in cells.
    """

    origin: tuple[int, ...]
    size: int

    def cell_slices(self) -> tuple[slice, ...]:
        return tuple(slice(o, o + self.size) for o in self.origin)

    def __str__(self) -> str:
        return "o=<{}>;n=<{}>".format(",".join(map(str, self.origin)), self.size)


def children(c: Cube, max_level: int | None = None) -> list[Cube]:
    """The ``2**d`` cubes one level down that partition ``c``."""
    if max_level is not None and c.level >= max_level:
        raise LevelOverflowError(f"{c} is already at the finest level {max_level}")
    base = tuple(2 * k for k in c.index)
    out = []
    for offs in itertools.product((0, 1), repeat=c.dim):
        out.append(Cube(c.shift, c.level + 1, tuple(b + o for b, o in zip(base, offs))))
    return out


def parent(c: Cube) -> Cube:
    if c.level == 0:
        raise NoParentError(f"{c} is a root cube")
    return Cube(c.shift, c.level - 1, tuple(k >> 1 for k in c.index))


def contains(outer: Cube, inner: Cube) -> bool:
    """Whether ``inner`` is a subset of ``outer`` (any shifts, exact)."""
    if outer.dim != inner.dim:
        raise ValueError("dimension mismatch")
    level = max(outer.level, inner.level)
    olo, oside = outer.units(level)
    ilo, iside = inner.units(level)
    return all(o <= i and i + iside <= o + oside for o, i in zip(olo, ilo))


def dyadic_cubes(domain: Domain, level: int | None = None) -> Iterator[Cube]:
    """Unshifted cubes of the base domain, coarse to fine, C-ordered within a level."""
    levels = range(domain.max_level + 1) if level is None else (level,)
    zero = (0,) * domain.dim
    for lv in levels:
        for idx in itertools.product(range(1 << lv), repeat=domain.dim):
            yield Cube(zero, lv, idx)


WINDOW = (Fraction(-1, 3), Fraction(4, 3))


def lattice_cover(lower: Sequence, side, max_level: int) -> Cube:
    """Smallest shifted dyadic cube containing the cube ``lower + [0, side)^d``.

    Coordinates may be ints, Fractions, strings or floats (floats are taken at
    their exact binary value).  Levels run from ``max_level`` down to 0 and
    the first level with a covering cube wins; within it the smallest shift
    per axis is chosen, which is the lexicographically smallest
    ``(shift, index)``.  The returned cube satisfies ``|cover| <= 6**d |q|``
    whenever ``q`` is not finer than the lattice of the resolution.
    """
    lo = [Fraction(x) for x in lower]
    side = Fraction(side)
    if side <= 0:
        raise ValueError("cube side must be positive")
    if any(x < WINDOW[0] or x + side > WINDOW[1] for x in lo):
        raise NoCoverError(f"cube at {lower} with side {side} leaves the search window")
    for level in range(max_level, -1, -1):
        width = Fraction(1, 1 << level)
        if width < side:
            continue
        shift, index = [], []
        for x in lo:
            for s in (0, 1, 2):
                k = (x - Fraction(s, 3)) // width
                start = Fraction(s, 3) + k * width
                if x + side <= start + width:
                    shift.append(s)
                    index.append(int(k))
                    break
            else:
                break
        if len(shift) == len(lo):
            return Cube(tuple(shift), level, tuple(index))
    raise NoCoverError(f"no shifted dyadic cube of level >= 0 covers side {side} at {lower}")
