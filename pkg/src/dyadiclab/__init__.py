"""Dyadic-grid toolkit for sparse forms, weight characteristics and
quantitative weighted inequalities on ``[0, 1)^d``."""

from .dyadic import Cube, Domain, LatticeCube, children, contains, lattice_cover, parent
from .gridfunc import ExponentTuple, GridFunction, average
from .scope import ALL, DYADIC, CubeScope

__version__ = "0.1.0"
