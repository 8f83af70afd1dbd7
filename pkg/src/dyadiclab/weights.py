"""Standard weight families on the grid."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .dyadic import Domain
from .gridfunc import GridFunction

__all__ = ["power_weight", "lognormal_weight", "constant_weight"]


def constant_weight(domain: Domain, c: float = 1.0) -> GridFunction:
    return GridFunction.constant(domain, c)


def power_weight(domain: Domain, a: float, center: Sequence[float] | None = None) -> GridFunction:
    """``|x - center|**a`` at cell midpoints, with the distance clamped below at
    half a cell so the singular cell gets a finite value."""
    center = np.zeros(domain.dim) if center is None else np.asarray(center, dtype=float)
    if center.shape != (domain.dim,):
        raise ValueError(f"center needs {domain.dim} coordinates")
    dist = np.linalg.norm(domain.cell_midpoints() - center, axis=-1)
    dist = np.maximum(dist, 0.5 / domain.side)
    return GridFunction(domain, dist ** a)


def lognormal_weight(domain: Domain, seed: int, sigma: float = 1.0) -> GridFunction:
    rng = np.random.default_rng(seed)
    return GridFunction(domain, rng.lognormal(0.0, sigma, size=domain.shape))
