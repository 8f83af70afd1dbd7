"""Good-lambda comparison of ``A^q_S`` with ``A^r_S`` and the height decay behind it."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..constants import fw_constant
from ..dyadic import Cube, contains
from ..gridfunc import INF, GridFunction, lorentz_norm
from ..operators import CoefficientMap, sparse_q_operator
from ..sparse import height_function
from .report import ExperimentReport, linear_fit

__all__ = [
    "GoodLambdaConfig",
    "good_lambda_experiment",
    "jn_height_experiment",
    "lambda_breakpoints",
    "random_coefficients",
]


@dataclass(frozen=True)
class GoodLambdaConfig:
    """Exponents and grids for one good-lambda run.

    ``lambda_grid = None`` evaluates every breakpoint of the level sets and
    the midpoints between them, which makes the supremum over ``lambda``
    exact.  ``p, s`` select the Lorentz space of the corollary.  The fit
    window starts once the ratio drops below ``plateau`` times its peak and
    stops ``headroom`` units of ``1/gamma`` before the cutoff where the
    numerator vanishes identically.
    """

    q: float = 0.25
    r: float = INF
    gamma_grid: tuple = tuple(1.0 / np.linspace(0.5, 8.0, 76))
    lambda_grid: tuple | None = None
    eta: float = 0.5
    p: float = 1.0
    s: float = 1.0
    min_r2: float = 0.8
    plateau: float = 0.9
    headroom: float = 1.0

    def __post_init__(self):
        if not (0 < self.q < self.r):
            raise ValueError(f"need 0 < q < r, got q={self.q}, r={self.r}")
        grids = [self.gamma_grid] + ([] if self.lambda_grid is None else [self.lambda_grid])
        for g in grids:
            if len(g) == 0 or any(not (math.isfinite(x) and x > 0) for x in g):
                raise ValueError("grids must be finite, non-empty and positive")

    @property
    def gap(self) -> float:
        """``1/q - 1/r``."""
        return 1.0 / self.q - (0.0 if self.r == INF else 1.0 / self.r)


def random_coefficients(S, seed: int, sigma: float = 0.5) -> CoefficientMap:
    """Log-normal coefficients ``a_Q`` on the cubes of ``S`` (in their stored order)."""
    domain = S.domain
    rng = np.random.default_rng(seed)
    return CoefficientMap(domain, {c: float(rng.lognormal(0.0, sigma)) for c in S})


def lambda_breakpoints(aq: np.ndarray, ar: np.ndarray, scale: float) -> np.ndarray:
    """Every ``lambda`` where a level set can change, plus midpoints between them."""
    pts = np.unique(np.concatenate([aq, aq / 2, ar / scale]))
    pts = pts[pts > 0]
    mids = (pts[1:] + pts[:-1]) / 2
    return np.unique(np.concatenate([pts, mids, pts[:1] / 2]))


def _ratios(aq, ar, masses, lams, gamma, gap):
    """``w({A^q > 2 lam, A^r <= gamma^gap lam}) / w({A^q > lam})`` for each ``lam``."""
    lam = np.asarray(lams)[:, None]
    num = ((aq > 2 * lam) & (ar <= gamma ** gap * lam)) @ masses
    den = (aq > lam) @ masses
    return num, den


def _integrated(aq, ar, masses, scale) -> tuple[float, float]:
    """Both measures integrated over ``lambda > 0`` with ``d lambda``.

    ``int w({A^q > 2 lam, A^r <= s lam}) d lam = int (A^q/2 - A^r/s)_+ dw`` and
    ``int w({A^q > lam}) d lam = int A^q dw``; integrating the pointwise-in-
    ``lambda`` inequality keeps its form, so the ratio obeys the same bound.
    """
    num = float(np.sum(masses * np.clip(aq / 2 - ar / scale, 0.0, None)))
    den = float(np.sum(masses * aq))
    return num, den


def good_lambda_experiment(S, a: CoefficientMap, cfg: GoodLambdaConfig,
                           w: GridFunction | None = None, fw: float | None = None) -> ExperimentReport:
    """Distribution ratios per ``gamma`` and the fitted decay.

    Each row reports the worst ratio over ``lambda`` and the ratio of the
    two measures integrated over ``lambda``.  The worst ratio is dominated by
    single finest cells (it is 1 whenever one cell carries both sets), so the
    log of the integrated ratio is what gets regressed on
    ``x = eta / (gamma [w]_FW)`` over the decaying regime (see
    :class:`GoodLambdaConfig`); ``delta = -slope`` must be positive with
    ``R^2 >= cfg.min_r2``.  The corollary constant
    ``C = ||A^q||_{p,s} / ((FW/eta)^gap ||A^r||_{p,s})`` is reported as the
    fitted constant.
    """
    start = time.perf_counter()
    domain = a.domain
    w = GridFunction.constant(domain) if w is None else w
    keep = set(getattr(S, "cubes", S))
    coeffs = CoefficientMap(domain, {c: x for c, x in a.items() if c in keep})
    fw = fw_constant(w).value if fw is None else fw
    aq = sparse_q_operator(coeffs, cfg.q, domain=domain).values.reshape(-1)
    ar = sparse_q_operator(coeffs, cfg.r, domain=domain).values.reshape(-1)
    masses = w.values.reshape(-1) * domain.cell_volume
    rows = []
    xs, ys, inv_gammas = [], [], []
    skipped = 0
    for gamma in sorted(cfg.gamma_grid, reverse=True):
        scale = gamma ** cfg.gap
        lams = lambda_breakpoints(aq, ar, scale) if cfg.lambda_grid is None else np.asarray(cfg.lambda_grid)
        num, den = _ratios(aq, ar, masses, lams, gamma, cfg.gap)
        valid = den > 0
        skipped += int(np.count_nonzero(~valid))
        rat = np.where(valid, num / np.where(valid, den, 1.0), 0.0)
        k = int(np.argmax(rat))
        if cfg.lambda_grid is None:
            inum, iden = _integrated(aq, ar, masses, scale)
        else:
            inum, iden = float(num.sum()), float(den.sum())
        agg = inum / iden if iden > 0 else 0.0
        x = cfg.eta / (gamma * fw)
        rows.append({"gamma": gamma, "x": x, "lambda_worst": float(lams[k]), "numerator": float(num[k]),
                     "denominator": float(den[k]), "ratio_worst": float(rat[k]), "ratio_integrated": agg})
        if agg > 0:
            xs.append(x)
            ys.append(math.log(agg))
            inv_gammas.append(1.0 / gamma)
    xs_a, ys_a, inv_a = np.asarray(xs), np.asarray(ys), np.asarray(inv_gammas)
    # the numerator is empty once 1/gamma >= (A^q / (2 A^r))^(1/gap) everywhere
    cutoff = float(np.max(aq / np.where(ar > 0, ar, np.inf)) / 2) ** (1.0 / cfg.gap) if aq.any() else 0.0
    if len(ys_a):
        peak = int(np.argmax(ys_a))
        window = ((np.arange(len(ys_a)) >= peak) & (ys_a < ys_a[peak] + math.log(cfg.plateau))
                  & (inv_a <= cutoff - cfg.headroom))
        fit = linear_fit(xs_a[window], ys_a[window])
    else:
        fit = linear_fit([], [])
    delta = -fit.slope
    lq = lorentz_norm(GridFunction(domain, aq.reshape(domain.shape)), cfg.p, cfg.s, w)
    lr = lorentz_norm(GridFunction(domain, ar.reshape(domain.shape)), cfg.p, cfg.s, w)
    factor = (fw / cfg.eta) ** cfg.gap
    c_hat = lq / (factor * lr) if lr > 0 else 0.0
    passed = bool(fit.n >= 3 and delta > 0 and fit.r2 >= cfg.min_r2)
    return ExperimentReport(
        name="goodlambda",
        instance={"d": domain.dim, "L": domain.max_level, "q": cfg.q, "r": cfg.r, "eta": cfg.eta,
                  "fw": fw, "cubes": len(coeffs)},
        rows=rows, lhs=lq, rhs=factor * lr, ratio=c_hat, fitted=c_hat, budget=math.nan,
        passed=passed, runtime=time.perf_counter() - start,
        notes=[f"{skipped} (lambda, gamma) pairs with empty denominator skipped"],
        extra={"delta": delta, "r2": fit.r2, "fit_points": fit.n, "skipped": skipped,
               "cutoff": cutoff})


def jn_height_experiment(S, Q0: Cube, w: GridFunction | None = None,
                         lambda_grid: Sequence[float] | None = None, eta: float = 0.5,
                         fw: float | None = None) -> ExperimentReport:
    """``w({x in Q0 : h > lam}) / w(Q0)`` and its exponential decay rate.

    The rate is fitted on the positive values; ``shape = rate [w]_FW / eta``
    is the constant in front of ``eta / [w]_FW``.  The run passes when the
    level sets are monotone and either the rate is positive or the sets
    vanish after the first step.
    """
    start = time.perf_counter()
    cubes = list(getattr(S, "cubes", S))
    if Q0 not in set(cubes):
        raise ValueError("Q0 must belong to the collection")
    domain = (w.domain if w is not None else getattr(S, "domain", None))
    if domain is None:
        raise ValueError("pass a weight or a SparseCollection to fix the domain")
    w = GridFunction.constant(domain) if w is None else w
    fw = fw_constant(w).value if fw is None else fw
    h = height_function(cubes, Q0, domain).values
    inside = np.zeros(domain.shape, dtype=bool)
    inside[Q0.cell_slices(domain)] = True
    total = float(w.values[inside].sum())
    top = int(h.max())
    lams = np.arange(0, top + 1, dtype=float) if lambda_grid is None else np.sort(np.asarray(lambda_grid))
    rows = []
    for lam in lams:
        frac = float(w.values[inside & (h > lam)].sum()) / total
        rows.append({"lambda": float(lam), "measure_ratio": frac})
    fr = np.array([r["measure_ratio"] for r in rows])
    monotone = bool(np.all(np.diff(fr) <= 1e-15))
    pos = fr > 0
    fit = linear_fit(lams[pos], np.log(fr[pos]))
    rate = -fit.slope if fit.n >= 2 else math.inf
    passed = monotone and (rate > 0)
    return ExperimentReport(
        name="jn-height",
        instance={"d": domain.dim, "L": domain.max_level, "Q0": str(Q0), "fw": fw, "eta": eta,
                  "cubes": sum(1 for c in cubes if contains(Q0, c))},
        rows=rows, lhs=float(fr[-1]) if len(fr) else 0.0, rhs=1.0, ratio=float(fr.max()) if len(fr) else 0.0,
        fitted=rate * fw / eta if math.isfinite(rate) else math.inf, budget=math.nan,
        passed=passed, runtime=time.perf_counter() - start,
        extra={"rate": rate, "r2": fit.r2, "monotone": monotone})
