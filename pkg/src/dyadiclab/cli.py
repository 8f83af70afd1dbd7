"""Command line front end: ``dyadiclab <command> [CONFIG] [key=value ...] [flags]``.

Every command reads a plain ``key = value`` config (file and/or inline
overrides), runs one experiment, writes one CSV and prints one summary line
``PASS|FAIL name fitted budget``.  Exit status is 0 when every declared
assertion passes, 2 when one fails and 1 on config, IO or precondition
errors (a one-line diagnostic on stderr names the offending key).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Callable


from .constants import (WeightTuple, ap_constant, fw_constant, fw_prod_constant, ml_fw_constant,
                        multilinear_ap, reverse_holder_check)
from .dyadic import Domain, parse_cube
from .errors import BracketViolation, ConfigError, DyadicError, GeneratorError, NotSparseError, ScopeCostError
from .gridfunc import INF, ExponentTuple, GridFunction
from .io import parse_config, parse_floats, parse_weight, read_config, read_cubes, write_function
from .lab.appendix import appendix_check
from .lab.exponents import alpha_beta
from .lab.goodlambda import GoodLambdaConfig, good_lambda_experiment, random_coefficients
from .lab.kolmogorov import kolmogorov_check
from .lab.packing import carleson_packing_check
from .lab.report import ExperimentReport, spread
from .lab.testing import testing_experiment
from .lab.theorems import SweepConfig, random_family, theorem_a_experiment, theorem_b_experiment, theorem_sweep
from .operators import dyadic_multilinear_maximal, maximal, multilinear_maximal, sparse_operator, sparse_q_operator
from .scope import CubeScope
from .sparse import canonical_witness_ratios, random_sparse, verify_sparse

__all__ = ["main", "run", "COLUMNS"]

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class Cfg:
    """Typed access to the raw ``key -> str`` mapping; remembers which keys were read."""

    def __init__(self, raw: dict[str, str], command: str):
        self.base_dir = raw.pop("__dir__", None)
        self.raw = raw
        self.command = command
        self.used: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.raw

    def str(self, key: str, default: str | None = None) -> str:
        self.used.add(key)
        if key in self.raw:
            return self.raw[key]
        if default is None:
            raise ConfigError(f"{key}: required by {self.command}", key)
        return default

    def _num(self, key, default, conv, what):
        self.used.add(key)
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"{key}: required by {self.command}", key)
            return default
        text = self.raw[key]
        try:
            return INF if what == "real" and text.lower() in ("inf", "infinity") else conv(text)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected {what}, got {text!r}", key) from exc

    def int(self, key: str, default: int | None = None) -> int:
        return self._num(key, default, int, "an integer")

    def float(self, key: str, default: float | None = None) -> float:
        return self._num(key, default, float, "real")

    def floats(self, key: str, default: list[float] | None = None) -> list[float]:
        self.used.add(key)
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"{key}: required by {self.command}", key)
            return list(default)
        vals = parse_floats(self.raw[key], key)
        if not vals:
            raise ConfigError(f"{key}: empty list", key)
        return vals

    def ints(self, key: str, default: list[int] | None = None) -> list[int]:
        """Comma separated integers; ``a..b`` is an inclusive range."""
        self.used.add(key)
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"{key}: required by {self.command}", key)
            return list(default)
        out = []
        try:
            for tok in self.raw[key].replace(",", " ").split():
                if ".." in tok:
                    a, b = tok.split("..")
                    out.extend(range(int(a), int(b) + 1))
                else:
                    out.append(int(tok))
        except ValueError as exc:
            raise ConfigError(f"{key}: expected integers or a..b ranges, got {self.raw[key]!r}", key) from exc
        if not out:
            raise ConfigError(f"{key}: empty list", key)
        return out

    def domain(self) -> Domain:
        d, L = self.int("d", 1), self.int("L", 6)
        if d < 1:
            raise ConfigError(f"d: dimension must be positive, got {d}", "d")
        try:
            return Domain(d, L)
        except (DyadicError, ValueError) as exc:
            raise ConfigError(f"L: {exc}", "L") from exc

    def pvec(self) -> tuple[ExponentTuple, list[str]]:
        """``pvec = 2,2`` or ``p1 = 2``, ``p2 = 2``...; returns the tuple and the key of each entry."""
        if self.has("pvec"):
            vals = self.floats("pvec")
            keys = ["pvec"] * len(vals)
        else:
            keys = []
            j = 1
            while self.has(f"p{j}"):
                keys.append(f"p{j}")
                j += 1
            if not keys:
                raise ConfigError(f"pvec: required by {self.command} (or p1, p2, ...)", "pvec")
            vals = [self.float(k) for k in keys]
        for k, v in zip(keys, vals):
            if not v > 0:
                raise ConfigError(f"{k}: exponents must be positive, got {v:g}", k)
        return ExponentTuple(tuple(vals)), keys

    def weight(self, key: str, domain: Domain, default: str = "const:1") -> GridFunction:
        spec = self.str(key, default)
        w = parse_weight(spec, domain, self.base_dir, key)
        if not w.is_weight:
            raise ConfigError(f"{key}: a weight must be positive and finite", key)
        return w

    def weights(self, m: int, domain: Domain) -> tuple[GridFunction, ...]:
        """``w1..wm``, falling back to ``w`` (shared) and then ``const:1``."""
        if all(self.has(f"w{j + 1}") for j in range(m)):
            return tuple(self.weight(f"w{j + 1}", domain) for j in range(m))
        shared = self.weight("w", domain)
        return tuple(self.weight(f"w{j + 1}", domain) if self.has(f"w{j + 1}") else shared for j in range(m))

    def sparse(self, domain: Domain, seed: int, eta: float):
        src = self.str("sparse", "random")
        if src == "random":
            count = self.int("cubes", 0)
            try:
                return random_sparse(domain, seed, eta, count or None)
            except GeneratorError as exc:
                raise ConfigError(f"cubes: {exc}", "cubes") from exc
        if src.startswith("file:"):
            path = Path(src[5:])
            if self.base_dir is not None and not path.is_absolute():
                path = Path(self.base_dir) / path
            try:
                cubes = read_cubes(path)
            except OSError as exc:
                raise ConfigError(f"sparse: cannot read {path}: {exc.strerror or exc}", "sparse") from exc
            except ValueError as exc:
                raise ConfigError(f"sparse: {exc}", "sparse") from exc
            try:
                return verify_sparse(cubes, eta, domain)
            except NotSparseError as exc:
                raise ConfigError(f"sparse: collection in {path} is not {eta:g}-sparse ({exc})", "sparse") from exc
        raise ConfigError(f"sparse: expected 'random' or 'file:PATH', got {src!r}", "sparse")

    def finish(self):
        extra = sorted(set(self.raw) - self.used)
        if extra:
            raise ConfigError(f"{extra[0]}: unknown key for {self.command}", extra[0])


def _require(ok: bool, key: str, message: str):
    if not ok:
        raise ConfigError(f"{key}: {message}", key)


def _require_pvec(pv: ExponentTuple, keys: list[str], rule: str):
    """Precondition checks on the exponent tuple, naming the first offending key."""
    ps = pv.ps
    if rule in ("ge1", "interior"):
        lo = (lambda x: x > 1 and x < INF) if rule == "interior" else (lambda x: x >= 1)
        for k, x in zip(keys, ps):
            bound = "(1, inf)" if rule == "interior" else "[1, inf]"
            _require(lo(x), k, f"{rule == 'interior' and 'the sharp branch' or 'this command'} needs p_j in {bound}, got {x:g}")
    if rule == "interior":
        _require(pv.p > 1, keys[0], f"the sharp branch needs p > 1, got p = {pv.p:g}")
    if rule == "ge1m":
        _require(pv.p >= 1.0 / pv.m - 1e-12, keys[0], f"needs p >= 1/m, got p = {pv.p:g}")


def _eta(cfg: Cfg, args) -> float:
    eta = args.eta if getattr(args, "eta", None) is not None else cfg.float("eta", 0.5)
    _require(0 < eta <= 1, "eta", f"must lie in (0, 1], got {eta:g}")
    return eta


def _dyadic_only(args, command: str):
    if args.scope != "dyadic":
        raise ConfigError(f"--scope: {command} uses dyadic-scope constants only", "--scope")


# commands


def cmd_constants(cfg: Cfg, args) -> ExperimentReport:
    domain = cfg.domain()
    scope = CubeScope(args.scope)
    try:
        scope.check(domain)
    except ScopeCostError as exc:
        raise ConfigError(f"--scope: {exc}", "--scope") from exc
    rows = []
    if cfg.has("pvec") or cfg.has("p1"):
        pv, keys = cfg.pvec()
        _require_pvec(pv, keys, "ge1")
        wt = WeightTuple(cfg.weights(pv.m, domain), pv)

        def add(name, ch):
            rows.append({"quantity": name, "value": ch.value, "cube": str(ch.cube), "scope": ch.scope,
                         "d": domain.dim, "L": domain.max_level})

        add("ap_multi", multilinear_ap(wt, scope=scope))
        add("fw_v", fw_constant(wt.v, scope))
        if all(x > 1 for x in pv.ps):
            for j in range(pv.m):
                add(f"fw_v{j + 1}", fw_constant(wt.v_j(j), scope))
            add("fw_prod", fw_prod_constant(wt, scope=scope))
        add("ml_fw", ml_fw_constant(wt, scope=scope))
        target = wt.v
    else:
        w = cfg.weight("w", domain)
        p = cfg.float("p", 2.0)
        _require(1 <= p < INF, "p", f"A_p needs p in [1, inf), got {p:g}")
        ap = ap_constant(w, p, scope)
        fw = fw_constant(w, scope)
        for name, ch in (("ap", ap), ("fw", fw)):
            rows.append({"quantity": name, "value": ch.value, "cube": str(ch.cube), "scope": ch.scope,
                         "d": domain.dim, "L": domain.max_level})
        target = w
    rh = reverse_holder_check(target, scope)
    rows.append({"quantity": "reverse_holder_max_ratio", "value": rh.max_ratio, "cube": str(rh.worst_cube),
                 "scope": rh.scope, "d": domain.dim, "L": domain.max_level})
    return ExperimentReport(
        name="constants", instance={"d": domain.dim, "L": domain.max_level, "scope": args.scope},
        rows=rows, lhs=rh.max_ratio, rhs=2.0, ratio=rh.max_ratio / 2.0, fitted=rows[0]["value"], budget=math.nan,
        passed=rh.ok)


def cmd_verify(cfg: Cfg, args) -> ExperimentReport:
    domain = cfg.domain()
    seed = cfg.int("seed", 0)
    eta = _eta(cfg, args)
    src = cfg.str("sparse", "random")
    if src == "random":
        coll = cfg.sparse(domain, seed, eta)
        cubes = list(coll.cubes)
    elif src.startswith("file:"):
        path = Path(src[5:])
        if cfg.base_dir is not None and not path.is_absolute():
            path = Path(cfg.base_dir) / path
        try:
            cubes = read_cubes(path)
        except OSError as exc:
            raise ConfigError(f"sparse: cannot read {path}: {exc.strerror or exc}", "sparse") from exc
    else:
        raise ConfigError(f"sparse: expected 'random' or 'file:PATH', got {src!r}", "sparse")
    notes = []
    try:
        coll = verify_sparse(cubes, eta, domain)
        cubes = list(coll.cubes)
        method = coll.method
        wit = [coll.witness_measure(c) / float(c.volume) for c in cubes]
        passed = True
    except NotSparseError as exc:
        notes.append(str(exc))
        cubes = sorted(set(cubes), key=lambda c: (c.level, c.index))
        method = "none"
        wit = [math.nan] * len(cubes)
        passed = False
    canon = canonical_witness_ratios(cubes, domain) if cubes else []
    rows = [{"cube": str(c), "level": c.level, "canonical_ratio": float(r), "witness_ratio": x, "method": method}
            for c, r, x in zip(cubes, canon, wit)]
    worst = float(min(canon)) if len(cubes) else 1.0
    return ExperimentReport(
        name="verify", instance={"d": domain.dim, "L": domain.max_level, "eta": eta, "seed": seed,
                                 "cubes": len(cubes)},
        rows=rows, lhs=worst, rhs=eta, ratio=eta / worst if worst > 0 else math.inf, fitted=worst,
        budget=eta, passed=passed, notes=notes)


_OPS = ("sparse", "sparse-q", "maximal", "ml-maximal")


def cmd_apply(cfg: Cfg, args) -> ExperimentReport:
    domain = cfg.domain()
    op = args.op or cfg.str("op", "sparse")
    _require(op in _OPS, "op", f"expected one of {', '.join(_OPS)}, got {op!r}")
    m = cfg.int("m", 1)
    _require(m >= 1, "m", "needs at least one function")
    seed = cfg.int("seed", 0)
    fs = [parse_weight(cfg.str(f"f{j + 1}", f"random-lognormal:{seed + j}"), domain, cfg.base_dir, f"f{j + 1}")
          for j in range(m)]
    if op in ("sparse", "sparse-q"):
        S = cfg.sparse(domain, seed, _eta(cfg, args))
        if op == "sparse":
            out = sparse_operator(S, fs)
        else:
            q = cfg.float("q")
            _require(q > 0, "q", f"must be positive, got {q:g}")
            out = sparse_q_operator(S, q, fs)
    elif op == "maximal":
        _require(m == 1, "m", "maximal takes one function")
        out = maximal(fs[0], cfg.weight("w", domain) if cfg.has("w") else None)
    elif cfg.has("pvec") or cfg.has("p1"):
        pv, _ = cfg.pvec()
        _require(pv.m == m, "pvec", f"needs {m} exponents, got {pv.m}")
        out = multilinear_maximal(fs, pv)
    else:
        out = dyadic_multilinear_maximal(fs)
    if cfg.has("result"):
        path = Path(cfg.str("result"))
        if cfg.base_dir is not None and not path.is_absolute():
            path = Path(cfg.base_dir) / path
        write_function(out, path)
    mids = domain.cell_midpoints().reshape(-1, domain.dim)
    rows = [{"cell": i, "x": " ".join(repr(float(t)) for t in mids[i]), "value": float(v)}
            for i, v in enumerate(out.values.reshape(-1))]
    return ExperimentReport(
        name=f"apply-{op}", instance={"d": domain.dim, "L": domain.max_level, "m": m, "seed": seed, "op": op},
        rows=rows, lhs=float(out.values.max()), fitted=float(out.values.max()), passed=True)


def cmd_exponents(cfg: Cfg, args) -> ExperimentReport:
    pv, keys = cfg.pvec()
    _require_pvec(pv, keys, "ge1")
    rep = alpha_beta(pv)
    beta_ok = rep.beta == max([pv.p, *pv.conjugates])
    row = {"pvec": str(pv), "p": pv.p, "alpha": rep.alpha, "beta": rep.beta, "best": rep.best,
           "improvement_region": rep.improvement_region, "appendix_gamma": rep.appendix_gamma,
           "appendix_delta": rep.appendix_delta}
    return ExperimentReport(name="exponents", instance={"pvec": str(pv)}, rows=[row], fitted=rep.best,
                            budget=rep.beta, passed=bool(beta_ok and rep.alpha >= 1 and rep.beta >= 1))


def cmd_goodlambda(cfg: Cfg, args) -> ExperimentReport:
    _dyadic_only(args, "goodlambda")
    domain = cfg.domain()
    seeds = cfg.ints("seeds", [cfg.int("seed", 0)])
    eta = _eta(cfg, args)
    q, r = cfg.float("q", 0.25), cfg.float("r", INF)
    _require(0 < q < r, "q", f"need 0 < q < r, got q={q:g}, r={r:g}")
    kw = {}
    if cfg.has("gamma_grid"):
        kw["gamma_grid"] = tuple(cfg.floats("gamma_grid"))
    if cfg.has("lambda_grid"):
        kw["lambda_grid"] = tuple(cfg.floats("lambda_grid"))
    try:
        gl = GoodLambdaConfig(q=q, r=r, eta=eta, p=cfg.float("lorentz_p", 1.0), s=cfg.float("lorentz_s", 1.0),
                              min_r2=cfg.float("min_r2", 0.8), **kw)
    except ValueError as exc:
        raise ConfigError(f"gamma_grid: {exc}", "gamma_grid") from exc
    w = cfg.weight("w", domain)
    sigma = cfg.float("coeff_sigma", 0.5)
    bound = cfg.float("spread_budget", 4.0)
    fw = fw_constant(w).value
    rows, consts, ok = [], [], True
    for seed in seeds:
        S = random_sparse(domain, seed, eta)
        rep = good_lambda_experiment(S, random_coefficients(S, seed + 1000, sigma), gl, w, fw)
        ok &= rep.passed
        consts.append(rep.fitted)
        for row in rep.rows:
            rows.append({"seed": seed, **row, "delta": rep.extra["delta"], "r2": rep.extra["r2"],
                         "c_hat": rep.fitted, "run_pass": rep.passed})
    sp = spread(consts)
    return ExperimentReport(
        name="goodlambda", instance={"d": domain.dim, "L": domain.max_level, "q": q, "r": r, "eta": eta,
                                     "seeds": seeds, "fw": fw},
        rows=rows, lhs=max(consts), rhs=min(consts), ratio=sp, fitted=sp, budget=bound,
        passed=bool(ok and sp <= bound))


def _roots(cfg: Cfg, S):
    spec = cfg.str("roots", "all")
    if spec == "all":
        return None
    if spec == "root":
        return [S.domain.root()]
    try:
        roots = [parse_cube(t) for t in spec.split()]
    except ValueError as exc:
        raise ConfigError(f"roots: {exc}", "roots") from exc
    for c in roots:
        _require(c in S, "roots", f"{c} is not in the collection")
    return roots


def cmd_testing(cfg: Cfg, args) -> ExperimentReport:
    _dyadic_only(args, "testing")
    domain = cfg.domain()
    seed = cfg.int("seed", 0)
    pv, keys = cfg.pvec()
    _require_pvec(pv, keys, "interior")
    wt = WeightTuple(cfg.weights(pv.m, domain), pv)
    S = cfg.sparse(domain, seed, _eta(cfg, args))
    rep = testing_experiment(S, wt, _roots(cfg, S), max_iter=cfg.int("max_iter", 200))
    rep.instance["seed"] = seed
    return rep


def _theorem(cfg: Cfg, args, kind: str) -> ExperimentReport:
    _dyadic_only(args, f"theorem-{kind}")
    pv, keys = cfg.pvec()
    branch = cfg.str("branch", "auto") if kind == "a" else "general"
    _require(branch in ("auto", "general", "sharp"), "branch", f"expected auto, general or sharp, got {branch!r}")
    _require_pvec(pv, keys, "interior" if branch == "sharp" else "ge1")
    _require_pvec(pv, keys, "ge1m")
    if cfg.has("exponents"):
        sweep = SweepConfig(pv, exponents=tuple(cfg.floats("exponents")),
                            seeds=tuple(cfg.ints("seeds", list(range(6)))),
                            levels=tuple(cfg.ints("levels", [6, 8])), family_size=cfg.int("family_size", 4),
                            drift=cfg.float("drift", 4.0), eta=_eta(cfg, args), kind=kind)
        cfg.used.add("seed")
        rep = theorem_sweep(sweep)
        if branch == "sharp" and "ratio_sharp" in rep.extra["budgets"]:
            rep.notes.append(f"sharp budget {rep.extra['budgets']['ratio_sharp']!r}")
        return rep
    domain = cfg.domain()
    seed = cfg.int("seed", 0)
    wt = WeightTuple(cfg.weights(pv.m, domain), pv)
    S = cfg.sparse(domain, seed, _eta(cfg, args))
    family = random_family(wt, seed, cfg.int("family_size", 4))
    budget = cfg.float("budget", INF)
    run = theorem_a_experiment if kind == "a" else theorem_b_experiment
    return run(wt, S, family, budget=budget, seed=seed)


def cmd_theorem_a(cfg: Cfg, args) -> ExperimentReport:
    return _theorem(cfg, args, "a")


def cmd_theorem_b(cfg: Cfg, args) -> ExperimentReport:
    return _theorem(cfg, args, "b")


def cmd_kolmogorov(cfg: Cfg, args) -> ExperimentReport:
    domain = cfg.domain()
    seed = cfg.int("seed", 0)
    p = cfg.float("p", 1.0)
    _require(0 < p < INF, "p", f"must lie in (0, inf), got {p:g}")
    thetas = cfg.floats("thetas", [p / 4, p / 2, 3 * p / 4])
    for th in thetas:
        _require(0 < th < p, "thetas", f"every theta must lie in (0, p) = (0, {p:g}), got {th:g}")
    count = cfg.int("functions", 1)
    _require(count >= 1, "functions", "needs at least one function")
    samples = cfg.int("E_samples", 16)
    mu = cfg.weight("mu", domain) if cfg.has("mu") else None
    rows, ok, worst = [], True, 0.0
    for i in range(count):
        key = "f" if count == 1 else f"f{i + 1}"
        spec = cfg.str(key, f"random-lognormal:{seed + i}:1")
        f = parse_weight(spec, domain, cfg.base_dir, key)
        rep = kolmogorov_check(f, p, mu, thetas, samples, seed + i, strict=False)
        ok &= rep.passed
        worst = max(worst, rep.ratio)
        rows += [{"function": i, **r} for r in rep.rows]
    return ExperimentReport(
        name="kolmogorov", instance={"d": domain.dim, "L": domain.max_level, "p": p, "seed": seed,
                                     "functions": count},
        rows=rows, ratio=worst, fitted=worst, budget=1.0, passed=bool(ok))


def cmd_packing(cfg: Cfg, args) -> ExperimentReport:
    domain = cfg.domain()
    seed = cfg.int("seed", 0)
    alphas = cfg.floats("alphas", [0.3, 0.3])
    _require(all(a >= 0 for a in alphas) and sum(alphas) < 1, "alphas",
             f"need alpha_j >= 0 with sum < 1, got {alphas}")
    thetas = cfg.floats("thetas") if cfg.has("thetas") else None
    if thetas is not None:
        _require(len(thetas) == len(alphas) and abs(sum(thetas) - 1) <= 1e-12
                 and all(t > a for a, t in zip(alphas, thetas)), "thetas",
                 "need one theta_j > alpha_j per exponent with sum 1")
    eta = _eta(cfg, args)
    S = cfg.sparse(domain, seed, eta)
    gs = [parse_weight(cfg.str(f"g{j + 1}", f"random-lognormal:{seed + 100 + j}"), domain, cfg.base_dir,
                       f"g{j + 1}") for j in range(len(alphas))]
    try:
        Q = parse_cube(cfg.str("Q", str(domain.root())))
    except ValueError as exc:
        raise ConfigError(f"Q: {exc}", "Q") from exc
    rep = carleson_packing_check(S, gs, alphas, Q, eta=eta, thetas=thetas, strict=False)
    rep.instance["seed"] = seed
    return rep


def cmd_appendix(cfg: Cfg, args) -> ExperimentReport:
    domain = cfg.domain()
    pv, keys = cfg.pvec()
    for k, x in zip(keys, pv.ps):
        _require(x > 1, k, f"needs p_j in (1, inf], got {x:g}")
    _require(pv.p > 1.0 / pv.m, keys[0], f"needs p > 1/m, got p = {pv.p:g}")
    scope = CubeScope(args.scope)
    try:
        scope.check(domain)
    except ScopeCostError as exc:
        raise ConfigError(f"--scope: {exc}", "--scope") from exc
    wt = WeightTuple(cfg.weights(pv.m, domain), pv)
    return appendix_check(wt, scope)


# CSV columns per command, shown in --help.
COLUMNS: dict[str, dict[str, str]] = {
    "constants": {
        "quantity": "ap, fw (single weight) or ap_multi, fw_v, fw_vj, fw_prod, ml_fw (tuple), "
                    "then reverse_holder_max_ratio",
        "value": "the characteristic", "cube": "a cube attaining it", "scope": "dyadic or all",
        "d": "dimension", "L": "finest level"},
    "verify": {
        "cube": "cube id s=..;l=..;k=..", "level": "dyadic level",
        "canonical_ratio": "|part not covered by smaller cubes| / |Q|",
        "witness_ratio": "|E_Q| / |Q| of the verified witness", "method": "canonical, flow or none"},
    "apply": {"cell": "row-major cell index", "x": "cell midpoint", "value": "operator value on the cell"},
    "exponents": {
        "pvec": "exponent tuple", "p": "harmonic exponent", "alpha": "alpha", "beta": "max(p, p_j')",
        "best": "min(alpha, beta)", "improvement_region": "1 if 1/m <= p <= 1/(sqrt(m+1/4)-1/2)",
        "appendix_gamma": "min_j p_j'/p", "appendix_delta": "max_j p_j'/p_j"},
    "goodlambda": {
        "seed": "sparse seed (coefficients use seed+1000)", "gamma": "gamma", "x": "eta/(gamma [w]_FW)",
        "lambda_worst": "lambda attaining the worst ratio", "numerator": "w({A^q>2lam, A^r<=gamma^gap lam})",
        "denominator": "w({A^q>lam})", "ratio_worst": "sup over lambda of the ratio",
        "ratio_integrated": "ratio of the lambda-integrated measures (fitted)", "delta": "fitted decay",
        "r2": "fit R^2", "c_hat": "Lorentz constant of the run", "run_pass": "1 if the fit passed"},
    "testing": {
        "Q0": "root cube", "M": "testing constant (lower bound for m >= 2)", "strategy": "closed-form or alternating",
        "iterations": "sweeps", "converged": "1 if a fixed point was reached",
        "monotone": "1 if the trace never decreased", "dual_route": "direct evaluation (m = 1)",
        "ok": "row verdict"},
    "theorem-a": {
        "instance": "family member", "ap": "[w]_p", "fw": "[w^p]_FW", "c_w": "sharp FW factor",
        "lhs": "||A_S f||_{L^{p,oo}(w^p)}", "norm": "prod ||f_j w_j||_{p_j}",
        "ratio_general": "lhs / (fw ap norm)", "ratio_sharp": "lhs / (c_w ap norm)",
        "ratio_proof_constant": "lhs / (fw^(2m) ap norm)",
        "L, a, seed, ratio": "sweep mode: level, power exponent, seed, general ratio"},
    "theorem-b": {
        "instance": "family member", "ap": "[w]_p", "fw": "[w^p]_FW",
        "lhs": "||A_S(f/w) w||_{L^{p,oo}}", "norm": "prod ||f_j||_{p_j}",
        "ratio": "lhs / (fw ap norm)", "L, a, seed": "sweep mode: level, power exponent, seed"},
    "kolmogorov": {
        "function": "function index", "variant": "theta or half-set", "theta": "theta",
        "C": "optimal constant", "C_sampled": "best constant over sampled sets",
        "weak_norm": "||f||_{p,oo}", "lower": "lower bracket", "upper": "upper bracket", "ok": "row verdict"},
    "packing": {
        "cubes": "cubes of S inside Q", "lhs": "Carleson sum", "rhs": "prod <g_j>_Q^alpha_j |Q|",
        "ratio": "lhs / rhs", "theta_budget": "prod (1/(1-alpha_j/theta_j))^theta_j",
        "fitted": "ratio / theta_budget", "bound": "1/eta"},
    "appendix": {
        "ap": "[w]_p", "min_fw_v": "min_j [v_j]_FW", "lhs": "min_j [v_j]_FW^(1/p)", "rhs": "[w]_p^gamma",
        "exact_holds": "1 if lhs <= rhs", "fw_prod": "product FW constant", "ml_fw_v": "FW constant of (v_j)",
        "holder_holds": "1 if fw_prod <= ml_fw_v", "gamma": "min_j p_j'/p", "delta": "max_j p_j'/p_j",
        "fit_prod_over_fw": "fw_prod / lhs", "fit_ml_over_ap_delta": "ml_fw_v / ap^delta",
        "fit_prod_over_ap_best": "fw_prod / ap^min(gamma, delta)"},
}

KEYS: dict[str, str] = {
    "constants": "d, L, w, p  |  or  pvec (or p1..pm), w1..wm",
    "verify": "d, L, sparse, eta, seed, cubes",
    "apply": "d, L, op, m, f1..fm, sparse, eta, seed, cubes, q, w, pvec, result",
    "exponents": "pvec (or p1..pm)",
    "goodlambda": "d, L, seed or seeds, eta, q, r, w, coeff_sigma, gamma_grid, lambda_grid, lorentz_p, "
                  "lorentz_s, min_r2, spread_budget",
    "testing": "d, L, seed, pvec, w/w1..wm, sparse, eta, cubes, roots, max_iter",
    "theorem-a": "d, L, seed, pvec, w/w1..wm, sparse, eta, cubes, family_size, budget, branch  |  "
                 "sweep: pvec, exponents, seeds, levels, family_size, drift, eta, branch",
    "theorem-b": "d, L, seed, pvec, w/w1..wm, sparse, eta, cubes, family_size, budget  |  "
                 "sweep: pvec, exponents, seeds, levels, family_size, drift, eta",
    "kolmogorov": "d, L, seed, p, thetas, functions, f or f1..fn, mu, E_samples",
    "packing": "d, L, seed, alphas, thetas, g1..gm, Q, sparse, eta, cubes",
    "appendix": "d, L, pvec, w/w1..wm",
}

COMMANDS: dict[str, Callable] = {
    "constants": cmd_constants, "verify": cmd_verify, "apply": cmd_apply, "exponents": cmd_exponents,
    "goodlambda": cmd_goodlambda, "testing": cmd_testing, "theorem-a": cmd_theorem_a,
    "theorem-b": cmd_theorem_b, "kolmogorov": cmd_kolmogorov, "packing": cmd_packing,
    "appendix": cmd_appendix,
}


def _epilog(name: str) -> str:
    cols = "\n".join(f"  {k:<24} {v}" for k, v in COLUMNS[name].items())
    return f"config keys: {KEYS[name]}\n\nCSV columns:\n{cols}"


class _Parser(argparse.ArgumentParser):
    """Usage errors are config errors: exit 1, keeping 2 for failed assertions."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("config", nargs="?", help="key = value config file")
    common.add_argument("overrides", nargs="*", metavar="key=value", help="inline config entries (win over the file)")
    common.add_argument("--scope", choices=("dyadic", "all"), default="dyadic", help="cube family for constants")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="CSV path (default: stdout)")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    parser = _Parser(prog="dyadiclab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], epilog=_epilog(name),
                            formatter_class=argparse.RawDescriptionHelpFormatter,
                            help=f"{name} experiment")
        if name in ("verify", "packing", "testing", "theorem-a", "theorem-b", "goodlambda", "apply"):
            sp.add_argument("--eta", type=float, help="sparseness constant (overrides the config)")
        if name == "apply":
            sp.add_argument("--op", choices=_OPS, help="operator to apply")
    return parser


def _load(args) -> dict[str, str]:
    raw: dict[str, str] = {}
    if args.config is not None:
        if "=" in args.config and not Path(args.config).exists():
            args.overrides.insert(0, args.config)
        else:
            raw = read_config(args.config)
    inline = parse_config("\n".join(args.overrides), "<command line>") if args.overrides else {}
    raw.update(inline)
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    return raw


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; usage errors already printed their message
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        cfg = Cfg(_load(args), args.command)
        report = COMMANDS[args.command](cfg, args)
        cfg.finish()
    except BracketViolation as exc:
        print(f"FAIL {args.command}: {exc}", file=stderr)
        return EXIT_FAIL
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_ERROR
    for k in ("seed", "seeds"):
        if k in cfg.raw and k not in report.instance:
            report.instance[k] = cfg.raw[k]
    text = report.to_csv(timestamp=not args.no_timestamp)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"error: --out: {exc.strerror or exc}", file=stderr)
            return EXIT_ERROR
    else:
        stdout.write(text)
    for note in report.notes:
        print(f"note: {note}", file=stderr)
    print(report.summary_line(), file=stdout)
    return EXIT_OK if report.passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
