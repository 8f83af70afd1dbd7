import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from dyadiclab import Cube, Domain, ExponentTuple, GridFunction
from dyadiclab.constants import WeightTuple, fw_constant, multilinear_ap
from dyadiclab.errors import ExponentError
from dyadiclab.gridfunc import weak_norm_measure
from dyadiclab.lab import (GoodLambdaConfig, appendix_check, carleson_packing_check, good_lambda_experiment,
                           jn_height_experiment, kolmogorov_check, random_coefficients)
from dyadiclab.lab.kolmogorov import blowup_factor, kolmogorov_optimal_c, kolmogorov_variant_c
from dyadiclab.lab.packing import default_thetas, packing_budget
from dyadiclab.operators import CoefficientMap
from dyadiclab.sparse import random_sparse
from dyadiclab.weights import lognormal_weight, power_weight


def c1(level, k):
    return Cube((0,), level, (k,))


# Kolmogorov


def test_kolmogorov_indicator():
    d = Domain(1, 4)
    mask = np.zeros(16, bool)
    mask[[0, 3, 9]] = True
    f = GridFunction.indicator(d, mask)
    p, th = 2.0, 1.0
    weak = weak_norm_measure(f, p)
    c = kolmogorov_optimal_c(f, p, th)
    # for an indicator the best set is the support: C^th = (p-th)/p |E|^(th/p)
    assert c == pytest.approx(((p - th) / p) ** (1 / th) * weak, rel=1e-13)
    assert c <= weak <= blowup_factor(p, th) * c * (1 + 1e-13)
    assert blowup_factor(p, th) * c == pytest.approx(weak, rel=1e-13)
    rep = kolmogorov_check(f, p, theta_grid=[0.5, 1.0, 1.5])
    assert rep.passed


@given(arrays(float, 8, elements=st.floats(0, 50)), st.sampled_from([0.5, 1.0, 2.0]),
       st.sampled_from([0.25, 0.5, 0.75]))
def test_kolmogorov_c_matches_subset_enumeration(vals, p, frac):
    """Every cell subset stays below ``C`` and the best subset attains it."""
    d = Domain(1, 3)
    f = GridFunction(d, vals)
    th = frac * p
    c = kolmogorov_optimal_c(f, p, th)
    best = 0.0
    cell = d.cell_volume
    for r in range(1, 9):
        for sub in itertools.combinations(range(8), r):
            mass = r * cell
            integral = float(np.sum(vals[list(sub)] ** th)) * cell
            best = max(best, (p - th) / p * integral / mass ** (1 - th / p))
    assert best ** (1 / th) == pytest.approx(c, rel=1e-10, abs=1e-300)


def test_kolmogorov_random_triples(rng):
    for k in range(30):
        d = Domain(int(rng.integers(1, 3)), 3)
        f = oracles.random_function(d, rng, 1.5, zeros=0.2)
        mu = oracles.random_function(d, rng, 0.5) if k % 2 else None
        p = float(rng.choice([0.5, 1.0, 2.0]))
        rep = kolmogorov_check(f, p, mu, theta_grid=[p / 2], seed=k)
        assert rep.passed
        variant = [r for r in rep.rows if r["variant"] == "half-set"][0]
        assert variant["lower"] <= variant["weak_norm"] * (1 + 1e-12)


def test_blowup_monotone_in_theta():
    p = 2.0
    thetas = np.linspace(0.05, 1.99, 50)
    vals = [blowup_factor(p, t) for t in thetas]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 10
    with pytest.raises(ExponentError):
        kolmogorov_optimal_c(GridFunction.constant(Domain(1, 2)), 1.0, 1.0)


def test_variant_uses_superlevel_sets():
    d = Domain(1, 2)
    f = GridFunction(d, [4, 0, 0, 0])
    # E = the top cell: its smaller half carries 4 * 1/8
    assert kolmogorov_variant_c(f, 1.0) == pytest.approx(0.5, rel=1e-14)


# good lambda and heights


def test_good_lambda_single_cube():
    d = Domain(1, 4)
    root = c1(0, 0)
    a = CoefficientMap(d, {root: 2.0})
    cfg = GoodLambdaConfig()
    rep = good_lambda_experiment([root], a, cfg)
    # A^q = A^r = 2: {A^q > 2 lam, A^r <= gamma^gap lam} is empty iff gamma^gap <= 2
    for r in rep.rows:
        if r["gamma"] ** cfg.gap < 2:
            assert r["ratio_worst"] == 0 and r["ratio_integrated"] == 0
        else:
            assert r["ratio_worst"] == 1


def test_good_lambda_fixed_grid_above_max():
    d = Domain(1, 5)
    S = random_sparse(d, 2, 0.5)
    a = random_coefficients(S, 1)
    cfg = GoodLambdaConfig(lambda_grid=(1e6, 2e6))
    rep = good_lambda_experiment(S, a, cfg)
    assert all(r["numerator"] == 0 and r["ratio_worst"] == 0 for r in rep.rows)


def test_random_coefficients_are_deterministic():
    S = random_sparse(Domain(1, 5), 0, 0.5)
    a, b = random_coefficients(S, 3), random_coefficients(S, 3)
    assert dict(a) == dict(b) and len(a) == len(S)


@pytest.mark.parametrize("weight", ["const", "power"])
def test_good_lambda_decay(weight):
    d = Domain(1, 8)
    w = None if weight == "const" else power_weight(d, 0.5)
    for seed in range(3):
        S = random_sparse(d, seed, 0.5)
        rep = good_lambda_experiment(S, random_coefficients(S, seed + 1000), GoodLambdaConfig(), w)
        assert rep.passed, rep.extra
        assert rep.extra["delta"] > 0 and rep.fitted > 0


def test_jn_single_cube_and_chain():
    d = Domain(1, 6)
    root = c1(0, 0)
    rep = jn_height_experiment([root], root, GridFunction.constant(d))
    assert [r["measure_ratio"] for r in rep.rows] == [1.0, 0.0]
    chain = [c1(j, 0) for j in range(7)]
    rep = jn_height_experiment(chain, root, GridFunction.constant(d))
    fr = [r["measure_ratio"] for r in rep.rows]
    assert fr == pytest.approx([2.0 ** -k for k in range(7)] + [0.0], rel=1e-14)
    assert rep.extra["rate"] == pytest.approx(math.log(2), rel=1e-12)
    assert rep.passed


def test_jn_random_is_monotone():
    d = Domain(2, 4)
    for seed in range(5):
        S = random_sparse(d, seed, 0.5)
        rep = jn_height_experiment(S, S.cubes[0], lognormal_weight(d, seed, 0.5))
        assert rep.extra["monotone"] and rep.passed


# packing


def test_packing_zero_exponents_and_unit_functions():
    d = Domain(1, 6)
    root = c1(0, 0)
    for seed in range(5):
        S = random_sparse(d, seed, 0.5)
        ones = [GridFunction.constant(d)] * 2
        rep = carleson_packing_check(S, ones, [0.0, 0.0], root)
        assert rep.ratio == pytest.approx(sum(float(c.volume) for c in S), rel=1e-12)
        assert rep.ratio <= 1 / 0.5
        rep = carleson_packing_check(S, ones, [0.3, 0.3], root)
        assert rep.ratio <= 2 and rep.passed


def test_packing_budget_defaults():
    th = default_thetas([0.3, 0.3])
    assert th == pytest.approx([0.5, 0.5])
    assert packing_budget([0.3, 0.3], th) == pytest.approx(2.5, rel=1e-14)
    with pytest.raises(ExponentError):
        carleson_packing_check([c1(0, 0)], [GridFunction.constant(Domain(1, 2))] * 2, [0.6, 0.5], c1(0, 0), eta=0.5)


def test_packing_random_seeds(rng):
    d = Domain(1, 7)
    fitted = []
    for seed in range(50):
        S = random_sparse(d, seed, 0.5)
        gs = [oracles.random_function(d, rng, 1.5) for _ in range(2)]
        Q = S.cubes[int(rng.integers(len(S)))]
        rep = carleson_packing_check(S, gs, [0.3, 0.3], Q)
        fitted.append(rep.fitted)
    assert max(fitted) <= 2


# appendix


def test_appendix_holds_for_spread_out_weights(rng):
    for i in range(10):
        d = Domain(1, 5)
        ps = tuple(float(x) for x in rng.uniform(1.2, 6, 2))
        wt = WeightTuple((lognormal_weight(d, 2 * i), lognormal_weight(d, 2 * i + 1)), ExponentTuple.of(*ps))
        rep = appendix_check(wt)
        assert rep.passed, rep.rows
        assert rep.rows[0]["holder_holds"]


def test_appendix_fails_near_constant_weights():
    """Near constants the Fujii-Wilson constants move to first order in the
    oscillation while the product characteristic only moves to second order,
    so the exact comparison cannot hold for small perturbations."""
    d = Domain(1, 1)
    eps = 0.1
    w1 = GridFunction(d, [1, 1 + eps])
    w2 = GridFunction(d, [1 + eps, 1])
    wt = WeightTuple((w1, w2), ExponentTuple.of(2, 2))
    b = (1 + eps) ** -2
    ap = (1 + eps) * (1 + b) / 2
    fw_v = (1 + (1 + b) / 2) / (1 + b)
    assert multilinear_ap(wt).value == pytest.approx(ap, rel=1e-14)
    assert fw_constant(wt.v_j(0)).value == pytest.approx(fw_v, rel=1e-14)
    rep = appendix_check(wt)
    assert rep.rows[0]["gamma"] == 2
    assert rep.lhs == pytest.approx(fw_v, rel=1e-14)
    assert rep.rhs == pytest.approx(ap ** 2, rel=1e-14)
    assert not rep.rows[0]["exact_holds"] and not rep.passed
    # the failure disappears once the oscillation is large
    big = WeightTuple((GridFunction(d, [1, 10]), GridFunction(d, [10, 1])), ExponentTuple.of(2, 2))
    assert appendix_check(big).passed


def test_appendix_rejects_endpoint_exponents():
    d = Domain(1, 2)
    wt = WeightTuple((GridFunction.constant(d),) * 2, ExponentTuple.of(1, 2))
    with pytest.raises(ExponentError):
        appendix_check(wt)
