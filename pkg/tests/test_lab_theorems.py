import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from dyadiclab import Cube, Domain, ExponentTuple, GridFunction
from dyadiclab.constants import WeightTuple, fw_constant, multilinear_ap
from dyadiclab.errors import ExponentError
from dyadiclab.gridfunc import INF, conjugate
from dyadiclab.lab import (SweepConfig, alpha_beta, improvement_region, lemma34_check, linearization_check,
                           random_family, sharp_fw_factor, sparse_form_identities, theorem_a_experiment,
                           theorem_a_ratios, theorem_b_experiment, theorem_b_ratio, theorem_sweep)
from dyadiclab.lab import testing as tlab
from dyadiclab.sparse import random_sparse
from dyadiclab.weights import lognormal_weight, power_weight

ROOT1 = Cube((0,), 0, (0,))


def ones(d, m):
    return (GridFunction.constant(d),) * m


# exponents


def test_exponent_spot_values():
    rep = alpha_beta(ExponentTuple.of(8, 8))
    assert rep.alpha == pytest.approx(2.0, abs=1e-14) and rep.beta == pytest.approx(4.0, abs=1e-14)
    assert rep.best == pytest.approx(2.0, abs=1e-14)
    rep = alpha_beta(ExponentTuple.of(2, 2))
    assert rep.beta == 2.0 and rep.improvement_region


@given(st.floats(1.01, 50))
def test_m1_beta(p):
    assert alpha_beta(ExponentTuple.of(p)).beta == pytest.approx(max(p, conjugate(p)), rel=1e-14)


@given(st.floats(1, 30), st.floats(1, 30))
def test_m2_region_is_p_between_half_and_one(p1, p2):
    pv = ExponentTuple.of(p1, p2)
    assert improvement_region(pv) == (0.5 <= pv.p <= 1)


def test_m3_region_bound():
    # upper end 1 / (sqrt(3.25) - 1/2) ~ 0.7676
    assert improvement_region(ExponentTuple.of(1.5, 1.5, 1.5))
    assert improvement_region(ExponentTuple.of(2, 2, 2))
    assert not improvement_region(ExponentTuple.of(3, 3, 3))
    assert improvement_region(ExponentTuple.of(1, 1, 1))  # p = 1/m, the closed lower end
    with pytest.raises(ValueError):
        alpha_beta(ExponentTuple.of(0.5, 2))


def test_sharp_factor_trivial_weights():
    d = Domain(1, 4)
    wt = WeightTuple(ones(d, 2), ExponentTuple.of(3, 3))
    assert sharp_fw_factor(wt) == pytest.approx(1.0, rel=1e-14)
    assert math.isnan(alpha_beta(ExponentTuple.of(2, 2), WeightTuple(ones(d, 2), ExponentTuple.of(2, 2))).c_w)


# testing constant


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_testing_single_cube_unit_weight(p):
    d = Domain(1, 4)
    wt = WeightTuple(ones(d, 1), ExponentTuple.of(p))
    for Q0 in (ROOT1, Cube((0,), 2, (1,))):
        res = tlab.testing_constant([Q0], wt, Q0)
        assert res.value == pytest.approx(1.0, rel=1e-12)
        assert res.closed_form == pytest.approx(res.value, rel=1e-12)


def test_testing_two_functions_single_cube_converges_at_once():
    d = Domain(1, 4)
    wt = WeightTuple(ones(d, 2), ExponentTuple.of(3, 3))
    res = tlab.testing_constant([ROOT1], wt, ROOT1)
    assert res.converged and res.iterations <= 2
    assert res.value == pytest.approx(1.0, rel=1e-12)


def test_testing_monotone_under_growth(rng):
    d = Domain(1, 6)
    ws = (lognormal_weight(d, 4, 0.5),)
    wt = WeightTuple(ws, ExponentTuple.of(2.5))
    S = random_sparse(d, 1, 0.3)
    cubes = list(S.cubes)
    prev = 0.0
    for k in range(1, len(cubes) + 1, max(1, len(cubes) // 6)):
        val = tlab.testing_constant(cubes[:k], wt, ROOT1).value
        assert val >= prev * (1 - 1e-12)
        prev = val


def test_testing_experiment_m2():
    d = Domain(1, 5)
    wt = WeightTuple((lognormal_weight(d, 1, 0.4), lognormal_weight(d, 2, 0.4)), ExponentTuple.of(3, 4))
    rep = tlab.testing_experiment(random_sparse(d, 0, 0.5), wt)
    assert rep.passed
    assert all(r["converged"] and r["monotone"] for r in rep.rows)
    with pytest.raises(ExponentError):
        tlab.testing_constant([ROOT1], WeightTuple(ones(d, 2), ExponentTuple.of(1, 2)), ROOT1)


def test_testing_closed_form_against_brute_maximiser(rng):
    """For ``m = 1`` the dual value beats every random normalised input."""
    d = Domain(1, 4)
    w = oracles.random_function(d, rng, 0.5)
    p = 2.0
    wt = WeightTuple((w,), ExponentTuple.of(p))
    S = random_sparse(d, 2, 0.4)
    res = tlab.testing_constant(S, wt, ROOT1)
    v = wt.v.values
    vQ = float(v.sum()) * d.cell_volume
    for _ in range(200):
        f = rng.lognormal(0, 1, d.shape)
        f /= (float(np.sum((f * w.values) ** p)) * d.cell_volume) ** (1 / p)
        A = oracles.sparse_op(d, S.cubes, [GridFunction(d, f)])
        val = float(np.sum(A * v)) * d.cell_volume * vQ ** (-1 / conjugate(p))
        assert val <= res.value * (1 + 1e-12)


# theorems


def test_trivial_weights_ratios_at_most_one():
    d = Domain(1, 4)
    for pv in (ExponentTuple.of(2, 2), ExponentTuple.of(3, 3), ExponentTuple.of(1, 1)):
        wt = WeightTuple(ones(d, 2), pv)
        fs = ones(d, 2)
        ra = theorem_a_ratios([ROOT1], wt, fs)
        assert ra["ratio_general"] == pytest.approx(1.0, rel=1e-12)
        if pv.interior():
            assert ra["ratio_sharp"] == pytest.approx(1.0, rel=1e-12)
        assert theorem_b_ratio([ROOT1], wt, fs)["ratio"] == pytest.approx(1.0, rel=1e-12)


def test_theorem_experiments_report(rng):
    d = Domain(1, 6)
    wt = WeightTuple((power_weight(d, 0.3), power_weight(d, -0.2)), ExponentTuple.of(2, 2))
    S = random_sparse(d, 4, 0.5)
    fam = random_family(wt, 4)
    a = theorem_a_experiment(wt, S, fam, budget=10.0)
    b = theorem_b_experiment(wt, S, fam, budget=10.0)
    assert a.passed and b.passed
    assert 0 < a.fitted < 10 and 0 < b.fitted < 10
    assert math.isnan(a.extra["ratio_sharp"])  # p = 1 has no sharp branch
    assert len(a.rows) == len(fam)
    assert random_family(wt, 4)[0][0].values.tolist() == fam[0][0].values.tolist()


def test_theorem_a_below_one_rejects_small_p():
    d = Domain(1, 3)
    wt = WeightTuple(ones(d, 2), ExponentTuple.of(0.9, 0.9))
    with pytest.raises(ExponentError):
        theorem_a_experiment(wt, [ROOT1], [ones(d, 2)])


def test_sparse_form_identities(rng):
    d = Domain(1, 6)
    S = random_sparse(d, 3, 0.4)
    fs = [oracles.random_function(d, rng) for _ in range(2)]
    g = GridFunction(d, rng.random(d.shape))
    lp, meas, ellp = sparse_form_identities(S, fs, g, 0.6)
    assert lp <= meas * (1 + 1e-12) <= ellp * (1 + 1e-12)
    a, b, _ = sparse_form_identities(S, fs, g)
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("pv", [(2.0, 2.0), (3.0, 6.0)])
def test_linearization_theta_one_is_kolmogorov_route(pv, rng):
    d = Domain(1, 6)
    wt = WeightTuple((lognormal_weight(d, 5, 0.4), lognormal_weight(d, 6, 0.4)), ExponentTuple.of(*pv))
    S = random_sparse(d, 5, 0.5)
    fs = [oracles.random_function(d, rng) for _ in range(2)]
    if wt.pvec.p > 1:
        rep = linearization_check(S, fs, wt, 1.0)
        assert rep.passed
        assert rep.ratio == pytest.approx(1 - 1 / wt.pvec.p, rel=1e-12)
    rep = linearization_check(S, fs, wt, 0.5)
    assert 0 < rep.ratio < INF


def test_product_average_sum_trivial_and_random(rng):
    d = Domain(1, 5)
    pv = ExponentTuple.of(3, 3)
    rep = lemma34_check([ROOT1], WeightTuple(ones(d, 2), pv))
    assert rep.ratio == pytest.approx(1.0, rel=1e-12)
    ratios = []
    for seed in range(5):
        wt = WeightTuple((lognormal_weight(d, seed, 0.5), lognormal_weight(d, seed + 50, 0.5)), pv)
        rep = lemma34_check(random_sparse(d, seed, 0.5), wt)
        ratios.append(rep.ratio)
    assert max(ratios) / min(ratios) <= 4


def test_small_sweep_is_stable():
    cfg = SweepConfig(ExponentTuple.of(2, 2), exponents=(0.0, 0.4), seeds=(0, 1), levels=(4, 5), family_size=2)
    rep = theorem_sweep(cfg)
    assert rep.passed
    assert len(rep.rows) == 2 * 2 * 2
    assert rep.extra["ap_span"] > 1


def test_growth_probe_for_8_8():
    """Along ``|x|^a`` toward the boundary the ratio grows no faster than ``[w]^2``."""
    pv = ExponentTuple.of(8, 8)
    d = Domain(1, 6)
    S = random_sparse(d, 0, 0.5)
    vals = []
    for a in (0.0, 0.4, 0.8):
        wt = WeightTuple((power_weight(d, a),) * 2, pv)
        rep = theorem_a_experiment(wt, S, random_family(wt, 0, 4))
        lhs = max(r["lhs"] / r["norm"] for r in rep.rows)
        ap = multilinear_ap(wt).value
        vals.append((ap, lhs / (fw_constant(wt.v).value * ap ** 2)))
    assert vals[-1][0] > vals[0][0]
    assert max(v for _, v in vals) <= 4 * vals[0][1]
