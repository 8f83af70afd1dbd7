import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from dyadiclab import Cube, Domain, GridFunction, lattice_cover
from dyadiclab.gridfunc import INF, lp_norm, weak_norm
from dyadiclab.operators import (CoefficientMap, cov_both_sides, dyadic_multilinear_maximal, maximal,
                                 multilinear_maximal, sparse_form, sparse_operator, sparse_q_operator)
from dyadiclab.sparse import default_base, random_sparse, sparse_from_maximal

F = Fraction


def c1(level, k):
    return Cube((0,), level, (k,))


def test_sparse_operator_examples():
    d = Domain(1, 1)
    one = GridFunction.constant(d)
    np.testing.assert_array_equal(sparse_operator([c1(0, 0)], [one]).values, [1, 1])
    np.testing.assert_array_equal(sparse_operator([c1(0, 0), c1(1, 0)], [one, one]).values, [2, 1])


def test_maximal_examples():
    d = Domain(1, 2)
    np.testing.assert_array_equal(maximal(GridFunction.constant(d, 2.5)).values, [2.5] * 4)
    np.testing.assert_array_equal(maximal(GridFunction(d, [1, 1, 0, 0])).values, [1, 1, 0.5, 0.5])


@pytest.mark.parametrize("domain", [Domain(1, 6), Domain(2, 3)], ids=str)
@pytest.mark.parametrize("m", [1, 2, 3])
def test_operators_match_naive_loops(domain, m, rng):
    for seed in range(3):
        S = random_sparse(domain, seed, 0.3)
        fs = [oracles.random_function(domain, rng, zeros=0.1) for _ in range(m)]
        want = oracles.sparse_op(domain, S.cubes, fs)
        np.testing.assert_allclose(sparse_operator(S, fs).values, want, rtol=1e-12)
        np.testing.assert_allclose(sparse_q_operator(S, 1.0, fs).values, want, rtol=1e-12)
        coeffs = dict(CoefficientMap.from_averages(S, fs))
        for q in (0.5, 2.0, INF):
            np.testing.assert_allclose(sparse_q_operator(S, q, fs).values,
                                       oracles.sparse_q_op(domain, coeffs, q), rtol=1e-12)
        np.testing.assert_allclose(dyadic_multilinear_maximal(fs).values, oracles.maximal(domain, fs), rtol=1e-12)
        ps = list(rng.choice([0.5, 1.0, 3.0, INF], size=m))
        np.testing.assert_allclose(multilinear_maximal(fs, ps).values, oracles.maximal(domain, fs, ps), rtol=1e-12)
        g = oracles.random_function(domain, rng)
        for p, kind in ((1.0, "ellp"), (0.5, "ellp"), (0.5, "ellp-measure")):
            assert sparse_form(S, fs, g, p, kind) == pytest.approx(
                oracles.sparse_form(domain, S.cubes, fs, g, p, kind), rel=1e-12)


def test_weighted_and_restricted_maximal(rng):
    d = Domain(1, 5)
    f = oracles.random_function(d, rng)
    w = oracles.random_function(d, rng, 0.5)
    P = random_sparse(d, 3, 0.5).cubes
    want = np.zeros(d.shape)
    for c in P:
        mask = oracles.cube_mask(d, c)
        avg = float((f.values * w.values)[mask].sum() / w.values[mask].sum())
        want[mask] = np.maximum(want[mask], avg)
    np.testing.assert_allclose(maximal(f, w, P).values, want, rtol=1e-12)


def test_single_cube_all_q_agree(rng):
    d = Domain(2, 3)
    a = CoefficientMap(d, {Cube((0, 0), 1, (1, 0)): 2.5})
    vals = [sparse_q_operator(a, q).values for q in (0.3, 1.0, 4.0, INF)]
    for v in vals[1:]:
        np.testing.assert_allclose(v, vals[0], rtol=1e-14)


@given(st.integers(0, 10 ** 6), st.floats(0.2, 5), st.floats(0.2, 5))
def test_lq_monotone(seed, q, r):
    d = Domain(1, 6)
    rng = np.random.default_rng(seed)
    S = random_sparse(d, seed, 0.4)
    a = CoefficientMap(d, {c: float(rng.lognormal()) for c in S})
    lo, hi = min(q, r), max(q, r)
    assert np.all(sparse_q_operator(a, hi).values <= sparse_q_operator(a, lo).values * (1 + 1e-12))
    assert np.all(sparse_q_operator(a, INF).values <= sparse_q_operator(a, hi).values * (1 + 1e-12))


def test_a_infinity_below_dyadic_maximal(rng):
    d = Domain(2, 4)
    for seed in range(5):
        S = random_sparse(d, seed, 0.3)
        fs = [oracles.random_function(d, rng, zeros=0.2) for _ in range(2)]
        top = sparse_q_operator(S, INF, fs).values
        np.testing.assert_allclose(top, dyadic_multilinear_maximal(fs, S).values, rtol=1e-14)
        assert np.all(top <= dyadic_multilinear_maximal(fs).values * (1 + 1e-14))


def test_sparse_form_fubini(rng):
    d = Domain(1, 6)
    for seed in range(5):
        S = random_sparse(d, seed, 0.5)
        fs = [oracles.random_function(d, rng) for _ in range(2)]
        mask = rng.random(d.shape) < 0.4
        g = GridFunction.indicator(d, mask)
        lhs = sparse_form(S, fs, g, 1.0)
        rhs = float(sparse_operator(S, fs).values[mask].sum()) * d.cell_volume
        assert lhs == pytest.approx(rhs, rel=1e-12)
    root = c1(0, 0)
    f = GridFunction(d, np.arange(1.0, 65.0))
    assert sparse_form([root], [f], GridFunction.constant(d, 2.0)) == pytest.approx(32.5 * 2.0, rel=1e-14)


@given(arrays(float, 64, elements=st.floats(0, 100)))
def test_maximal_weak_type_one_one(vals):
    d = Domain(1, 6)
    f = GridFunction(d, vals)
    assert weak_norm(maximal(f), 1) <= lp_norm(f, 1) * (1 + 1e-12) + 1e-300


def test_cov_examples():
    d = Domain(1, 4)
    v = GridFunction(d, np.linspace(1, 3, 16))
    Q = Cube((0,), 1, (1,))
    a = CoefficientMap(d, {Q: 3.0})
    sides = cov_both_sides([Q], a, 2.5, v)
    expect = 3.0 * v.integral(Q) ** (1 / 2.5)
    assert sides.lhs == pytest.approx(expect, rel=1e-13)
    assert sides.rhs == pytest.approx(expect, rel=1e-13)


def test_cov_q1_collapse(rng):
    d = Domain(2, 3)
    S = random_sparse(d, 1, 0.3)
    a = CoefficientMap(d, {c: float(rng.lognormal()) for c in S})
    v = oracles.random_function(d, rng)
    sides = cov_both_sides(S, a, 1.0, v)
    total = sum(a[c] * v.integral(c) for c in S)
    assert sides.lhs == pytest.approx(total, rel=1e-12)
    assert sides.rhs == pytest.approx(total, rel=1e-12)
    assert sides.rhs_literal == pytest.approx(total, rel=1e-12)


def test_cov_q2_two_sided_and_literal_reading_fails():
    """For ``q = 2`` the weighted inner sum gives ``rhs^2 <= lhs^2 <= 2 rhs^2``
    exactly; the literal reading grows like the square root of the chain length."""
    lit = []
    for L in (4, 8, 12):
        d = Domain(1, L)
        chain = [c1(j, 0) for j in range(L + 1)]
        a = CoefficientMap(d, {c: 1.0 for c in chain})
        s = cov_both_sides(chain, a, 2.0, GridFunction.constant(d))
        assert s.rhs <= s.lhs * (1 + 1e-12) and s.lhs <= math.sqrt(2) * s.rhs * (1 + 1e-12)
        lit.append(s.rhs_literal / s.lhs)
    assert lit[0] < lit[1] < lit[2]
    assert lit[2] > math.sqrt(2)


def test_cov_random_two_sided(rng):
    for L in (4, 6):
        d = Domain(1, L)
        for seed in range(5):
            S = random_sparse(d, seed, 0.2)
            a = CoefficientMap(d, {c: float(rng.lognormal()) for c in S})
            v = oracles.random_function(d, rng)
            s = cov_both_sides(S, a, 2.0, v)
            assert s.rhs <= s.lhs * (1 + 1e-12) <= math.sqrt(2) * s.rhs * (1 + 1e-11)


# lattice reduction: arbitrary lattice cubes q go to one of 3^d shifted grids


def _overlaps(lo, hi, n):
    """Overlap lengths of [lo, hi) with the cells [i/n, (i+1)/n)."""
    return np.array([max(F(0), min(hi, F(i + 1, n)) - max(lo, F(i, n))) for i in range(n)], dtype=float)


def _box_average(f, lo, side):
    n = f.domain.side
    weights = None
    for x in lo:
        ov = _overlaps(x, x + side, n)
        weights = ov if weights is None else np.multiply.outer(weights, ov)
    return float(np.sum(f.values * weights)) / float(side) ** f.domain.dim


def _indicator(points, lo, side):
    inside = np.ones(points.shape[:-1], bool)
    for k, x in enumerate(lo):
        inside &= (points[..., k] >= float(x)) & (points[..., k] < float(x + side))
    return inside


@pytest.mark.parametrize("d,L", [(1, 5), (2, 3)])
def test_lattice_reduction(d, L, rng):
    """``A_S f <= 6^d sum_alpha A_{S^alpha} f`` with ``S^alpha`` the covering cubes of grid alpha."""
    dom = Domain(d, L)
    f = oracles.random_function(dom, rng)
    N = 3 << L
    unit = F(1, N)
    qs = []
    for _ in range(40):
        s = int(rng.integers(3, N + 1))
        qs.append(([unit * int(rng.integers(0, N - s + 1)) for _ in range(d)], unit * s))
    covers = [lattice_cover(lo, side, L) for lo, side in qs]
    grid = (np.arange(2 * N) + 0.5) / (2 * N)
    pts = np.stack(np.meshgrid(*([grid] * d), indexing="ij"), axis=-1)
    lhs = np.zeros(pts.shape[:-1])
    per_shift: dict = {}
    for (lo, side), Q in zip(qs, covers):
        lhs += _box_average(f, lo, side) * _indicator(pts, lo, side)
        per_shift.setdefault(Q.shift, set()).add(Q)
    rhs = np.zeros_like(lhs)
    for fam in per_shift.values():
        for Q in fam:
            mult = sum(1 for c in covers if c == Q)
            rhs += mult * _box_average(f, Q.lower(), Q.side) * _indicator(pts, Q.lower(), Q.side)
    assert len(per_shift) <= 3 ** d
    assert np.all(lhs <= 6 ** d * rhs * (1 + 1e-12))


def test_lattice_reduction_average_bound(rng):
    dom = Domain(1, 6)
    f = oracles.random_function(dom, rng)
    N = 3 << 6
    for _ in range(200):
        s = int(rng.integers(3, N + 1))
        lo = [F(int(rng.integers(0, N - s + 1)), N)]
        Q = lattice_cover(lo, F(s, N), 6)
        assert _box_average(f, lo, F(s, N)) <= 6 * _box_average(f, Q.lower(), Q.side) * (1 + 1e-12)


def test_sparse_from_maximal_dominates_maximal(rng):
    """Each point sits in a stopping cube one ladder step below ``M^D``."""
    d = Domain(1, 6)
    base = default_base(2, 1)
    for _ in range(5):
        fs = [oracles.random_function(d, rng, 1.5) for _ in range(2)]
        S = sparse_from_maximal(fs)
        A = sparse_operator(S, fs).values
        M = dyadic_multilinear_maximal(fs).values
        assert np.all(M <= base * A * (1 + 1e-12))


def test_coefficient_map_validation():
    d = Domain(1, 2)
    with pytest.raises(ValueError):
        CoefficientMap(d, {c1(0, 0): 0.0})
    with pytest.raises(ValueError):
        CoefficientMap(d, {Cube((1,), 0, (0,)): 1.0})
    a = CoefficientMap(d, [(c1(1, 1), 2.0), (c1(0, 0), 1.0)])
    assert list(a) == [c1(0, 0), c1(1, 1)]
    assert len(a) == 2 and a[c1(1, 1)] == 2.0
