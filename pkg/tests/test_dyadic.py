import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyadiclab import Cube, Domain, children, contains, lattice_cover, parent
from dyadiclab.dyadic import dyadic_cubes, parse_cube
from dyadiclab.errors import LevelOverflowError, NoCoverError, NoParentError

F = Fraction


def cube1(shift, level, k):
    return Cube((shift,), level, (k,))


def box(c):
    return c.lower()[0], c.upper()[0]


def test_children_1d_and_2d():
    assert [box(c) for c in children(cube1(0, 0, 0))] == [(0, F(1, 2)), (F(1, 2), 1)]
    quads = children(Cube((0, 0), 0, (0, 0)))
    assert sorted(c.index for c in quads) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(c.level == 1 and c.volume == F(1, 4) for c in quads)


def test_children_of_shifted_cube_are_exact():
    c = cube1(1, 1, 0)
    assert box(c) == (F(1, 3), F(5, 6))
    assert [box(x) for x in children(c)] == [(F(1, 3), F(7, 12)), (F(7, 12), F(5, 6))]


def test_children_level_overflow():
    with pytest.raises(LevelOverflowError):
        children(cube1(0, 3, 1), max_level=3)


def test_parent_examples_and_root():
    assert parent(cube1(0, 1, 1)) == cube1(0, 0, 0)
    assert parent(cube1(0, 2, 1)) == cube1(0, 1, 0)
    with pytest.raises(NoParentError):
        parent(cube1(2, 0, 0))


@given(st.integers(0, 2), st.integers(0, 2), st.integers(0, 6), st.data())
def test_parent_children_round_trip(s1, s2, level, data):
    idx = tuple(data.draw(st.integers(-3, (1 << level) + 2)) for _ in range(2))
    c = Cube((s1, s2), level, idx)
    kids = children(c)
    assert len(kids) == 4
    assert all(parent(k) == c for k in kids)
    assert sum(k.volume for k in kids) == c.volume
    assert all(contains(c, k) for k in kids)


def test_contains_examples():
    assert contains(cube1(0, 0, 0), cube1(0, 1, 0))
    assert not contains(cube1(0, 1, 0), cube1(0, 1, 1))
    # [1/3, 5/6) contains [1/2, 3/4)
    assert contains(cube1(1, 1, 0), cube1(0, 2, 2))


@given(st.integers(0, 2), st.integers(0, 4), st.integers(-2, 17),
       st.integers(0, 2), st.integers(0, 4), st.integers(-2, 17))
def test_contains_matches_rational_boxes(s1, l1, k1, s2, l2, k2):
    a, b = cube1(s1, l1, k1), cube1(s2, l2, k2)
    (alo, ahi), (blo, bhi) = box(a), box(b)
    assert contains(a, b) == (alo <= blo and bhi <= ahi)


def test_same_shift_cubes_are_nested_or_disjoint():
    for shift in range(3):
        cubes = [cube1(shift, lv, k) for lv in range(5) for k in range(-1, (1 << lv) + 1)]
        for a, b in itertools.combinations(cubes, 2):
            (alo, ahi), (blo, bhi) = box(a), box(b)
            disjoint = ahi <= blo or bhi <= alo
            assert disjoint or contains(a, b) or contains(b, a)


def test_cube_text_round_trip():
    c = Cube((1, 2), 3, (4, -1))
    assert str(c) == "s=<1,2>;l=<3>;k=<4,-1>"
    assert parse_cube(str(c)) == c
    with pytest.raises(ValueError):
        parse_cube("s=<1>;l=<x>;k=<0>")


def test_corners_on_the_lattice():
    L = 4
    unit = Domain(1, L).unit
    for c in (cube1(s, lv, k) for s in range(3) for lv in range(L + 1) for k in range(1 << lv)):
        assert all((x / unit).denominator == 1 for x in c.lower() + c.upper())


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain(0, 3)
    with pytest.raises(ValueError):
        Domain(1, 0)
    d = Domain(2, 3)
    assert d.ncells == 64 and d.cell_volume == 1 / 64
    assert len(list(dyadic_cubes(d))) == 1 + 4 + 16 + 64


def brute_cover(lo, side, max_level):
    """First level (fine to coarse) with any covering cube, smallest (shift, index) there."""
    best = None
    for level in range(max_level, -1, -1):
        width = F(1, 1 << level)
        found = []
        for shifts in itertools.product(range(3), repeat=len(lo)):
            idx = []
            for s, x in zip(shifts, lo):
                k = (x - F(s, 3)) // width
                start = F(s, 3) + k * width
                if x + side > start + width:
                    break
                idx.append(int(k))
            else:
                found.append(Cube(shifts, level, tuple(idx)))
        if found:
            best = min(found, key=lambda c: (c.shift, c.index))
            break
    return best


def test_lattice_cover_example():
    c = lattice_cover([F(2, 5)], F(1, 5), 6)
    assert c == cube1(1, 1, 0)
    assert box(c) == (F(1, 3), F(5, 6))


def test_lattice_cover_self_cover():
    c = cube1(0, 3, 5)
    assert lattice_cover(c.lower(), c.side, 6) == c


def test_lattice_cover_window():
    with pytest.raises(NoCoverError):
        lattice_cover([F(-1, 2)], F(1, 4), 4)
    with pytest.raises(NoCoverError):
        lattice_cover([F(1)], F(1, 2), 4)


@given(st.integers(1, 2), st.data())
def test_lattice_cover_bound_and_minimality(d, data):
    L = 4
    unit = F(1, 3 << L)
    n = 3 << L
    side_units = data.draw(st.integers(3, n))  # not finer than the cell lattice
    lo = [unit * data.draw(st.integers(0, n - side_units)) for _ in range(d)]
    side = unit * side_units
    c = lattice_cover(lo, side, L)
    for x, clo, chi in zip(lo, c.lower(), c.upper()):
        assert clo <= x and x + side <= chi
    assert c.volume <= 6 ** d * side ** d
    assert c == brute_cover(lo, side, L)
