import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from corrsample.core import (
    DiscreteDistribution,
    SubsetPair,
    Universe,
    dp_lower_bound,
    finite_dp_optimum,
    flat_tv_distance,
    holenstein_bound,
    parse_rational,
    tv_distance,
)
from corrsample.errors import InvalidInputError

from oracles import l1_half, naive_optimum, product_support, uniform_vec

THIRD = F(1, 3)


def test_universe_rejects_nonpositive():
    with pytest.raises(InvalidInputError):
        Universe(0)
    assert list(Universe(3).elements()) == [1, 2, 3]


def test_distribution_validation():
    with pytest.raises(InvalidInputError):
        DiscreteDistribution([F(1, 2), F(1, 3)])
    with pytest.raises(InvalidInputError):
        DiscreteDistribution([0.5, 0.4])
    with pytest.raises(InvalidInputError):
        DiscreteDistribution([F(3, 2), F(-1, 2)])
    d = DiscreteDistribution([0.5, 0.5 + 1e-13])
    assert not d.exact
    assert DiscreteDistribution([1]).exact


def test_tv_identical():
    p = DiscreteDistribution([THIRD] * 3)
    assert tv_distance(p, p) == 0


def test_tv_disjoint_halves():
    p = DiscreteDistribution([F(1, 2), F(1, 2), 0])
    q = DiscreteDistribution([0, F(1, 2), F(1, 2)])
    assert tv_distance(p, q) == F(1, 2)


def test_tv_shifted_uniform():
    p = DiscreteDistribution.uniform({1, 2, 3}, 4)
    q = DiscreteDistribution.uniform({2, 3, 4}, 4)
    # 1/2 * (1/3 + 0 + 0 + 1/3)
    assert tv_distance(p, q) == THIRD


def test_tv_universe_mismatch():
    with pytest.raises(InvalidInputError):
        tv_distance(DiscreteDistribution([1]), DiscreteDistribution([F(1, 2), F(1, 2)]))


def test_tv_float_path():
    p = DiscreteDistribution([0.6, 0.4])
    q = DiscreteDistribution([0.4, 0.6])
    assert tv_distance(p, q) == pytest.approx(0.2)


@pytest.mark.parametrize(
    "a, b, expected",
    [({1, 2}, {1, 2}, F(0)), ({1, 2}, {2, 3}, F(1, 2)), ({1, 2, 3}, {3, 4}, F(2, 3))],
)
def test_flat_tv_examples(a, b, expected):
    pair = SubsetPair(a, b, 4)
    assert flat_tv_distance(pair) == expected
    assert tv_distance(DiscreteDistribution.uniform(a, 4), DiscreteDistribution.uniform(b, 4)) == expected


def test_flat_tv_rejects_empty():
    with pytest.raises(InvalidInputError):
        flat_tv_distance(SubsetPair(set(), {1}, 2))


@pytest.mark.parametrize("n", range(1, 9))
def test_flat_tv_matches_tv_exhaustive(n):
    subsets = [frozenset(c) for k in range(1, n + 1) for c in itertools.combinations(range(1, n + 1), k)]
    dists = {s: DiscreteDistribution.uniform(s, n) for s in subsets}
    for a in subsets:
        for b in subsets:
            assert flat_tv_distance(SubsetPair(a, b, n)) == tv_distance(dists[a], dists[b])


def test_flat_tv_matches_l1_oracle_n10():
    n = 10
    subsets = [frozenset(c) for k in range(1, n + 1) for c in itertools.combinations(range(1, n + 1), k)]
    vecs = {s: uniform_vec(s, n) for s in subsets}
    # every 37th first set against all second sets; the full grid takes ~80 s
    for a in subsets[::37]:
        for b in subsets:
            assert flat_tv_distance(SubsetPair(a, b, n)) == l1_half(vecs[a], vecs[b])


def test_holenstein_bound_examples():
    assert holenstein_bound(F(0)) == 0
    assert holenstein_bound(F(1)) == 1
    assert holenstein_bound(THIRD) == F(1, 2)


def test_dp_lower_bound_examples():
    assert dp_lower_bound(F(1)) == 0
    assert dp_lower_bound(F(0)) == 1
    assert dp_lower_bound(F(1, 2)) == F(2, 3)


GRID = [F(i, 60) for i in range(61)]


def test_holenstein_bound_monotone_and_identity():
    values = [holenstein_bound(d) for d in GRID]
    assert all(x < y for x, y in zip(values, values[1:]))
    for d in GRID:
        assert dp_lower_bound(1 - d) == holenstein_bound(d)


def test_bounds_reject_out_of_range():
    with pytest.raises(InvalidInputError):
        holenstein_bound(F(3, 2))
    with pytest.raises(InvalidInputError):
        dp_lower_bound(F(-1, 3))


def test_finite_dp_optimum_examples():
    assert finite_dp_optimum(1, F(1, 2)) == F(3, 4)
    assert finite_dp_optimum(3, F(1, 2)) == F(43, 64)
    for n in range(1, 8):
        assert finite_dp_optimum(n, F(1)) == 0


@pytest.mark.parametrize("n, p", [(1, F(1, 2)), (2, F(1, 3)), (3, F(1, 2)), (2, F(3, 4))])
def test_finite_dp_optimum_against_naive_enumeration(n, p):
    support = product_support(n, p)
    assert naive_optimum(support) == finite_dp_optimum(n, p)


@pytest.mark.parametrize("p", [F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(3, 4), F(1, 10)])
def test_finite_dp_optimum_tail(p):
    prev = None
    for n in range(1, 15):
        value = finite_dp_optimum(n, p)
        assert value - dp_lower_bound(p) == p * (1 - p) ** (2 * n) / (2 - p)
        assert value >= dp_lower_bound(p)
        if prev is not None:
            assert value <= prev
        prev = value


@given(st.fractions(min_value=0, max_value=1, max_denominator=50), st.integers(1, 30))
def test_finite_dp_optimum_geometric_sum(p, n):
    agreement = sum((1 - p) ** (2 * (i - 1)) * p * p for i in range(1, n + 1))
    assert finite_dp_optimum(n, p) == 1 - agreement


def test_parse_rational():
    assert parse_rational("1/1000") == F(1, 1000)
    assert parse_rational(" 3 ") == 3
    assert parse_rational(0.25) == F(1, 4)
    with pytest.raises(InvalidInputError):
        parse_rational("one/two")
    with pytest.raises(InvalidInputError):
        parse_rational("1/0")


def test_subset_pair_range_check():
    with pytest.raises(InvalidInputError):
        SubsetPair({0, 1}, {1}, 3)
    with pytest.raises(InvalidInputError):
        SubsetPair({1}, {4}, 3)
    assert SubsetPair(set(), set(), 2).a == frozenset()
