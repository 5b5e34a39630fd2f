import itertools
import random
from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrsample import rng
from corrsample.agreement import RankOrder, nonempty_subsets, order_strategy
from corrsample.core import DiscreteDistribution, SubsetPair, holenstein_bound, tv_distance
from corrsample.errors import InvalidInputError, ResourceLimitError
from corrsample.harness import TrialConfig, monte_carlo_error
from corrsample.sampling import (
    GridParams,
    PriorityTable,
    SharedStream,
    cell_key,
    continuous_batch,
    continuous_exact_error,
    grid_embed,
    holenstein_batch,
    holenstein_cell_error,
    holenstein_continuous_sample,
    holenstein_error_bound,
    holenstein_exact_error,
    holenstein_marginals,
    holenstein_sample,
    marginal_bounds,
    minhash_batch,
    minhash_enumerated_error,
    minhash_exact_error,
    minhash_sample,
    output_disagreement,
)

from oracles import grid_output_disagreement


def dist(*probs):
    return DiscreteDistribution([F(p) for p in probs])


@st.composite
def rational_dists(draw, max_n=6, max_den=30):
    n = draw(st.integers(1, max_n))
    den = draw(st.integers(1, max_den))
    cuts = sorted(draw(st.lists(st.integers(0, den), min_size=n - 1, max_size=n - 1)))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    return DiscreteDistribution([F(x, den) for x in parts])


# ---- MinHash ----


def test_minhash_examples():
    assert minhash_exact_error(SubsetPair({1, 2}, {1, 2}, 2)) == 0
    assert minhash_exact_error(SubsetPair({1}, {2}, 2)) == 1
    assert minhash_exact_error(SubsetPair({1, 2, 3}, {2, 3, 4}, 4)) == F(1, 2)


def test_minhash_singleton_always_itself():
    for seed in range(50):
        assert minhash_sample({4}, PriorityTable(seed)) == 4


def test_minhash_rejects_empty():
    with pytest.raises(InvalidInputError):
        minhash_sample(set(), PriorityTable(0))
    with pytest.raises(InvalidInputError):
        minhash_exact_error(SubsetPair(set(), {1}, 2))


@pytest.mark.parametrize("n", range(1, 6))
def test_minhash_uniform_over_all_orders(n):
    orders = [PriorityTable.from_order(o) for o in itertools.permutations(range(1, n + 1))]
    for a in nonempty_subsets(n):
        counts = Counter(minhash_sample(a, pri) for pri in orders)
        assert set(counts) == set(a)
        assert all(c * len(a) == len(orders) for c in counts.values())


def test_minhash_uniform_n7_sample_of_sets():
    orders = [PriorityTable.from_order(o) for o in itertools.permutations(range(1, 8))]
    for a in [{1}, {2, 5}, {1, 3, 7}, {2, 3, 4, 6}, set(range(1, 8))]:
        counts = Counter(minhash_sample(a, pri) for pri in orders)
        assert sorted(counts) == sorted(a)
        assert all(c == 5040 // len(a) for c in counts.values())


@pytest.mark.parametrize("n", range(1, 5))
def test_minhash_error_formula_exhaustive(n):
    subsets = nonempty_subsets(n)
    for a in subsets:
        for b in subsets:
            pair = SubsetPair(a, b, n)
            assert minhash_enumerated_error(pair) == minhash_exact_error(pair)


def test_minhash_error_formula_n8():
    for a, b in [({1, 2, 3, 4}, {3, 4, 5, 6, 7}), ({8}, {1, 8})]:
        pair = SubsetPair(a, b, 8)
        assert minhash_enumerated_error(pair) == minhash_exact_error(pair)
    with pytest.raises(ResourceLimitError):
        minhash_enumerated_error(SubsetPair({1}, {1}, 9))


def test_minhash_matches_order_strategy():
    gen = random.Random(3)
    n = 10
    subsets = nonempty_subsets(n)
    for _ in range(5):
        order = list(range(1, n + 1))
        gen.shuffle(order)
        pri = PriorityTable.from_order(order)
        f = order_strategy(RankOrder.from_sequence(order), subsets)
        for a in subsets:
            assert minhash_sample(a, pri) == f(a)


def test_minhash_batch_matches_scalar():
    seeds = rng.derive_seeds(99, 0, 300)
    a = [2, 3, 5, 8, 13]
    batch = minhash_batch(a, seeds)
    assert list(batch) == [minhash_sample(a, PriorityTable(int(s))) for s in seeds]


def test_minhash_ties_break_to_smaller_id():
    pri = PriorityTable(overrides={3: 5, 7: 5, 9: 6})
    assert minhash_sample({9, 7, 3}, pri) == 3


# ---- Holenstein grid ----


def test_grid_embed_examples():
    g = GridParams(F(1, 10))
    assert grid_embed(dist(F(7, 10), F(3, 10)), g).counts == (7, 3)
    assert grid_embed(dist(F(1, 2), F(1, 2)), g).counts == (5, 5)
    assert grid_embed(dist(F(13, 20), F(7, 20)), g).counts == (6, 3)
    coarse = grid_embed(dist(F(7, 10), F(3, 10)), GridParams(F(1, 4)))
    assert coarse.counts == (2, 1)
    assert holenstein_marginals(dist(F(7, 10), F(3, 10)), GridParams(F(1, 4))) == (F(2, 3), F(1, 3))


def test_grid_cells_and_keys():
    emb = grid_embed(dist(F(1, 2), F(1, 4), F(1, 4)), GridParams(F(1, 4)))
    assert emb.cells() == {(1, 0), (1, F(1, 4)), (2, 0), (3, 0)}
    assert emb.keys() == sorted(emb.keys())
    assert emb.keys()[0] == cell_key(1, 0)


def test_grid_params_validation():
    for bad in (F(2, 3), F(0), F(3, 2), "0.3"):
        with pytest.raises(InvalidInputError):
            GridParams(bad)
    assert GridParams("1/1000").levels == 1000


def test_point_mass_always_returns_it():
    p = dist(0, 1, 0)
    g = GridParams(F(1, 5))
    for seed in range(30):
        assert holenstein_sample(p, g, PriorityTable(seed)) == 2
    stream = SharedStream(11, 3)
    assert holenstein_continuous_sample(p, stream) == 2
    assert set(continuous_batch(p, rng.derive_seeds(1, 0, 200))) == {2}


def test_empty_embedding_rejected():
    p = dist(F(1, 3), F(1, 3), F(1, 3))
    with pytest.raises(InvalidInputError, match="too coarse"):
        holenstein_sample(p, GridParams(F(1, 2)), PriorityTable(0))
    with pytest.raises(InvalidInputError):
        holenstein_exact_error(p, p, GridParams(F(1, 2)))


def test_float_input_is_snapped_with_warning():
    p = DiscreteDistribution([0.7, 0.3])
    with pytest.warns(UserWarning, match="snapped"):
        emb = grid_embed(p, GridParams(F(1, 10)))
    assert emb.counts == (7, 3)


@pytest.mark.parametrize("gamma", [F(1, 5), F(1, 10), F(1, 1000)])
def test_holenstein_known_instance(gamma):
    p, q = dist(F(3, 5), F(2, 5)), dist(F(2, 5), F(3, 5))
    g = GridParams(gamma)
    assert holenstein_cell_error(p, q, g) == F(1, 3)
    assert holenstein_exact_error(p, q, g) == F(1, 5)


def test_holenstein_exact_error_against_permutation_oracle():
    p, q = dist(F(3, 5), F(2, 5)), dist(F(2, 5), F(3, 5))
    g = GridParams(F(1, 5))
    ep, eq = grid_embed(p, g), grid_embed(q, g)
    assert grid_output_disagreement(ep.counts, eq.counts) == holenstein_exact_error(p, q, g)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=4))
def test_output_disagreement_against_permutation_oracle(pairs):
    a = tuple(x for x, _ in pairs)
    b = tuple(y for _, y in pairs)
    if sum(a) == 0 or sum(b) == 0 or sum(max(x, y) for x, y in pairs) > 7:
        return
    assert output_disagreement(a, b) == grid_output_disagreement(a, b)


@settings(max_examples=80, deadline=None)
@given(rational_dists(), st.sampled_from([F(1, 4), F(1, 10), F(1, 100)]))
def test_marginal_sandwich(p, gamma):
    g = GridParams(gamma)
    if grid_embed(p, g).size == 0:
        return
    for prob, m in zip(p.probs, holenstein_marginals(p, g)):
        lower, upper = marginal_bounds(prob, gamma, p.n)
        assert lower <= m
        if upper is not None:
            assert m <= upper


@settings(max_examples=80, deadline=None)
@given(st.data(), st.sampled_from([F(1, 10), F(1, 100)]))
def test_error_within_bound(data, gamma):
    p = data.draw(rational_dists())
    q = data.draw(rational_dists(max_n=p.n).filter(lambda d: d.n == p.n))
    g = GridParams(gamma)
    if grid_embed(p, g).size == 0 or grid_embed(q, g).size == 0:
        return
    delta = tv_distance(p, q)
    bound = holenstein_error_bound(delta, gamma, p.n)
    assert holenstein_exact_error(p, q, g) <= holenstein_cell_error(p, q, g) <= bound


def test_holenstein_batch_matches_scalar():
    p = dist(F(1, 2), F(3, 10), F(1, 5))
    g = GridParams(F(1, 10))
    emb = grid_embed(p, g)
    seeds = rng.derive_seeds(5, 0, 200)
    batch = holenstein_batch(emb, seeds)
    assert list(batch) == [holenstein_sample(p, g, PriorityTable(int(s))) for s in seeds]


# ---- continuous rejection variant ----


def test_continuous_batch_matches_scalar():
    p = dist(F(1, 2), F(1, 3), F(1, 6))
    seeds = rng.derive_seeds(8, 0, 300)
    batch = continuous_batch(p, seeds, block=4)
    assert list(batch) == [holenstein_continuous_sample(p, SharedStream(int(s), 3)) for s in seeds]


def test_continuous_rejection_cap():
    p = dist(1, 0, 0, 0, 0, 0, 0, 0)
    with pytest.raises(ResourceLimitError):
        holenstein_continuous_sample(p, SharedStream(0, 8), max_rejections=0)
    with pytest.raises(ResourceLimitError):
        continuous_batch(p, rng.derive_seeds(0, 0, 10), max_rejections=0)


def test_continuous_exact_error_formula():
    # flat equal-size inputs: exactly 2 delta / (1 + delta)
    p, q = dist(F(1, 2), F(1, 2), 0), dist(0, F(1, 2), F(1, 2))
    assert continuous_exact_error(p, q) == holenstein_bound(tv_distance(p, q)) == F(2, 3)
    # an element with P > Q > 0 can only help
    p, q = dist(F(3, 5), F(2, 5)), dist(F(2, 5), F(3, 5))
    assert continuous_exact_error(p, q) < holenstein_bound(tv_distance(p, q))


@pytest.mark.slow
def test_continuous_marginal_is_uniform():
    from scipy.stats import chisquare

    p = dist(*[F(1, 5)] * 5)
    out = continuous_batch(p, rng.derive_seeds(2024, 0, 10**6))
    counts = np.bincount(out, minlength=6)[1:]
    assert counts.sum() == 10**6
    assert chisquare(counts).pvalue > 1e-3


@pytest.mark.slow
def test_continuous_monte_carlo_example():
    p, q = dist(F(1, 2), F(1, 2), 0), dist(0, F(1, 2), F(1, 2))
    res = monte_carlo_error(p, q, TrialConfig(master_seed=31, trials=10**6, strategy="continuous"))
    assert abs(res.estimate - 2 / 3) <= 0.005


@pytest.mark.slow
def test_holenstein_monte_carlo_matches_exact():
    p, q = dist(F(3, 5), F(2, 5)), dist(F(2, 5), F(3, 5))
    cfg = TrialConfig(master_seed=7, trials=10**6, strategy="holenstein", gamma=F(1, 1000))
    res = monte_carlo_error(p, q, cfg)
    exact = holenstein_exact_error(p, q, GridParams(F(1, 1000)))
    assert abs(res.estimate - float(exact)) <= 3 * res.stderr


# ---- rng ----


def test_argmin_kernels_agree():
    seeds = rng.derive_seeds(77, 0, 5000)
    keys = rng.key_hashes(np.arange(1, 40, dtype=np.uint64))
    assert np.array_equal(rng._argmin_numpy(seeds, keys), rng.argmin_priority(seeds, keys))


def test_derive_seeds_matches_scalar():
    arr = rng.derive_seeds(123, 10, 20)
    assert [int(x) for x in arr] == [rng.derive_seed(123, i) for i in range(10, 20)]


def test_to_range_and_unit_bounds():
    bits = rng.priorities(rng.derive_seeds(1, 0, 1000), rng.key_hashes(np.arange(4, dtype=np.uint64)))
    r = rng.to_range(bits, 7)
    u = rng.to_unit(bits)
    assert r.min() >= 0 and r.max() < 7
    assert u.min() >= 0 and u.max() < 1
