"""MinHash on flat inputs and its grid-embedding extension to general distributions.

Shared randomness is a :class:`PriorityTable`: i.i.d. 64-bit priorities keyed
by element id, ties broken by the smaller id.  The element with the lowest
priority plays the role of the first element of a shared random permutation.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from . import rng
from .core import DiscreteDistribution, Number, SubsetPair, parse_rational
from .errors import InvalidInputError, ResourceLimitError

CONTINUOUS_MAX_REJECTIONS = 10**6
SNAP_FACTOR = 1000
_CELL_SHIFT = 32


@dataclass(frozen=True)
class PriorityTable:
    """Seeded priorities. ``overrides`` pins specific keys (used to replay a fixed order)."""

    seed: int = 0
    overrides: Mapping[int, int] = field(default_factory=dict)

    @classmethod
    def from_order(cls, order: Iterable[int]) -> "PriorityTable":
        """Table whose priorities follow ``order``: the first key listed is the minimum."""
        return cls(seed=0, overrides={key: rank for rank, key in enumerate(order)})

    def priority(self, key: int) -> int:
        if key in self.overrides:
            return self.overrides[key]
        return rng.priority(self.seed, key)

    def argmin(self, keys: Iterable[int]) -> int:
        return min(keys, key=lambda k: (self.priority(k), k))


def minhash_sample(a: Iterable[int], pri: PriorityTable) -> int:
    members = list(a)
    if not members:
        raise InvalidInputError("MinHash needs a nonempty set")
    return pri.argmin(members)


def minhash_exact_error(pair: SubsetPair) -> Fraction:
    pair.require_nonempty()
    return 1 - Fraction(len(pair.a & pair.b), len(pair.a | pair.b))


def minhash_enumerated_error(pair: SubsetPair, limit: int = 8) -> Fraction:
    """Disagreement frequency of MinHash over every priority order of ``[n]``."""
    pair.require_nonempty()
    if pair.n > limit:
        raise ResourceLimitError(f"permutation enumeration capped at n={limit}", math.factorial(pair.n))
    disagree = total = 0
    for order in itertools.permutations(range(1, pair.n + 1)):
        pri = PriorityTable.from_order(order)
        total += 1
        disagree += minhash_sample(pair.a, pri) != minhash_sample(pair.b, pri)
    return Fraction(disagree, total)


@dataclass(frozen=True)
class GridParams:
    gamma: Fraction

    def __init__(self, gamma: Number | str):
        g = parse_rational(gamma)
        if g <= 0 or g > 1 or g.numerator != 1:
            raise InvalidInputError(f"1/gamma must be a positive integer, got gamma={g}")
        object.__setattr__(self, "gamma", g)

    @property
    def levels(self) -> int:
        return self.gamma.denominator


@dataclass(frozen=True)
class GridEmbedding:
    """Flat set over ``[n] x grid``. Element ``w`` owns cells ``(w, 0) .. (w, counts[w-1]-1)``.

    Cell ``(w, k)`` sits at level ``k * gamma`` and is present iff
    ``(k + 1) * gamma <= P(w)``, so each element owns ``floor(P(w) / gamma)`` cells.
    """

    source: DiscreteDistribution
    params: GridParams
    counts: tuple

    @property
    def size(self) -> int:
        return sum(self.counts)

    def cells(self) -> frozenset:
        g = self.params.gamma
        return frozenset(
            (w, k * g) for w, c in enumerate(self.counts, start=1) for k in range(c)
        )

    def keys(self) -> list[int]:
        """Integer cell ids in ascending order (the tie-break order)."""
        return [cell_key(w, k) for w, c in enumerate(self.counts, start=1) for k in range(c)]


def cell_key(element: int, level_index: int) -> int:
    return (element << _CELL_SHIFT) | level_index


def _exact_probs(p: DiscreteDistribution, params: GridParams) -> tuple[Fraction, ...]:
    if p.exact:
        return p.probs
    denom = params.levels * SNAP_FACTOR
    warnings.warn(
        f"float probabilities snapped to multiples of 1/{denom} for grid comparison",
        stacklevel=3,
    )
    return tuple(Fraction(round(v * denom), denom) for v in p.probs)


def grid_embed(p: DiscreteDistribution, params: GridParams) -> GridEmbedding:
    probs = _exact_probs(p, params)
    counts = tuple(math.floor(v / params.gamma) for v in probs)
    return GridEmbedding(source=p, params=params, counts=counts)


def _require_cells(emb: GridEmbedding) -> None:
    if emb.size == 0:
        raise InvalidInputError(
            f"grid gamma={emb.params.gamma} too coarse: no element has mass >= gamma"
        )


def holenstein_sample(p: DiscreteDistribution, params: GridParams, pri: PriorityTable) -> int:
    emb = grid_embed(p, params)
    _require_cells(emb)
    return pri.argmin(emb.keys()) >> _CELL_SHIFT


def holenstein_marginals(p: DiscreteDistribution, params: GridParams) -> tuple[Fraction, ...]:
    """Exact output law of :func:`holenstein_sample` over uniform priorities."""
    emb = grid_embed(p, params)
    _require_cells(emb)
    return tuple(Fraction(c, emb.size) for c in emb.counts)


def marginal_bounds(prob: Fraction, gamma: Fraction, n: int) -> tuple[Fraction, Fraction | None]:
    """``(P - gamma, P / (1 - gamma n))``; the upper bound is ``None`` once ``gamma n >= 1``."""
    lower = prob - gamma
    upper = prob / (1 - gamma * n) if gamma * n < 1 else None
    return lower, upper


def output_disagreement(a: tuple, b: tuple) -> Fraction:
    """Exact disagreement of MinHash-style protocols whose per-element weights are ``a`` and ``b``.

    The first union unit is shared with probability ``sum(min)/sum(max)``.  When it
    belongs to one side only, the other party's output is a fresh draw from its own
    weights, so it can still land on the same element.
    """
    a = [Fraction(x) for x in a]
    b = [Fraction(x) for x in b]
    total_a, total_b = sum(a), sum(b)
    union = sum(max(x, y) for x, y in zip(a, b))
    shared = sum(min(x, y) for x, y in zip(a, b))
    lucky = sum((x - min(x, y)) * y / total_b + (y - min(x, y)) * x / total_a for x, y in zip(a, b))
    return 1 - (shared + lucky) / union


def _embeddings(p: DiscreteDistribution, q: DiscreteDistribution, params: GridParams):
    if p.n != q.n:
        raise InvalidInputError(f"universe mismatch: {p.n} vs {q.n}")
    ep, eq = grid_embed(p, params), grid_embed(q, params)
    _require_cells(ep)
    _require_cells(eq)
    return ep, eq


def holenstein_cell_error(
    p: DiscreteDistribution, q: DiscreteDistribution, params: GridParams
) -> Fraction:
    """``1 - |A & B| / |A | B|`` over grid cells: the chance the two chosen cells differ."""
    ep, eq = _embeddings(p, q, params)
    inter = sum(min(x, y) for x, y in zip(ep.counts, eq.counts))
    union = sum(max(x, y) for x, y in zip(ep.counts, eq.counts))
    return 1 - Fraction(inter, union)


def holenstein_exact_error(
    p: DiscreteDistribution, q: DiscreteDistribution, params: GridParams
) -> Fraction:
    """Exact probability that the two output elements differ (at most the cell error)."""
    ep, eq = _embeddings(p, q, params)
    return output_disagreement(ep.counts, eq.counts)


def holenstein_error_bound(delta: Number, gamma: Fraction, n: int) -> Number:
    return (2 * delta + gamma * n) / (1 + delta)


@dataclass(frozen=True)
class SharedStream:
    """Unbounded stream of ``(element, u)`` pairs; position ``j`` uses keys ``2j`` and ``2j+1``."""

    seed: int
    n: int

    def pair(self, j: int) -> tuple[int, float]:
        e = rng.priority(self.seed, 2 * j)
        u = rng.priority(self.seed, 2 * j + 1)
        element = ((e >> 32) * self.n >> 32) + 1
        return element, (u >> 11) * (1.0 / (1 << 53))


def holenstein_continuous_sample(
    p: DiscreteDistribution, stream: SharedStream, max_rejections: int = CONTINUOUS_MAX_REJECTIONS
) -> int:
    """Output the element of the first stream pair with ``u < P(element)``."""
    if stream.n != p.n:
        raise InvalidInputError(f"stream universe {stream.n} does not match distribution {p.n}")
    probs = [float(v) for v in p.probs]
    for j in range(max_rejections):
        w, u = stream.pair(j)
        if u < probs[w - 1]:
            return w
    raise ResourceLimitError(f"no acceptance within {max_rejections} stream positions", max_rejections)


# Batched samplers: identical outputs to the scalar versions, one row per trial seed.


def minhash_batch(elements: Iterable[int], seeds: np.ndarray) -> np.ndarray:
    keys = np.array(sorted(elements), dtype=np.uint64)
    if keys.size == 0:
        raise InvalidInputError("MinHash needs a nonempty set")
    return keys[rng.argmin_priority(seeds, rng.key_hashes(keys))].astype(np.int64)


def holenstein_batch(emb: GridEmbedding, seeds: np.ndarray) -> np.ndarray:
    _require_cells(emb)
    keys = np.array(emb.keys(), dtype=np.uint64)
    return (keys[rng.argmin_priority(seeds, rng.key_hashes(keys))] >> np.uint64(_CELL_SHIFT)).astype(np.int64)


def continuous_batch(
    p: DiscreteDistribution,
    seeds: np.ndarray,
    block: int = 32,
    max_rejections: int = CONTINUOUS_MAX_REJECTIONS,
) -> np.ndarray:
    probs = np.array([0.0] + [float(v) for v in p.probs])
    out = np.zeros(seeds.shape[0], dtype=np.int64)
    pending = np.arange(seeds.shape[0])
    start = 0
    while pending.size:
        if start >= max_rejections:
            raise ResourceLimitError(
                f"{pending.size} trials without acceptance after {max_rejections} stream positions",
                max_rejections,
            )
        stop = min(start + block, max_rejections)
        j = np.arange(start, stop, dtype=np.uint64)
        s = seeds[pending]
        elem = rng.to_range(rng.priorities(s, rng.key_hashes(2 * j)), p.n) + 1
        u = rng.to_unit(rng.priorities(s, rng.key_hashes(2 * j + 1)))
        hit = u < probs[elem]
        found = hit.any(axis=1)
        first = hit.argmax(axis=1)
        rows = np.nonzero(found)[0]
        out[pending[rows]] = elem[rows, first[rows]]
        pending = pending[~found]
        start = stop
        block = min(block * 2, 4096)
    return out


def continuous_exact_error(p: DiscreteDistribution, q: DiscreteDistribution) -> Fraction:
    """Expected disagreement of the shared rejection-sampling protocol.

    Equals ``2 delta / (1 + delta)`` when no element has ``P > Q > 0`` or ``Q > P > 0``
    (e.g. flat inputs of equal size) and is below it otherwise.
    """
    if p.n != q.n:
        raise InvalidInputError(f"universe mismatch: {p.n} vs {q.n}")
    return output_disagreement(p.probs, q.probs)
