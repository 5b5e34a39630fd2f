"""Constrained agreement: pair distributions, deterministic strategies and exact optima.

Alice sees ``A``, Bob sees ``B``, each must name a member of their own set, and
the pair ``(A, B)`` is drawn from a known distribution.  A pair with an empty
side always counts as a disagreement; strategy tables only cover nonempty sets.

Ties in every argmax/argmin go to the smallest element.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import SubsetPair, Universe, format_rational, parse_rational
from .errors import InvalidInputError, InvariantViolation, ResourceLimitError

ELEMENTWISE_ENUM_CAP = 10
MATCH_ENUM_CAP = 8
INTERSECTION_ENUM_CAP = 10**6
BRUTE_FORCE_CAP = 10**8
ORDER_TABLE_CAP = 16
BR_MAX_ROUNDS = 100

LEFT, RIGHT = "left", "right"

Support = list  # list[tuple[SubsetPair, Fraction]]


def subset_key(s: Iterable[int]) -> tuple:
    """Canonical (shortlex) order on subsets."""
    t = tuple(sorted(s))
    return (len(t), t)


def nonempty_subsets(n: int) -> list[frozenset]:
    return [
        frozenset(c) for k in range(1, n + 1) for c in itertools.combinations(range(1, n + 1), k)
    ]


# ---------------------------------------------------------------------------
# Pair distributions


@dataclass(frozen=True)
class PairDistribution:
    family: str
    n: int
    params: Mapping = field(default_factory=dict)

    # Per-element joint law (p11, p10, p01, p00) for the independent-coordinate families.
    def _elementwise(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        if self.family == "product":
            p = self.params["p"]
            return p * p, p * (1 - p), (1 - p) * p, (1 - p) * (1 - p)
        if self.family == "positively_correlated":
            p, delta = self.params["p"], self.params["delta"]
            s, r = p / (1 - delta), 1 - delta
            return s * r * r, s * r * (1 - r), s * (1 - r) * r, 1 - s + s * (1 - r) * (1 - r)
        raise ValueError(self.family)

    def support(self) -> Support:
        return enumerate_support(self)

    def sample(self, seed: int) -> SubsetPair:
        return sample_pair(self, seed)

    def describe(self) -> dict:
        return {"family": self.family, "n": self.n, **{k: v for k, v in self.params.items() if k != "support"}}


def product(n: int, p) -> PairDistribution:
    Universe(n)
    p = parse_rational(p)
    if not 0 <= p <= 1:
        raise InvalidInputError(f"p must lie in [0, 1], got {p}")
    return PairDistribution("product", n, {"p": p})


def positively_correlated(n: int, p, delta) -> PairDistribution:
    Universe(n)
    p, delta = parse_rational(p), parse_rational(delta)
    if not 0 <= p <= 1 or not 0 <= delta < 1:
        raise InvalidInputError(f"need 0 <= p <= 1 and 0 <= delta < 1, got p={p}, delta={delta}")
    if p / (1 - delta) > 1:
        raise InvalidInputError(f"p/(1-delta) = {p / (1 - delta)} exceeds 1")
    return PairDistribution("positively_correlated", n, {"p": p, "delta": delta})


def match_family(n: int) -> PairDistribution:
    Universe(n)
    if n < 2:
        raise InvalidInputError("match family needs n >= 2")
    return PairDistribution("match", n)


def intersection_family(n: int, a: int, b: int, l: int) -> PairDistribution:
    Universe(n)
    if min(a, b) < 1 or l < 0 or l > min(a, b) or n < a + b - l:
        raise InvalidInputError(f"infeasible intersection family (n={n}, a={a}, b={b}, l={l})")
    return PairDistribution("intersection", n, {"a": a, "b": b, "l": l})


def explicit(support: Iterable[tuple[SubsetPair, Fraction]]) -> PairDistribution:
    merged: dict[tuple, Fraction] = {}
    n = None
    for pair, prob in support:
        prob = parse_rational(prob)
        if prob < 0:
            raise InvalidInputError("negative probability in explicit support")
        if n is None:
            n = pair.n
        elif pair.n != n:
            raise InvalidInputError("explicit support mixes universes")
        key = (pair.a, pair.b)
        merged[key] = merged.get(key, Fraction(0)) + prob
    if n is None:
        raise InvalidInputError("explicit support is empty")
    if sum(merged.values()) != 1:
        raise InvalidInputError(f"explicit probabilities sum to {sum(merged.values())}")
    items = tuple(
        (SubsetPair(a, b, n), w)
        for (a, b), w in sorted(merged.items(), key=lambda kv: (subset_key(kv[0][0]), subset_key(kv[0][1])))
        if w > 0
    )
    return PairDistribution("explicit", n, {"support": items})


def enumerate_support(d: PairDistribution) -> Support:
    """Exact support in canonical order (by ``A`` then ``B``, shortlex)."""
    n = d.n
    if d.family in ("product", "positively_correlated"):
        if n > ELEMENTWISE_ENUM_CAP:
            raise ResourceLimitError(f"exact enumeration capped at n={ELEMENTWISE_ENUM_CAP}", 4**n)
        p11, p10, p01, p00 = d._elementwise()
        subsets = [frozenset()] + nonempty_subsets(n)
        out = []
        for a in subsets:
            for b in subsets:
                both = len(a & b)
                only_a, only_b = len(a) - both, len(b) - both
                w = p11**both * p10**only_a * p01**only_b * p00 ** (n - both - only_a - only_b)
                if w:
                    out.append((SubsetPair(a, b, n), w))
        return out
    if d.family == "match":
        if n > MATCH_ENUM_CAP:
            raise ResourceLimitError(f"match family enumeration capped at n={MATCH_ENUM_CAP}", n * (n - 1))
        sets = sorted((frozenset(c) for c in itertools.combinations(range(1, n + 1), n - 1)), key=subset_key)
        w = Fraction(1, n * (n - 1))
        return [(SubsetPair(a, b, n), w) for a in sets for b in sets if a != b]
    if d.family == "intersection":
        a_size, b_size, l = d.params["a"], d.params["b"], d.params["l"]
        size = math.comb(n, a_size) * math.comb(n, b_size)
        if size > INTERSECTION_ENUM_CAP:
            raise ResourceLimitError(f"intersection family space {size} exceeds {INTERSECTION_ENUM_CAP}", size)
        universe = range(1, n + 1)
        pairs = []
        for a in itertools.combinations(universe, a_size):
            rest = [x for x in universe if x not in a]
            for common in itertools.combinations(a, l):
                for extra in itertools.combinations(rest, b_size - l):
                    pairs.append((frozenset(a), frozenset(common + extra)))
        pairs.sort(key=lambda ab: (subset_key(ab[0]), subset_key(ab[1])))
        w = Fraction(1, len(pairs))
        return [(SubsetPair(a, b, n), w) for a, b in pairs]
    if d.family == "explicit":
        return list(d.params["support"])
    raise InvalidInputError(f"unknown family {d.family!r}")


def sample_pair(d: PairDistribution, seed: int) -> SubsetPair:
    """One draw; any ``n`` (no enumeration)."""
    gen = np.random.default_rng(seed)
    n = d.n
    if d.family == "product":
        p = float(d.params["p"])
        a = np.nonzero(gen.random(n) < p)[0] + 1
        b = np.nonzero(gen.random(n) < p)[0] + 1
    elif d.family == "positively_correlated":
        p, delta = float(d.params["p"]), float(d.params["delta"])
        s = gen.random(n) < p / (1 - delta)
        a = np.nonzero(s & (gen.random(n) < 1 - delta))[0] + 1
        b = np.nonzero(s & (gen.random(n) < 1 - delta))[0] + 1
    elif d.family == "match":
        x, y = gen.choice(n, size=2, replace=False) + 1
        full = np.arange(1, n + 1)
        a, b = full[full != x], full[full != y]
    elif d.family == "intersection":
        a_size, b_size, l = d.params["a"], d.params["b"], d.params["l"]
        perm = gen.permutation(n) + 1
        a = perm[:a_size]
        b = np.concatenate([perm[:l], perm[a_size : a_size + b_size - l]])
    elif d.family == "explicit":
        items = d.params["support"]
        weights = np.array([float(w) for _, w in items])
        return items[int(gen.choice(len(items), p=weights / weights.sum()))][0]
    else:
        raise InvalidInputError(f"unknown family {d.family!r}")
    return SubsetPair((int(x) for x in a), (int(x) for x in b), n)


def left_sets(support: Support) -> list[frozenset]:
    return sorted({pair.a for pair, _ in support if pair.a}, key=subset_key)


def right_sets(support: Support) -> list[frozenset]:
    return sorted({pair.b for pair, _ in support if pair.b}, key=subset_key)


# ---------------------------------------------------------------------------
# Strategies


class DetStrategy:
    """Deterministic choice table ``set -> member``."""

    __slots__ = ("_table",)

    def __init__(self, table: Mapping[Iterable[int], int]):
        clean = {}
        for s, choice in table.items():
            s = frozenset(s)
            if not s:
                raise InvalidInputError("strategy tables are defined on nonempty sets only")
            if choice not in s:
                raise InvalidInputError(f"choice {choice} not in {sorted(s)}")
            clean[s] = choice
        self._table = clean

    def __call__(self, s: Iterable[int]) -> int:
        key = frozenset(s)
        try:
            return self._table[key]
        except KeyError:
            raise InvalidInputError(f"strategy undefined on {sorted(key)}") from None

    def __eq__(self, other):
        return isinstance(other, DetStrategy) and self._table == other._table

    def __hash__(self):
        return hash(frozenset(self._table.items()))

    def __repr__(self):
        return f"DetStrategy({len(self._table)} sets)"

    @property
    def table(self) -> dict[frozenset, int]:
        return dict(self._table)

    def restrict(self, sets: Iterable[frozenset]) -> "DetStrategy":
        return DetStrategy({s: self(s) for s in sets})

    def to_json(self) -> list:
        return [[sorted(s), c] for s, c in sorted(self._table.items(), key=lambda kv: subset_key(kv[0]))]


@dataclass(frozen=True)
class RankOrder:
    """Permutation of ``[n]``; ``ranks[i - 1]`` is the rank of element ``i`` (1 = preferred)."""

    ranks: tuple

    def __post_init__(self):
        if sorted(self.ranks) != list(range(1, len(self.ranks) + 1)):
            raise InvalidInputError(f"not a permutation of [{len(self.ranks)}]: {self.ranks}")

    @classmethod
    def identity(cls, n: int) -> "RankOrder":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_sequence(cls, order: Sequence[int]) -> "RankOrder":
        """``order`` lists elements from most to least preferred."""
        ranks = [0] * len(order)
        for r, e in enumerate(order, start=1):
            ranks[e - 1] = r
        return cls(tuple(ranks))

    @property
    def n(self) -> int:
        return len(self.ranks)

    def __call__(self, element: int) -> int:
        return self.ranks[element - 1]

    def best(self, s: Iterable[int]) -> int:
        return min(s, key=self)


def order_strategy(sigma: RankOrder, sets: Iterable[frozenset] | None = None) -> DetStrategy:
    """Map every nonempty set (or just ``sets``) to its ``sigma``-minimal element."""
    if sets is None:
        if sigma.n > ORDER_TABLE_CAP:
            raise ResourceLimitError(f"full order table capped at n={ORDER_TABLE_CAP}", 2**sigma.n - 1)
        sets = nonempty_subsets(sigma.n)
    return DetStrategy({s: sigma.best(s) for s in sets})


def min_element_strategy(n: int) -> DetStrategy:
    return order_strategy(RankOrder.identity(n))


# ---------------------------------------------------------------------------
# Exact evaluation


def agreement_probability(f: DetStrategy, g: DetStrategy, support: Support) -> Fraction:
    total = Fraction(0)
    for pair, w in support:
        if pair.a and pair.b and f(pair.a) == g(pair.b):
            total += w
    return total


def exact_error(f: DetStrategy, g: DetStrategy, d: PairDistribution | Support) -> Fraction:
    support = d.support() if isinstance(d, PairDistribution) else d
    return 1 - agreement_probability(f, g, support)


def marginals(strategy: DetStrategy, d: PairDistribution | Support, side: str, n: int | None = None) -> tuple[Fraction, ...]:
    """Output law of ``strategy`` on one side; mass of empty inputs is missing from the total."""
    support = d.support() if isinstance(d, PairDistribution) else d
    if n is None:
        n = support[0][0].n
    out = [Fraction(0)] * n
    for pair, w in support:
        s = pair.a if side == LEFT else pair.b
        if s:
            out[strategy(s) - 1] += w
    return tuple(out)


def beta_marginals(g: DetStrategy, d: PairDistribution | Support) -> tuple[Fraction, ...]:
    """``beta_i = Pr[g(B) = i]``."""
    return marginals(g, d, RIGHT)


def alpha_marginals(f: DetStrategy, d: PairDistribution | Support) -> tuple[Fraction, ...]:
    return marginals(f, d, LEFT)


def best_response(opponent: DetStrategy, d: PairDistribution | Support, side: str) -> DetStrategy:
    """Optimal table for ``side`` against a fixed ``opponent``.

    For each input set ``S`` on ``side``, picks ``argmax_{i in S} Pr[opponent = i, S]``,
    the joint (equivalently conditional) match mass.
    """
    if side not in (LEFT, RIGHT):
        raise InvalidInputError(f"side must be {LEFT!r} or {RIGHT!r}")
    support = d.support() if isinstance(d, PairDistribution) else d
    scores: dict[frozenset, dict[int, Fraction]] = {}
    for pair, w in support:
        mine, theirs = (pair.a, pair.b) if side == LEFT else (pair.b, pair.a)
        if not mine:
            continue
        row = scores.setdefault(mine, {})
        if theirs:
            i = opponent(theirs)
            if i in mine:
                row[i] = row.get(i, Fraction(0)) + w
    table = {}
    for s, row in scores.items():
        table[s] = min(s, key=lambda i: (-row.get(i, 0), i))
    return DetStrategy(table)


# ---------------------------------------------------------------------------
# Exhaustive search


@dataclass(frozen=True)
class BruteForceResult:
    error: Fraction
    f: DetStrategy
    g: DetStrategy
    space_size: int
    index: int  # position of f in the lexicographic scan


@dataclass(frozen=True)
class _ScanProblem:
    radices: tuple
    offsets: tuple
    matrix: np.ndarray  # (sum radices, sum |B|) weights
    segments: np.ndarray  # column start of each right set


def _integer_weights(support: Support) -> tuple[list, int]:
    denom = 1
    for _, w in support:
        denom = math.lcm(denom, w.denominator)
    return [(pair, int(w * denom)) for pair, w in support], denom


def _build_scan(support: Support, lefts: list, rights: list) -> tuple[_ScanProblem, int]:
    weighted, denom = _integer_weights(support)
    dtype = np.float64 if denom < 2**53 else object
    left_idx = {s: i for i, s in enumerate(lefts)}
    left_members = [sorted(s) for s in lefts]
    offsets = np.cumsum([0] + [len(m) for m in left_members])
    right_members = [sorted(s) for s in rights]
    col_start = np.cumsum([0] + [len(m) for m in right_members])
    right_idx = {s: i for i, s in enumerate(rights)}
    matrix = np.zeros((offsets[-1], col_start[-1]), dtype=dtype)
    for pair, w in weighted:
        if not pair.a or not pair.b:
            continue
        ai, bi = left_idx[pair.a], right_idx[pair.b]
        for j, i in enumerate(left_members[ai]):
            if i in pair.b:
                col = col_start[bi] + right_members[bi].index(i)
                matrix[offsets[ai] + j, col] += w
    problem = _ScanProblem(
        radices=tuple(len(m) for m in left_members),
        offsets=tuple(int(o) for o in offsets[:-1]),
        matrix=matrix,
        segments=col_start[:-1].astype(np.int64),
    )
    return problem, denom


def _scan_chunk(problem: _ScanProblem, start: int, stop: int):
    """Best (agreement, index) over strategy indices ``start..stop-1``; first index wins ties."""
    idx = np.arange(start, stop, dtype=np.int64)
    digits = np.unravel_index(idx, problem.radices)
    x = np.zeros((idx.size, problem.matrix.shape[0]), dtype=problem.matrix.dtype)
    rows = np.arange(idx.size)
    for off, dig in zip(problem.offsets, digits):
        x[rows, off + dig] = 1
    scores = x @ problem.matrix
    if problem.segments.size:
        per_set = np.maximum.reduceat(scores, problem.segments, axis=1)
        agree = per_set.sum(axis=1)
    else:
        agree = np.zeros(idx.size, dtype=problem.matrix.dtype)
    best = int(np.argmax(agree))
    return agree[best], start + best


def _scan_range(args):
    problem, start, stop, chunk = args
    best = None
    for lo in range(start, stop, chunk):
        cand = _scan_chunk(problem, lo, min(lo + chunk, stop))
        if best is None or cand[0] > best[0]:
            best = cand
    return best


def strategy_space_size(d: PairDistribution | Support) -> int:
    support = d.support() if isinstance(d, PairDistribution) else d
    return math.prod(len(s) for s in left_sets(support))


def brute_force_optimum(
    d: PairDistribution | Support,
    workers: int = 1,
    chunk: int = 1 << 14,
    cap: int = BRUTE_FORCE_CAP,
) -> BruteForceResult:
    """Exact optimum by scanning every left table against its best response.

    Left tables are visited in lexicographic order of their choice vectors
    (left sets in shortlex order, members ascending).  The reported witness is the
    first optimal table in that order, so the answer does not depend on how the
    scan is split across ``workers``.
    """
    support = d.support() if isinstance(d, PairDistribution) else d
    lefts, rights = left_sets(support), right_sets(support)
    size = math.prod(len(s) for s in lefts)
    if size > cap:
        raise ResourceLimitError(f"left strategy space {size} exceeds cap {cap}", size)
    problem, denom = _build_scan(support, lefts, rights)

    if workers <= 1 or size <= chunk:
        best = _scan_range((problem, 0, size, chunk))
    else:
        step = -(-size // workers)
        jobs = [(problem, lo, min(lo + step, size), chunk) for lo in range(0, size, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_range, jobs))
        best = results[0]
        for cand in results[1:]:
            if cand[0] > best[0]:
                best = cand
    agree_num, index = best

    digits = np.unravel_index(index, problem.radices) if lefts else ()
    f = DetStrategy({s: sorted(s)[int(dg)] for s, dg in zip(lefts, digits)})
    g = best_response(f, support, RIGHT)
    err = exact_error(f, g, support)
    if err != 1 - Fraction(int(agree_num), denom):
        raise InvariantViolation(f"scan value {1 - Fraction(int(agree_num), denom)} != exact {err}")
    return BruteForceResult(error=err, f=f, g=g, space_size=size, index=int(index))


@dataclass(frozen=True)
class IterationResult:
    error: Fraction
    f: DetStrategy
    g: DetStrategy
    rounds: int
    cycled: bool


def best_response_iteration(d: PairDistribution | Support, max_rounds: int = BR_MAX_ROUNDS) -> IterationResult:
    """Alternating best responses from the min-element start. An upper bound only."""
    support = d.support() if isinstance(d, PairDistribution) else d
    n = support[0][0].n
    sigma = RankOrder.identity(n)
    f = order_strategy(sigma, left_sets(support))
    g = best_response(f, support, RIGHT)
    err = exact_error(f, g, support)
    for rounds in range(1, max_rounds + 1):
        f2 = best_response(g, support, LEFT)
        g2 = best_response(f2, support, RIGHT)
        err2 = exact_error(f2, g2, support)
        if err2 >= err:
            return IterationResult(err, f, g, rounds, cycled=True)
        f, g, err = f2, g2, err2
    return IterationResult(err, f, g, max_rounds, cycled=False)


@dataclass(frozen=True)
class ProbeReport:
    n: int
    a: int
    b: int
    l: int
    optimum: Fraction
    minhash_value: Fraction
    verdict: str  # MATCH, BELOW or RESOURCE_LIMITED
    optimal: bool
    space_size: int

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "a": self.a,
            "b": self.b,
            "l": self.l,
            "optimum": format_rational(self.optimum),
            "minhash_value": format_rational(self.minhash_value),
            "verdict": self.verdict,
            "optimal": self.optimal,
            "space_size": self.space_size,
        }


def conjecture_probe(n: int, a: int, b: int, l: int, cap: int = BRUTE_FORCE_CAP, workers: int = 1) -> ProbeReport:
    """Compare the distributional optimum on the uniform ``(a, b, l)`` family with MinHash."""
    d = intersection_family(n, a, b, l)
    minhash_value = 1 - Fraction(l, a + b - l)
    try:
        res = brute_force_optimum(d, workers=workers, cap=cap)
    except ResourceLimitError as exc:
        it = best_response_iteration(d)
        return ProbeReport(n, a, b, l, it.error, minhash_value, "RESOURCE_LIMITED", False, exc.size or 0)
    if res.error > minhash_value:
        raise InvariantViolation(f"optimum {res.error} above MinHash average {minhash_value}")
    verdict = "MATCH" if res.error == minhash_value else "BELOW"
    return ProbeReport(n, a, b, l, res.error, minhash_value, verdict, True, res.space_size)
