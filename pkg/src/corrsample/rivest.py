"""Matching-based strategy for k-subsets of [2k-1] that meet in exactly one element.

Left and right vertices are all k-subsets of [n], n = 2k - 1, in lexicographic
order; A and B are adjacent iff |A & B| = 1.  The graph is k-regular, so its
edges split into k perfect matchings.  A shared index r picks matching M_r and
each party outputs the single element its set shares with its partner in M_r.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .errors import InvalidInputError, InvariantViolation, ResourceLimitError

VERTEX_CAP = 10**4


@dataclass(frozen=True)
class RivestGraph:
    n: int
    k: int
    vertices: tuple  # k-subsets as sorted tuples, lexicographic; same list on both sides
    adjacency: tuple  # adjacency[u] = sorted right ids adjacent to left id u

    @property
    def edges(self) -> frozenset:
        return frozenset((u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs)

    def index(self, s) -> int:
        key = tuple(sorted(s))
        try:
            return self._lookup[key]
        except KeyError:
            raise InvalidInputError(f"{list(key)} is not a {self.k}-subset of [{self.n}]") from None

    @cached_property
    def _lookup(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}


def build_rivest_graph(n: int) -> RivestGraph:
    if not isinstance(n, int) or n < 3 or n % 2 == 0:
        raise InvalidInputError(f"n must be an odd integer >= 3, got {n!r}")
    k = (n + 1) // 2
    size = math.comb(n, k)
    if size > VERTEX_CAP:
        raise ResourceLimitError(f"C({n},{k}) = {size} exceeds {VERTEX_CAP}", size)
    vertices = tuple(itertools.combinations(range(1, n + 1), k))
    sets = [frozenset(v) for v in vertices]
    adjacency = tuple(
        tuple(j for j, b in enumerate(sets) if len(a & b) == 1) for a in sets
    )
    for u, nbrs in enumerate(adjacency):
        if len(nbrs) != k:
            raise InvariantViolation(f"vertex {vertices[u]} has degree {len(nbrs)}, expected {k}")
    return RivestGraph(n=n, k=k, vertices=vertices, adjacency=adjacency)


def _perfect_matching(adjacency: list[list[int]], size: int) -> list[int]:
    """Kuhn's augmenting paths, scanning left vertices and neighbours in ascending order."""
    match_right = [-1] * size

    def augment(root: int) -> bool:
        # explicit-stack DFS; same visit order as the recursive formulation
        seen = [False] * size
        stack = [(root, iter(adjacency[root]))]
        path: list[tuple[int, int]] = []
        while stack:
            u, nbrs = stack[-1]
            for v in nbrs:
                if seen[v]:
                    continue
                seen[v] = True
                path.append((u, v))
                if match_right[v] == -1:
                    for pu, pv in path:
                        match_right[pv] = pu
                    return True
                w = match_right[v]
                stack.append((w, iter(adjacency[w])))
                break
            else:
                stack.pop()
                if path:
                    path.pop()
        return False

    for u in range(size):
        if not augment(u):
            raise InvariantViolation(f"no perfect matching: left vertex {u} unmatched")
    match_left = [-1] * size
    for v, u in enumerate(match_right):
        match_left[u] = v
    return match_left


@dataclass(frozen=True)
class MatchingDecomposition:
    graph: RivestGraph
    matchings: tuple  # matchings[r-1][u] = right id matched to left id u in M_r

    @property
    def k(self) -> int:
        return len(self.matchings)

    def partner(self, r: int, u: int) -> int:
        return self.matchings[r - 1][u]

    @cached_property
    def _inverse(self) -> tuple:
        return tuple(tuple(sorted(range(len(m)), key=m.__getitem__)) for m in self.matchings)

    def inverse_partner(self, r: int, v: int) -> int:
        return self._inverse[r - 1][v]

    def to_json(self) -> dict:
        verts = self.graph.vertices
        return {
            "n": self.graph.n,
            "k": self.graph.k,
            "matchings": [
                [[list(verts[u]), list(verts[v])] for u, v in enumerate(m)] for m in self.matchings
            ],
        }


def decompose(graph: RivestGraph) -> MatchingDecomposition:
    size = len(graph.vertices)
    remaining = [list(nbrs) for nbrs in graph.adjacency]
    matchings = []
    for _ in range(graph.k):
        m = _perfect_matching(remaining, size)
        for u, v in enumerate(m):
            remaining[u].remove(v)
        matchings.append(tuple(m))
    if any(remaining):
        raise InvariantViolation("edges left over after k matchings")
    return MatchingDecomposition(graph=graph, matchings=tuple(matchings))


def rivest_sample(side: str, s, r: int, decomp: MatchingDecomposition) -> int:
    g = decomp.graph
    if len(set(s)) != g.k:
        raise InvalidInputError(f"input must be a {g.k}-subset, got {sorted(s)}")
    if not 1 <= r <= g.k:
        raise InvalidInputError(f"matching index must lie in [1, {g.k}], got {r}")
    me = g.index(s)
    if side == "left":
        other = g.vertices[decomp.partner(r, me)]
    elif side == "right":
        other = g.vertices[decomp.inverse_partner(r, me)]
    else:
        raise InvalidInputError(f"side must be 'left' or 'right', got {side!r}")
    common = set(s) & set(other)
    if len(common) != 1:
        raise InvariantViolation(f"matched sets {sorted(s)} and {list(other)} share {len(common)} elements")
    return common.pop()


def rivest_exact_error(n: int, decomp: MatchingDecomposition | None = None) -> Fraction:
    """``1 - 1/k``, confirmed by enumerating every edge against every matching index."""
    if decomp is None:
        decomp = decompose(build_rivest_graph(n))
    g = decomp.graph
    expected = 1 - Fraction(1, g.k)
    for u, nbrs in enumerate(g.adjacency):
        a = g.vertices[u]
        for v in nbrs:
            b = g.vertices[v]
            agree = sum(
                rivest_sample("left", a, r, decomp) == rivest_sample("right", b, r, decomp)
                for r in range(1, g.k + 1)
            )
            if 1 - Fraction(agree, g.k) != expected:
                raise InvariantViolation(f"pair {a}, {b} agrees {agree}/{g.k} times")
    return expected
