"""Universe, distributions, subsets, total variation distance and closed-form bounds.

Elements are 1-indexed: the universe of size ``n`` is ``{1, ..., n}``.
Two numeric paths coexist. Exact work uses :class:`fractions.Fraction`;
Monte Carlo paths accept plain floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

from .errors import InvalidInputError

Number = Union[Fraction, float]

FLOAT_SUM_TOL = 1e-12


def parse_rational(text: str | int | float | Fraction) -> Fraction:
    """Parse ``"p/q"``, an integer or a decimal literal into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise InvalidInputError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(str(text))
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError, AttributeError) as exc:
        raise InvalidInputError(f"not a rational literal: {text!r}") from exc


def format_rational(x: Number) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(float(x))


@dataclass(frozen=True)
class Universe:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise InvalidInputError(f"universe size must be a positive integer, got {self.n!r}")

    def elements(self) -> range:
        return range(1, self.n + 1)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over ``[n]``; ``probs[i - 1]`` is the mass of element ``i``."""

    probs: tuple

    def __init__(self, probs: Iterable[Number]):
        values = tuple(probs)
        if not values:
            raise InvalidInputError("distribution needs at least one element")
        exact = all(isinstance(v, Rational) for v in values)
        if exact:
            values = tuple(Fraction(v) for v in values)
        else:
            values = tuple(float(v) for v in values)
            if any(math.isnan(v) or math.isinf(v) for v in values):
                raise InvalidInputError("probabilities must be finite")
        if any(v < 0 for v in values):
            raise InvalidInputError("probabilities must be non-negative")
        total = sum(values)
        if exact and total != 1:
            raise InvalidInputError(f"probabilities sum to {total}, expected exactly 1")
        if not exact and abs(total - 1.0) > FLOAT_SUM_TOL:
            raise InvalidInputError(f"probabilities sum to {total!r}, expected 1 within {FLOAT_SUM_TOL}")
        object.__setattr__(self, "probs", values)

    @classmethod
    def uniform(cls, subset: Iterable[int], n: int) -> "DiscreteDistribution":
        """Flat distribution on ``subset`` inside ``[n]`` (exact)."""
        members = _check_subset(subset, n)
        if not members:
            raise InvalidInputError("uniform distribution over the empty set")
        w = Fraction(1, len(members))
        return cls(w if i in members else Fraction(0) for i in range(1, n + 1))

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def universe(self) -> Universe:
        return Universe(self.n)

    @property
    def exact(self) -> bool:
        return isinstance(self.probs[0], Fraction)

    def __getitem__(self, element: int) -> Number:
        if not 1 <= element <= self.n:
            raise InvalidInputError(f"element {element} outside [1, {self.n}]")
        return self.probs[element - 1]

    def support(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.probs, start=1) if v > 0)

    def flat_support(self) -> frozenset[int] | None:
        """The support if this distribution is uniform on it, else ``None``."""
        supp = self.support()
        target = 1 / len(supp) if not self.exact else Fraction(1, len(supp))
        for i in supp:
            v = self.probs[i - 1]
            if self.exact and v != target:
                return None
            if not self.exact and abs(v - target) > FLOAT_SUM_TOL:
                return None
        return supp


@dataclass(frozen=True)
class SubsetPair:
    """A pair ``(A, B)`` of subsets of ``[n]``; either side may be empty."""

    a: frozenset
    b: frozenset
    n: int

    def __init__(self, a: Iterable[int], b: Iterable[int], n: int):
        Universe(n)
        object.__setattr__(self, "a", _check_subset(a, n))
        object.__setattr__(self, "b", _check_subset(b, n))
        object.__setattr__(self, "n", n)

    def require_nonempty(self) -> None:
        if not self.a or not self.b:
            raise InvalidInputError("operation requires both sets to be nonempty")


def _check_subset(subset: Iterable[int], n: int) -> frozenset:
    members = frozenset(subset)
    for x in members:
        if not isinstance(x, int) or isinstance(x, bool) or not 1 <= x <= n:
            raise InvalidInputError(f"element {x!r} outside [1, {n}]")
    return members


def tv_distance(p: DiscreteDistribution, q: DiscreteDistribution) -> Number:
    """Half the L1 distance. Exact when both inputs are exact."""
    if p.n != q.n:
        raise InvalidInputError(f"universe mismatch: {p.n} vs {q.n}")
    if p.exact and q.exact:
        return sum((abs(x - y) for x, y in zip(p.probs, q.probs)), Fraction(0)) / 2
    return 0.5 * math.fsum(abs(float(x) - float(y)) for x, y in zip(p.probs, q.probs))


def flat_tv_distance(pair: SubsetPair) -> Fraction:
    """TV distance between the uniform distributions on ``pair.a`` and ``pair.b``."""
    pair.require_nonempty()
    return 1 - Fraction(len(pair.a & pair.b), max(len(pair.a), len(pair.b)))


def holenstein_bound(delta: Number) -> Number:
    """Disagreement achieved by the grid-MinHash protocol at TV distance ``delta``."""
    _check_unit(delta, "delta")
    return 2 * delta / (1 + delta)


def dp_lower_bound(p: Number) -> Number:
    """Infinite-universe optimal error of constrained agreement under the product family."""
    _check_unit(p, "p")
    return 2 * (1 - p) / (2 - p)


def finite_dp_optimum(n: int, p: Number) -> Number:
    """Optimal constrained-agreement error under the product family on ``[n]``.

    Pairs with an empty side count as disagreement; the tail over
    :func:`dp_lower_bound` is ``p (1-p)^(2n) / (2-p)``.
    """
    Universe(n)
    _check_unit(p, "p")
    return (2 * (1 - p) + p * (1 - p) ** (2 * n)) / (2 - p)


def _check_unit(x: Number, name: str) -> None:
    if not 0 <= x <= 1:
        raise InvalidInputError(f"{name} must lie in [0, 1], got {x}")
