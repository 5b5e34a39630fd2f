"""Seeded Monte Carlo estimation and TV-distance sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import rng
from .core import (
    DiscreteDistribution,
    Number,
    SubsetPair,
    dp_lower_bound,
    format_rational,
    holenstein_bound,
    parse_rational,
)
from .errors import InvalidInputError
from .sampling import (
    GridParams,
    continuous_batch,
    continuous_exact_error,
    grid_embed,
    holenstein_batch,
    holenstein_exact_error,
    minhash_batch,
    minhash_exact_error,
)

STRATEGIES = ("minhash", "holenstein", "continuous")
CSV_COLUMNS = ("delta", "bound", "empirical", "exact", "lower", "stderr", "trials", "seed")
_CELLS_PER_CHUNK = 1 << 22


@dataclass(frozen=True)
class TrialConfig:
    master_seed: int = 0
    trials: int = 10_000
    strategy: str = "minhash"
    gamma: Fraction | None = None
    threads: int = 1

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidInputError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.trials < 1:
            raise InvalidInputError("trials must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        if self.strategy == "holenstein" and self.gamma is None:
            raise InvalidInputError("holenstein strategy needs gamma")


@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    stderr: float
    disagreements: int
    trials: int
    seed: int

    def to_json(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "disagreements": self.disagreements,
            "trials": self.trials,
            "seed": self.seed,
        }


def _party_samplers(strategy: str, p: DiscreteDistribution, q: DiscreteDistribution, gamma):
    """Return ``(alice, bob, row_width)``: batch samplers over trial seeds."""
    if p.n != q.n:
        raise InvalidInputError(f"universe mismatch: {p.n} vs {q.n}")
    if strategy == "minhash":
        a, b = p.flat_support(), q.flat_support()
        if a is None or b is None:
            raise InvalidInputError("MinHash needs flat (uniform-on-support) inputs")
        return (lambda s: minhash_batch(a, s)), (lambda s: minhash_batch(b, s)), max(len(a), len(b))
    if strategy == "holenstein":
        params = GridParams(gamma)
        ep, eq = grid_embed(p, params), grid_embed(q, params)
        return (lambda s: holenstein_batch(ep, s)), (lambda s: holenstein_batch(eq, s)), max(ep.size, eq.size)
    if strategy == "continuous":
        return (lambda s: continuous_batch(p, s)), (lambda s: continuous_batch(q, s)), 64
    raise InvalidInputError(f"unknown strategy {strategy!r}")


def count_disagreements(
    alice: Callable, bob: Callable, master_seed: int, trials: int, chunk: int, threads: int = 1
) -> int:
    """Integer count over trials ``0..trials-1``; independent of ``chunk`` and ``threads``."""

    def run(lo: int) -> int:
        seeds = rng.derive_seeds(master_seed, lo, min(lo + chunk, trials))
        return int(np.count_nonzero(alice(seeds) != bob(seeds)))

    starts = range(0, trials, chunk)
    if threads <= 1:
        return sum(run(lo) for lo in starts)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return sum(pool.map(run, starts))


def monte_carlo_error(p: DiscreteDistribution, q: DiscreteDistribution, cfg: TrialConfig) -> MonteCarloResult:
    alice, bob, width = _party_samplers(cfg.strategy, p, q, cfg.gamma)
    chunk = max(1, _CELLS_PER_CHUNK // max(width, 1))
    bad = count_disagreements(alice, bob, cfg.master_seed, cfg.trials, chunk, cfg.threads)
    est = bad / cfg.trials
    return MonteCarloResult(
        estimate=est,
        stderr=math.sqrt(est * (1 - est) / cfg.trials),
        disagreements=bad,
        trials=cfg.trials,
        seed=cfg.master_seed,
    )


def exact_error_for(strategy: str, p: DiscreteDistribution, q: DiscreteDistribution, gamma=None) -> Number:
    if strategy == "minhash":
        a, b = p.flat_support(), q.flat_support()
        if a is None or b is None:
            raise InvalidInputError("MinHash needs flat (uniform-on-support) inputs")
        return minhash_exact_error(SubsetPair(a, b, p.n))
    if strategy == "holenstein":
        return holenstein_exact_error(p, q, GridParams(gamma))
    if strategy == "continuous":
        return continuous_exact_error(p, q)
    raise InvalidInputError(f"unknown strategy {strategy!r}")


def flat_pair_at(delta: Fraction) -> SubsetPair:
    """``A = {1..t}``, ``B = {s+1..s+t}`` in ``[s+t]`` for ``delta = s/t`` in lowest terms."""
    s, t = delta.numerator, delta.denominator
    return SubsetPair(range(1, t + 1), range(s + 1, s + t + 1), s + t)


@dataclass(frozen=True)
class SweepRow:
    delta: Fraction
    bound: Fraction
    empirical: float | None
    exact: Number | None
    lower: Fraction
    stderr: float | None
    trials: int
    seed: int
    flagged: bool = False

    def csv_fields(self) -> list[str]:
        def fmt(x):
            return "" if x is None else format_rational(x)

        return [
            fmt(self.delta), fmt(self.bound), fmt(self.empirical), fmt(self.exact),
            fmt(self.lower), fmt(self.stderr), str(self.trials), str(self.seed),
        ]


@dataclass(frozen=True)
class SweepReport:
    strategy: str
    rows: tuple

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "columns": list(CSV_COLUMNS) + ["flagged"],
            "rows": [r.csv_fields() + [r.flagged] for r in self.rows],
        }


def sweep_delta(
    deltas: Sequence, cfg: TrialConfig, n: int | None = None, monte_carlo: bool = True
) -> SweepReport:
    """Tabulate the chosen strategy's error on an exact-``delta`` flat pair against ``2 delta/(1+delta)``.

    With ``n`` given, a ``delta`` whose construction needs more than ``n`` elements
    yields a flagged row with blank error columns.
    """
    ds = [parse_rational(d) for d in deltas]
    if any(not 0 <= d <= 1 for d in ds):
        raise InvalidInputError("deltas must lie in [0, 1]")
    if any(b <= a for a, b in zip(ds, ds[1:])):
        raise InvalidInputError("deltas must be strictly increasing")
    rows = []
    for i, delta in enumerate(ds):
        seed = rng.derive_seed(cfg.master_seed, i)
        bound, lower = holenstein_bound(delta), dp_lower_bound(1 - delta)
        pair = flat_pair_at(delta)
        if n is not None and pair.n > n:
            rows.append(SweepRow(delta, bound, None, None, lower, None, 0, seed, flagged=True))
            continue
        p = DiscreteDistribution.uniform(pair.a, pair.n)
        q = DiscreteDistribution.uniform(pair.b, pair.n)
        exact = exact_error_for(cfg.strategy, p, q, cfg.gamma)
        empirical = stderr = None
        trials = 0
        if monte_carlo:
            row_cfg = TrialConfig(seed, cfg.trials, cfg.strategy, cfg.gamma, cfg.threads)
            mc = monte_carlo_error(p, q, row_cfg)
            empirical, stderr, trials = mc.estimate, mc.stderr, mc.trials
        rows.append(SweepRow(delta, bound, empirical, exact, lower, stderr, trials, seed))
    return SweepReport(cfg.strategy, tuple(rows))
