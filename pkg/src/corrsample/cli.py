"""Command-line entry point: ``corrsample <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 resource limit, 4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import agreement, rng
from .core import (
    DiscreteDistribution,
    SubsetPair,
    finite_dp_optimum,
    dp_lower_bound,
    flat_tv_distance,
    format_rational,
    holenstein_bound,
    parse_rational,
    tv_distance,
)
from .errors import CorrSampleError, InvalidInputError
from .harness import STRATEGIES, TrialConfig, exact_error_for, monte_carlo_error, sweep_delta
from .io import dumps_json, load_distribution, load_subset, render_sweep_csv
from .rivest import build_rivest_graph, decompose, rivest_exact_error, rivest_sample
from .sampling import (
    GridParams,
    holenstein_cell_error,
    holenstein_error_bound,
    holenstein_exact_error,
    holenstein_marginals,
    minhash_exact_error,
)

R = format_rational


def parse_set(text: str) -> list[int]:
    """``"1-3,7"`` -> ``[1, 2, 3, 7]``."""
    out: list[int] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        try:
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                if hi < lo:
                    raise ValueError(part)
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise InvalidInputError(f"bad set literal {text!r}") from None
    return out


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except InvalidInputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _trial_args(p: argparse.ArgumentParser, default_trials: int = 0) -> None:
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--trials", type=int, default=default_trials)
    p.add_argument("--threads", type=int, default=1)


def _out_args(p: argparse.ArgumentParser, csv_ok: bool = False) -> None:
    p.add_argument("--out", type=Path, help="write here instead of stdout")
    p.add_argument("--format", choices=("json", "csv") if csv_ok else ("json",), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrsample", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tv", help="total variation distance between two distribution files")
    p.add_argument("p", type=Path)
    p.add_argument("q", type=Path)
    _out_args(p)

    p = sub.add_parser("minhash", help="MinHash on two flat inputs")
    p.add_argument("--n", type=int)
    p.add_argument("--a", help="set literal, e.g. 1-500")
    p.add_argument("--b")
    p.add_argument("--a-file", type=Path)
    p.add_argument("--b-file", type=Path)
    _trial_args(p)
    _out_args(p)

    p = sub.add_parser("holenstein", help="grid-embedded MinHash on two distributions")
    p.add_argument("p", type=Path)
    p.add_argument("q", type=Path)
    p.add_argument("--gamma", type=_rational, required=True)
    _trial_args(p)
    _out_args(p)

    p = sub.add_parser("rivest", help="matching strategy on k-subsets of [2k-1]")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", help="Alice's k-subset (optional, to sample)")
    p.add_argument("--b", help="Bob's k-subset (optional, to sample)")
    p.add_argument("--seed", type=_seed, default=0)
    _out_args(p)

    p = sub.add_parser("matchings", help="perfect-matching decomposition as JSON")
    p.add_argument("--n", type=int, required=True)
    _out_args(p)

    p = sub.add_parser("bruteforce", help="exact constrained-agreement optimum")
    p.add_argument("--family", choices=("product", "positive", "match", "intersection"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=_rational)
    p.add_argument("--delta", type=_rational)
    p.add_argument("--a", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--workers", type=int, default=1)
    _out_args(p)

    p = sub.add_parser("probe", help="brute-force optimum vs MinHash on the uniform (a,b,l) family")
    for flag in ("--n", "--a", "--b", "--l"):
        p.add_argument(flag, type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    _out_args(p)

    p = sub.add_parser("sweep", help="error vs 2d/(1+d) on exact-delta flat pairs")
    p.add_argument("--strategy", choices=STRATEGIES, default="minhash")
    p.add_argument("--deltas", default="0,1/10,1/4,1/3,1/2,3/4,1")
    p.add_argument("--gamma", type=_rational)
    p.add_argument("--n", type=int, help="flag deltas whose construction needs more than n elements")
    _trial_args(p, default_trials=10_000)
    _out_args(p, csv_ok=True)

    p = sub.add_parser("montecarlo", help="seeded disagreement estimate for two distribution files")
    p.add_argument("p", type=Path)
    p.add_argument("q", type=Path)
    p.add_argument("--strategy", choices=STRATEGIES, default="holenstein")
    p.add_argument("--gamma", type=_rational)
    _trial_args(p, default_trials=100_000)
    _out_args(p, csv_ok=True)
    return parser


def _flat_input(args, side: str) -> tuple[frozenset, int | None]:
    literal, path = getattr(args, side), getattr(args, f"{side}_file")
    if (literal is None) == (path is None):
        raise InvalidInputError(f"give exactly one of --{side} or --{side}-file")
    if path is not None:
        return load_subset(path)
    return frozenset(parse_set(literal)), None


def _monte_carlo(p, q, args, strategy: str, gamma=None) -> dict:
    if args.trials <= 0:
        return {}
    cfg = TrialConfig(args.seed, args.trials, strategy, gamma, args.threads)
    return {"monte_carlo": monte_carlo_error(p, q, cfg).to_json()}


def cmd_tv(args) -> dict:
    p, q = load_distribution(args.p), load_distribution(args.q)
    delta = tv_distance(p, q)
    return {"tv": R(delta), "holenstein_bound": R(holenstein_bound(delta)), "exact": p.exact and q.exact}


def cmd_minhash(args) -> dict:
    a, na = _flat_input(args, "a")
    b, nb = _flat_input(args, "b")
    n = args.n or na or nb or max(a | b, default=1)
    if (na and na != n) or (nb and nb != n):
        raise InvalidInputError("subset files disagree on n")
    pair = SubsetPair(a, b, n)
    pair.require_nonempty()
    out = {
        "n": n,
        "intersection": len(a & b),
        "union": len(a | b),
        "tv": R(flat_tv_distance(pair)),
        "exact_error": R(minhash_exact_error(pair)),
    }
    p, q = DiscreteDistribution.uniform(a, n), DiscreteDistribution.uniform(b, n)
    out.update(_monte_carlo(p, q, args, "minhash"))
    return out


def cmd_holenstein(args) -> dict:
    p, q = load_distribution(args.p), load_distribution(args.q)
    params = GridParams(args.gamma)
    delta = tv_distance(p, q)
    out = {
        "gamma": R(params.gamma),
        "tv": R(delta),
        "marginals_p": [R(x) for x in holenstein_marginals(p, params)],
        "marginals_q": [R(x) for x in holenstein_marginals(q, params)],
        "cell_error": R(holenstein_cell_error(p, q, params)),
        "exact_error": R(holenstein_exact_error(p, q, params)),
        "error_bound": R(holenstein_error_bound(delta, params.gamma, p.n)),
        "limit_bound": R(holenstein_bound(delta)),
    }
    out.update(_monte_carlo(p, q, args, "holenstein", params.gamma))
    return out


def cmd_rivest(args) -> dict:
    decomp = decompose(build_rivest_graph(args.n))
    k = decomp.k
    out = {
        "n": args.n,
        "k": k,
        "edges": sum(len(x) for x in decomp.graph.adjacency),
        "exact_error": R(rivest_exact_error(args.n, decomp)),
        "minhash_error": R(1 - Fraction(1, args.n)),
    }
    if args.a or args.b:
        r = rng.derive_seed(args.seed, 0) % k + 1
        out["r"] = r
        if args.a:
            out["alice"] = rivest_sample("left", parse_set(args.a), r, decomp)
        if args.b:
            out["bob"] = rivest_sample("right", parse_set(args.b), r, decomp)
    return out


def cmd_matchings(args) -> dict:
    return decompose(build_rivest_graph(args.n)).to_json()


def _family(args) -> tuple[agreement.PairDistribution, dict]:
    def need(*names):
        missing = [x for x in names if getattr(args, x) is None]
        if missing:
            raise InvalidInputError(f"family {args.family} needs --{' --'.join(missing)}")

    if args.family == "product":
        need("p")
        return agreement.product(args.n, args.p), {
            "closed_form": R(finite_dp_optimum(args.n, args.p)),
            "limit_lower_bound": R(dp_lower_bound(args.p)),
        }
    if args.family == "positive":
        need("p", "delta")
        return agreement.positively_correlated(args.n, args.p, args.delta), {}
    if args.family == "match":
        return agreement.match_family(args.n), {"two_over_n": R(Fraction(2, args.n))}
    need("a", "b", "l")
    return agreement.intersection_family(args.n, args.a, args.b, args.l), {
        "minhash_value": R(1 - Fraction(args.l, args.a + args.b - args.l))
    }


def cmd_bruteforce(args) -> dict:
    d, ref = _family(args)
    res = agreement.brute_force_optimum(d, workers=args.workers)
    return {
        "family": {k: (R(v) if isinstance(v, Fraction) else v) for k, v in d.describe().items()},
        "optimum": R(res.error),
        "space_size": res.space_size,
        "f": res.f.to_json(),
        "g": res.g.to_json(),
        "reference": ref,
    }


def cmd_probe(args) -> dict:
    return agreement.conjecture_probe(args.n, args.a, args.b, args.l, workers=args.workers).to_json()


def cmd_sweep(args):
    deltas = [x for x in args.deltas.split(",") if x.strip()]
    cfg = TrialConfig(args.seed, max(args.trials, 1), args.strategy, args.gamma, args.threads)
    report = sweep_delta(deltas, cfg, n=args.n, monte_carlo=args.trials > 0)
    if args.format == "csv":
        return render_sweep_csv(report)
    return report.to_json()


def cmd_montecarlo(args):
    p, q = load_distribution(args.p), load_distribution(args.q)
    cfg = TrialConfig(args.seed, args.trials, args.strategy, args.gamma, args.threads)
    mc = monte_carlo_error(p, q, cfg)
    exact = exact_error_for(args.strategy, p, q, args.gamma)
    delta = tv_distance(p, q)
    if args.format == "csv":
        return (
            "strategy,estimate,stderr,exact,bound,trials,seed\n"
            f"{args.strategy},{mc.estimate!r},{mc.stderr!r},{R(exact)},{R(holenstein_bound(delta))},"
            f"{mc.trials},{mc.seed}\n"
        )
    return {"strategy": args.strategy, **mc.to_json(), "exact_error": R(exact), "bound": R(holenstein_bound(delta))}


COMMANDS = {
    "tv": cmd_tv,
    "minhash": cmd_minhash,
    "holenstein": cmd_holenstein,
    "rivest": cmd_rivest,
    "matchings": cmd_matchings,
    "bruteforce": cmd_bruteforce,
    "probe": cmd_probe,
    "sweep": cmd_sweep,
    "montecarlo": cmd_montecarlo,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except CorrSampleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InvalidInputError.exit_code
    text = result if isinstance(result, str) else dumps_json(result)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
