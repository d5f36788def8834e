"""Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 counter error,
4 resource limit exceeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import estimators as est
from . import harness
from .encoder import DEFAULT_COUNT_LIMIT, emit_dimacs, encode, exact_projected_count, parse_dimacs
from .errors import (ContractViolation, CounterError, InstanceParseError, InvalidArgument,
                     ReliabilityError, ResourceLimitError)
from .graph_model import TerminalPattern, load_instance, make_grid, serialize_instance
from .oracle import DEFAULT_EDGE_LIMIT, exact_unreliability
from .transform import serialize_edge_map, unweight

log = logging.getLogger("krelnet")

EXIT_USAGE = 2
EXIT_COUNTER = 3
EXIT_LIMIT = 4


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt_prob(u: Fraction) -> str:
    return f"{u.numerator}/{u.denominator} ({float(u):.6g})"


def cmd_gen(args):
    inst = make_grid(args.side, TerminalPattern(args.pattern), Fraction(args.p))
    _emit(serialize_instance(inst), args.out)


def cmd_exact(args):
    result = exact_unreliability(load_instance(args.instance), limit=args.limit)
    print(f"unreliability {_fmt_prob(result.unreliability)}")
    print(f"reliability {_fmt_prob(result.reliability)}")
    print(f"states {result.states_enumerated}")


def cmd_encode(args):
    uw = unweight(load_instance(args.instance))
    _emit(emit_dimacs(encode(uw)), args.out)
    if args.map:
        Path(args.map).write_text(serialize_edge_map(uw))


def cmd_count(args):
    if args.cnf:
        cnf = parse_dimacs(Path(args.instance).read_text())
        if args.counter_cmd:
            count = harness.invoke_counter(args.instance, args.counter_cmd, args.timeout)
        else:
            count = exact_projected_count(cnf, limit=args.limit)
        print(f"count {count}")
        print(f"M {cnf.M}")
        return
    u, M = harness.relnet_estimate(load_instance(args.instance), args.counter_cmd,
                                   args.timeout, args.limit)
    print(f"count {int(u * (1 << M))}")
    print(f"M {M}")
    print(f"unreliability {_fmt_prob(u)}")


def cmd_estimate(args):
    instance = load_instance(args.instance)
    params = est.PacParams(args.eps, args.delta)
    main, aux, cheap = est.Entropy(args.seed).spawn(3)
    stream = est.cmc_stream(instance, main)
    if args.method == "gbas":
        e = est.gbas(stream, est.choose_k(params), aux, params, max_samples=args.max_samples)
    elif args.method == "sra":
        e = est.sra(stream, params, max_samples=args.max_samples)
    elif args.method == "aa":
        e = est.aa(est.cmc_stream(instance, cheap), stream, params)
    else:
        if args.mom_n is None:
            raise InvalidArgument("--mom-n is required for median-of-means")
        e = est.median_of_means(stream, args.mom_n, args.delta, params)
    print(f"estimate {e.value!r}")
    print(f"N {e.samples_used}")
    print(f"tau {e.elapsed:.3f}")


def _bench_configs(args):
    if args.config:
        yield harness.ExperimentConfig.from_json(Path(args.config).read_text())
        return
    common = dict(method=args.method, eps=args.eps, delta=args.delta,
                  replications=args.reps, seed=args.seed, counter_cmd=args.counter_cmd,
                  timeout=args.timeout, count_limit=args.limit, mom_n=args.mom_n,
                  max_samples=args.max_samples, workers=args.workers)
    if args.instance:
        yield harness.ExperimentConfig(instance=args.instance, **common)
        return
    if not args.grid:
        raise InvalidArgument("bench needs --config, --instance or --grid")
    probs = args.p or [f"1/{2 ** i}" for i in harness.DEFAULT_P_EXPONENTS]
    for side in args.grid:
        for p in probs:
            grid = {"side": side, "pattern": args.pattern, "p": p}
            yield harness.ExperimentConfig(grid=grid, **common)


def cmd_bench(args):
    rows = []
    for config in _bench_configs(args):
        ident = config.instance or config.grid
        try:
            rows += harness.run_experiment(config)
        except ResourceLimitError as exc:
            log.warning("skipping %s: %s", ident, exc)
    if not rows:
        raise ResourceLimitError("every configuration hit a resource limit")
    out = args.out or (args.config and harness.ExperimentConfig.from_json(
        Path(args.config).read_text()).out)
    if out:
        harness.write_csv(rows, out)
    else:
        sys.stdout.write(harness.rows_to_csv(rows))


def cmd_report(args):
    rows = harness.read_csv(args.csv)
    for path in harness.report(rows, args.format, args.out, x=args.x):
        print(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krelnet", description="K-terminal network unreliability toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def pac(p):
        p.add_argument("--eps", type=float, default=0.2)
        p.add_argument("--delta", type=float, default=0.2)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mom-n", type=int, help="samples per experiment for median-of-means")
        p.add_argument("--max-samples", type=int, help="abort a run after this many samples")

    def counting(p):
        p.add_argument("--counter-cmd", help="external projected counter; CNF path is appended")
        p.add_argument("--timeout", type=float, default=harness.DEFAULT_TIMEOUT)
        p.add_argument("--limit", type=int, default=DEFAULT_COUNT_LIMIT,
                       help="largest M the internal counter accepts")

    p = sub.add_parser("gen", help="write a grid instance")
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--pattern", choices=[t.value for t in TerminalPattern], default="two")
    p.add_argument("--p", default="1/2", help="edge failure probability, e.g. 1/8")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("exact", help="exact unreliability by enumeration")
    p.add_argument("instance")
    p.add_argument("--limit", type=int, default=DEFAULT_EDGE_LIMIT)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("encode", help="emit the projected DIMACS encoding")
    p.add_argument("instance")
    p.add_argument("--out")
    p.add_argument("--map", help="also write the edge map sidecar here")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("count", help="counting-based unreliability")
    p.add_argument("instance")
    p.add_argument("--cnf", action="store_true", help="the input is a DIMACS file")
    counting(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("estimate", help="one PAC Monte Carlo estimate")
    p.add_argument("instance")
    p.add_argument("--method", choices=["gbas", "sra", "aa", "mom"], default="gbas")
    pac(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="replicated experiments written as CSV")
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--instance")
    p.add_argument("--grid", type=int, nargs="+", metavar="SIDE")
    p.add_argument("--pattern", choices=[t.value for t in TerminalPattern], default="two")
    p.add_argument("--p", nargs="+", help="failure probabilities (default 2^-i, i = 1,3,..,15)")
    p.add_argument("--method", choices=harness.METHODS, default="gbas")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    pac(p)
    counting(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="convert a results CSV")
    p.add_argument("csv")
    p.add_argument("--format", choices=["csv", "json", "svg-plot"], default="json")
    p.add_argument("--x", help="parameter for svg-plot, e.g. side or p")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except CounterError as exc:
        print(f"counter error: {exc}", file=sys.stderr)
        if exc.stderr:
            print(exc.stderr, file=sys.stderr)
        return EXIT_COUNTER
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (InstanceParseError, InvalidArgument, ContractViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ReliabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
