"""Command line entry point: ``semisup <command> [options]``.

Commands: simulate, classify, prune, bench, diagnose, bayes. On success the
path of every file written is printed on stdout, one per line; failures
print a message on stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


from . import datasets, diagnostics, harness
from .datasets import GeneratorSpec, load_csv, prune_by_nn, read_points, write_index_map, write_points, write_sample
from .errors import InvalidInput
from .selftrain import FALLBACKS, VARIANTS, RunConfig, run


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--h", type=float, default=None, help="ball radius (bandwidth)")
    p.add_argument("--variant", choices=VARIANTS, default="sequential")
    p.add_argument("--grid-n", type=int, default=None, help="cells per axis for the grid-collapsed run")
    p.add_argument("--fallback", choices=FALLBACKS, default="none")
    p.add_argument("--k", type=int, default=None, help="k for the k-NN baseline")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--out", default=None)
    p.add_argument("--header", action="store_true", help="skip one header line in input CSVs")
    return p


def _generator_args(p):
    p.add_argument("--generator", choices=("sine", "truncgauss"), default="truncgauss")
    p.add_argument("--case", type=int, choices=(1, 2), default=1)
    p.add_argument("--l", type=int, default=None, help="pool size")
    p.add_argument("--n", type=int, default=None, help="seed size (sine, or random truncgauss seeds)")


_DEFAULTS = {"sine": {"l": 2400, "n": 20, "h": 0.15}, "truncgauss": {"l": 2000, "n": None, "h": 0.4}}


def _generator(args) -> GeneratorSpec:
    d = _DEFAULTS[args.generator]
    l = args.l if args.l is not None else d["l"]
    n = args.n if args.n is not None else d["n"]
    return GeneratorSpec(args.generator, l, n, case=args.case)


def _h(args, fallback=None):
    if args.h is not None:
        return args.h
    if fallback is None:
        raise InvalidInput("--h is required")
    return fallback


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="semisup", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="draw a sample and write it as CSV")
    _generator_args(p)

    p = sub.add_parser("classify", parents=[common], help="run self-training on CSV inputs")
    p.add_argument("--labeled", required=True, help="seed CSV: coordinates then 0/1 label")
    p.add_argument("--pool", required=True, help="pool CSV: coordinates")
    p.add_argument("--pool-labels", action="store_true", help="pool CSV carries a ground-truth last column")
    p.add_argument("--prune", type=float, default=None, help="nearest-neighbor pruning threshold")
    p.add_argument("--grid-bounds", type=float, nargs=2, default=None, metavar=("A", "B"))
    p.add_argument(
        "--score-unclassified",
        choices=("error", "skip"),
        default="error",
        help="how unclassified points enter the reported error (skip is for diagnostics)",
    )

    p = sub.add_parser("prune", parents=[common], help="nearest-neighbor pruning of a CSV")
    p.add_argument("--pool", required=True)
    p.add_argument("--threshold", type=float, required=True)

    p = sub.add_parser("bench", parents=[common], help="seeded replications and a summary table")
    _generator_args(p)
    p.add_argument("--data", default=None, help="labeled CSV to use instead of a generator")
    p.add_argument("--per-class", type=int, nargs=2, default=(10, 10))
    p.add_argument("--prune", type=float, default=None)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("diagnose", parents=[common], help="condition checks on a simulated instance")
    _generator_args(p)
    p.add_argument("--probe-step", type=float, default=None)

    p = sub.add_parser("bayes", parents=[common], help="Monte-Carlo Bayes error")
    _generator_args(p)
    p.add_argument("--m", type=int, default=1_000_000)
    return parser


def _cfg(args, h):
    return RunConfig(h=h, variant=args.variant, fallback=args.fallback, grid_n=args.grid_n)


def cmd_simulate(args):
    sample = _generator(args).draw(args.seed)
    return list(write_sample(args.out or "sample", sample).values())


def cmd_classify(args):
    sample = load_csv(args.labeled, args.pool, header=args.header, pool_labels=args.pool_labels)
    out = args.out or "trace.csv"
    written = []
    if args.prune is not None:
        pool, kept = prune_by_nn(sample.pool, args.prune)
        hidden = None if sample.hidden_labels is None else sample.hidden_labels[kept]
        sample = datasets.SplitSample(sample.seed, pool, hidden)
        map_path = os.path.splitext(out)[0] + "_kept.csv"
        write_index_map(map_path, kept)
        written.append(map_path)
    cfg = _cfg(args, _h(args))
    if args.grid_bounds is not None:
        cfg.grid_bounds = tuple(args.grid_bounds)
    trace = run(sample, cfg)
    trace.to_csv(out)
    if sample.hidden_labels is not None:
        err = harness.error_rate(trace, sample.hidden_labels, args.score_unclassified)
        print(f"error_rate={err:.6f}", file=sys.stderr)
    return [out] + written


def cmd_prune(args):
    pool = read_points(args.pool, args.header)
    kept_pts, kept = prune_by_nn(pool, args.threshold)
    out = args.out or "pruned.csv"
    write_points(out, kept_pts)
    map_path = os.path.splitext(out)[0] + "_kept.csv"
    write_index_map(map_path, kept)
    return [out, map_path]


def cmd_bench(args):
    if args.data:
        source = harness.CsvSource(args.data, per_class=tuple(args.per_class), prune=args.prune, header=args.header)
        h = _h(args)
    else:
        source = _generator(args)
        h = _h(args, _DEFAULTS[args.generator]["h"])
    spec = harness.ExperimentSpec(
        generator=source,
        run=_cfg(args, h),
        replications=args.reps,
        baseline_k=args.k,
        master_seed=args.seed,
        grid_step=args.grid_step,
    )
    result = harness.run_experiment(spec, workers=args.workers)
    print(result.summary.table(), file=sys.stderr)
    return list(harness.write_outputs(result, args.out or "bench").values())


def cmd_diagnose(args):
    gen = _generator(args)
    h = _h(args, _DEFAULTS[args.generator]["h"])
    sample = gen.draw(args.seed)
    report = diagnostics.instance_report(gen, sample, _cfg(args, h), probe_step=args.probe_step)
    out = args.out or "diagnose.json"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return [out]


def cmd_bayes(args):
    gen = _generator(args)
    est = datasets.bayes_error(gen.oracle, gen.sampler, args.m, args.seed)
    if args.out is None:
        print(repr(est))
        return []
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"generator": args.generator, "case": args.case, "m": args.m, "bayes_error": est}, fh)
        fh.write("\n")
    return [args.out]


COMMANDS = {
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "prune": cmd_prune,
    "bench": cmd_bench,
    "diagnose": cmd_diagnose,
    "bayes": cmd_bayes,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = COMMANDS[args.command](args)
    except (ValueError, OSError, harness.ReplicationError) as exc:
        print(f"semisup {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
