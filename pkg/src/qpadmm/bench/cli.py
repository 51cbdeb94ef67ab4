"""``bench`` command: run sweeps or write single generated problems."""
import argparse
import sys
from pathlib import Path

from ..io import write_problem
from ..precision import dtype_for
from ..solver import Settings
from .generators import CLASSES, BenchSpec, generate
from .harness import run_benchmark, size_means, write_means, write_records


def parse_scales(text):
    """``"1..8"`` or ``"1,3,6"`` (or a mix) to a sorted list of ints."""
    out = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = (int(t) for t in part.split(".."))
            if lo > hi:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.update(range(lo, hi + 1))
        else:
            out.add(int(part))
    if any(s < 1 for s in out):
        raise argparse.ArgumentTypeError("scale indices start at 1")
    return sorted(out)


def parse_classes(text):
    names = [c.strip() for c in text.split(",") if c.strip()]
    bad = [c for c in names if c not in CLASSES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown classes {bad}; choose from {', '.join(CLASSES)}")
    return names


def build_parser():
    ap = argparse.ArgumentParser(prog="bench", description="Benchmark sweeps over generated QP instances.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a sweep and write CSV records")
    run.add_argument("--classes", type=parse_classes, default=list(CLASSES))
    run.add_argument("--scales", type=parse_scales, default=parse_scales("1..8"))
    run.add_argument("--seeds", type=int, default=10, help="instances per (class, scale)")
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--means", type=Path, help="per-size averages (default: <out>.means.csv)")
    run.add_argument("--settings", type=Path, help="JSON file of solver settings")
    run.add_argument("--precision", choices=["single", "double"], default=None)
    run.add_argument("--workers", type=int, default=1)

    gen = sub.add_parser("gen", help="write one generated problem in text format")
    gen.add_argument("--class", dest="class_name", required=True, choices=CLASSES)
    gen.add_argument("--scale", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, type=Path)
    return ap


def _run(args):
    if args.seeds < 0:
        raise SystemExit("--seeds must be nonnegative")
    settings = Settings.from_json(args.settings) if args.settings else Settings()
    dtype = dtype_for(args.precision) if args.precision else None
    specs, records = run_benchmark(args.classes, args.scales, args.seeds, settings, dtype, args.workers)
    write_records(args.out, records)
    means = args.means or args.out.with_name(args.out.name + ".means.csv")
    write_means(means, size_means(specs, records))
    solved = sum(r.status == "solved" for r in records)
    print(f"{len(records)} instances, {solved} solved -> {args.out}")


def _gen(args):
    prob = generate(BenchSpec(args.class_name, args.scale, args.seed))
    write_problem(args.out, prob)
    print(f"{args.class_name} scale {args.scale} seed {args.seed}: n={prob.n} m={prob.m} N={prob.nnz} -> {args.out}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        _run(args)
    else:
        _gen(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
