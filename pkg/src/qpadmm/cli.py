"""``solve`` command: solve one problem file and print a JSON summary."""
import argparse
import json
import sys
from pathlib import Path

from .io import read_problem
from .precision import dtype_for
from .solver import Settings, SolverDiverged, solve


def main(argv=None):
    ap = argparse.ArgumentParser(prog="solve", description="Solve a QP stored in the text problem format.")
    ap.add_argument("--problem", required=True, type=Path)
    ap.add_argument("--settings", type=Path, help="JSON file of solver settings")
    ap.add_argument("--precision", choices=["single", "double"], default=None)
    args = ap.parse_args(argv)

    dtype = dtype_for(args.precision) if args.precision else None
    prob = read_problem(args.problem, dtype=dtype)
    settings = Settings.from_json(args.settings) if args.settings else Settings()
    try:
        out = solve(prob, settings)
    except SolverDiverged as exc:
        print(f"solve: {exc}", file=sys.stderr)
        return 1
    record = out.record()
    record.update(n=prob.n, m=prob.m, N=prob.nnz)
    print(json.dumps(record))
    return 0


if __name__ == "__main__":
    sys.exit(main())
