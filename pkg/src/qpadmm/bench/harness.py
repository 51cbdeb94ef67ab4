"""Solve sweeps over generated instances and write the results as CSV."""
import csv
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import groupby

import numpy as np

from ..solver import Settings, solve
from .generators import BenchSpec, generate


@dataclass
class BenchRecord:
    class_name: str
    N: int
    n: int
    m: int
    status: str
    iterations: int
    pcg_total: int
    runtime_seconds: float
    r_prim_inf: float
    r_dual_inf: float


RECORD_FIELDS = [f.name for f in dataclasses.fields(BenchRecord)]
MEAN_FIELDS = ["class_name", "scale_index", "instances", "solved", "N", "n", "m", "iterations", "pcg_total",
               "runtime_seconds"]


def run_instance(spec, settings=None, dtype=None):
    """Generate one instance and solve it. Only the solve is timed."""
    prob = generate(spec, dtype=dtype)
    try:
        out = solve(prob, settings or Settings())
    except (ArithmeticError, ValueError) as exc:
        # a failing instance is recorded, the sweep goes on
        return BenchRecord(spec.class_name, prob.nnz, prob.n, prob.m, f"error: {exc}", 0, 0, float("nan"),
                           float("nan"), float("nan"))
    return BenchRecord(spec.class_name, prob.nnz, prob.n, prob.m, out.status.value, out.iterations,
                       out.pcg_iterations_total, out.runtime, out.r_prim_inf, out.r_dual_inf)


def _run(args):
    return run_instance(*args)


def sweep_specs(classes, scales, seeds):
    """Specs in (class, scale, seed) order."""
    return [BenchSpec(c, s, seed, instances_per_size=seeds) for c in classes for s in scales for seed in range(seeds)]


def run_benchmark(classes, scales, seeds, settings=None, dtype=None, workers=1):
    """Solve every (class, scale, seed) combination; returns ``(specs, records)``.

    With ``workers > 1`` instances are solved in separate processes. The
    records always come back in spec order.
    """
    specs = sweep_specs(classes, scales, seeds)
    jobs = [(spec, settings, dtype) for spec in specs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run, jobs))
    else:
        records = [_run(job) for job in jobs]
    return specs, records


def size_means(specs, records):
    """Per (class, scale) averages over the seeded instances."""
    rows = []
    pairs = zip(specs, records)
    for (cls, scale), group in groupby(pairs, key=lambda sr: (sr[0].class_name, sr[0].scale_index)):
        recs = [r for _, r in group]

        def mean(attr):
            return float(np.mean([getattr(r, attr) for r in recs]))

        rows.append({
            "class_name": cls, "scale_index": scale, "instances": len(recs),
            "solved": sum(r.status == "solved" for r in recs),
            "N": mean("N"), "n": mean("n"), "m": mean("m"), "iterations": mean("iterations"),
            "pcg_total": mean("pcg_total"), "runtime_seconds": mean("runtime_seconds"),
        })
    return rows


def write_records(path, records):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=RECORD_FIELDS)
        w.writeheader()
        for r in records:
            w.writerow(dataclasses.asdict(r))


def write_means(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=MEAN_FIELDS)
        w.writeheader()
        w.writerows(rows)
