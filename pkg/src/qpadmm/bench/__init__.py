"""Benchmark problem generators and the sweep harness."""
from .generators import CLASSES, BenchSpec, generate
from .harness import BenchRecord, run_benchmark

__all__ = ["CLASSES", "BenchRecord", "BenchSpec", "generate", "run_benchmark"]
