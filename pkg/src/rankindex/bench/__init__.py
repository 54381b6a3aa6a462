"""Benchmark harness: dataset generation, CSV ingestion, persistence,
workload execution, and the CLI."""

from .generate import gen_directions, gen_uniform, gen_zipfian
from .ingest import LoadResult, load_csv
from .workload import ReportRow, WorkloadSpec, parse_workload, run_workload

__all__ = [
    "LoadResult",
    "ReportRow",
    "WorkloadSpec",
    "gen_directions",
    "gen_uniform",
    "gen_zipfian",
    "load_csv",
    "parse_workload",
    "run_workload",
]
