"""Workload specification parsing and the measurement loop.

A workload file is line-oriented ``key = value`` text (``#`` comments).
The runner builds whatever the query kind needs (sample, index), executes
the queries with per-query wall timing, optionally verifies each answer
against the exhaustive oracle, and emits one CSV row per query plus a
key=value summary block.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import (
    Dataset,
    ScoringVector,
    StripeRange,
    _kth_position,
    score_rows,
    select_rank_exhaustive,
)
from ..dar import conformal_query, exact_query
from ..epsample import DEFAULT_SIZE_CONSTANT, build_eps_sample
from ..errors import UsageError
from ..hier import build_hier
from ..kthlevel2d import build_levels_2d, query_kth_2d
from ..srr import ExhaustiveBackend, ScanStats, kdtree_build
from . import storage
from .generate import gen_directions, gen_uniform, gen_zipfian
from .ingest import load_csv

__all__ = ["WorkloadSpec", "ReportRow", "parse_workload", "run_workload", "REPORT_HEADER"]

QUERY_KINDS = ("srs", "conformal", "exact", "kthlevel2d")
BACKENDS = ("exhaustive", "kdtree", "hier")

REPORT_HEADER = [
    "query_index",
    "wall_ns",
    "points_examined",
    "nodes_visited",
    "result_size",
    "recall",
    "backend",
    "params",
]


@dataclass(frozen=True)
class WorkloadSpec:
    dataset: str = "generated"  # generated | csv
    csv_path: str = ""
    csv_columns: tuple[str, ...] = ()
    csv_normalize: str = "none"
    n: int = 1000
    d: int = 4
    dist: str = "uniform"  # uniform | zipfian:s,V
    dataset_seed: int = 0
    kind: str = "srs"
    q: int = 100
    width_points: int = 0  # srs: stripe sized by point count
    width_score: float = 0.0  # srs: stripe sized by score width
    i_rule: str = "uniform"  # uniform | fixed:<i> | sweep:<i1,i2,...>
    epsilon: float = 1.0 / 16.0
    phi: float = 0.1
    kappa: int = 20
    backend: str = "exhaustive"
    r: int = 4
    sample_c: float = DEFAULT_SIZE_CONSTANT
    sample_seed: int = 1
    index_seed: int = 2
    query_seed: int = 3
    verify: bool = False


@dataclass(frozen=True)
class ReportRow:
    query_index: int
    wall_ns: int
    points_examined: int
    nodes_visited: int
    result_size: int
    recall: int
    backend: str
    params: str

    def as_csv(self) -> list[str]:
        return [
            str(self.query_index),
            str(self.wall_ns),
            str(self.points_examined),
            str(self.nodes_visited),
            str(self.result_size),
            str(self.recall),
            self.backend,
            self.params,
        ]


_INT_KEYS = {
    "n",
    "d",
    "dataset_seed",
    "q",
    "width_points",
    "kappa",
    "r",
    "sample_seed",
    "index_seed",
    "query_seed",
}
_FLOAT_KEYS = {"width_score", "epsilon", "phi", "sample_c"}
_BOOL_KEYS = {"verify"}


def parse_workload(text: str) -> WorkloadSpec:
    """Parse ``key = value`` lines; errors carry the offending line."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"workload line {lineno}: expected 'key = value': {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in WorkloadSpec.__dataclass_fields__:
            raise UsageError(f"workload line {lineno}: unknown key '{key}'")
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _BOOL_KEYS:
                values[key] = val.lower() in ("1", "true", "yes", "on")
            elif key == "csv_columns":
                values[key] = tuple(c.strip() for c in val.split(",") if c.strip())
            else:
                values[key] = val
        except ValueError as exc:
            raise UsageError(f"workload line {lineno}: field '{key}': {exc}") from exc
    spec = WorkloadSpec(**values)
    validate_spec(spec)
    return spec


def validate_spec(spec: WorkloadSpec) -> None:
    if spec.dataset not in ("generated", "csv"):
        raise UsageError(f"field 'dataset': unknown source '{spec.dataset}'")
    if spec.kind not in QUERY_KINDS:
        raise UsageError(f"field 'kind': unknown query kind '{spec.kind}'")
    if spec.backend not in BACKENDS:
        raise UsageError(f"field 'backend': unknown backend '{spec.backend}'")
    if spec.n < 1 or spec.d < 1:
        raise UsageError("fields 'n'/'d': must be positive")
    if spec.q < 0:
        raise UsageError("field 'q': must be nonnegative")
    if not 0.0 < spec.epsilon < 1.0:
        raise UsageError("field 'epsilon': must lie in (0, 1)")
    if not 0.0 < spec.phi < 1.0:
        raise UsageError("field 'phi': must lie in (0, 1)")
    if spec.r < 2:
        raise UsageError("field 'r': decay rate must be at least 2")
    if spec.dist != "uniform" and not spec.dist.startswith("zipfian:"):
        raise UsageError(f"field 'dist': unknown distribution '{spec.dist}'")
    if spec.dist.startswith("zipfian:"):
        _parse_zipf(spec.dist)
    if spec.i_rule != "uniform":
        if not (spec.i_rule.startswith("fixed:") or spec.i_rule.startswith("sweep:")):
            raise UsageError(f"field 'i_rule': unknown rule '{spec.i_rule}'")
        body = spec.i_rule.split(":", 1)[1]
        try:
            ranks = [int(v) for v in body.split(",")]
        except ValueError as exc:
            raise UsageError(f"field 'i_rule': bad rank list '{body}'") from exc
        if not ranks or any(i < 1 for i in ranks):
            raise UsageError("field 'i_rule': ranks must be positive")
    if spec.dataset == "csv" and not spec.csv_path:
        raise UsageError("field 'csv_path': required when dataset = csv")


def _parse_zipf(dist: str) -> tuple[float, int]:
    body = dist.split(":", 1)[1]
    try:
        s_str, v_str = body.split(",")
        s, V = float(s_str), int(v_str)
    except ValueError as exc:
        raise UsageError(f"field 'dist': expected zipfian:s,V got '{dist}'") from exc
    if s <= 0 or V < 1:
        raise UsageError("field 'dist': zipfian needs s > 0 and V >= 1")
    return s, V


def load_spec_dataset(spec: WorkloadSpec) -> Dataset:
    if spec.dataset == "csv":
        return load_csv(spec.csv_path, spec.csv_columns, spec.csv_normalize).dataset
    if spec.dist == "uniform":
        return gen_uniform(spec.n, spec.d, spec.dataset_seed)
    s, V = _parse_zipf(spec.dist)
    return gen_zipfian(spec.n, spec.d, s, V, spec.dataset_seed)


def _rank_for_query(spec: WorkloadSpec, qi: int, n: int, rng: np.random.Generator) -> int:
    rule = spec.i_rule
    if rule == "uniform":
        return int(rng.integers(1, n + 1))
    if rule.startswith("fixed:"):
        i = int(rule.split(":", 1)[1])
    else:
        sweep = [int(v) for v in rule.split(":", 1)[1].split(",")]
        i = sweep[qi % len(sweep)]
    if not 1 <= i <= n:
        raise UsageError(f"field 'i_rule': rank {i} out of range [1, {n}]")
    return i


def _stripe_for_query(
    spec: WorkloadSpec,
    D: Dataset,
    f: ScoringVector,
    rng: np.random.Generator,
) -> StripeRange:
    scores = score_rows(D.coords, f.weights)
    if spec.width_points > 0:
        w = spec.width_points
        c = int(rng.integers(1, D.n + 1))
        hi_rank = max(1, c - w // 2)
        lo_rank = min(D.n, c + w // 2)
        upper = float(scores[_rank_pos(scores, hi_rank)])
        lower = float(scores[_rank_pos(scores, lo_rank)])
        if lower > upper:
            lower, upper = upper, lower
        return StripeRange(f=f, lower=lower, upper=upper)
    span = float(scores.max() - scores.min())
    width = spec.width_score if spec.width_score > 0 else span * 0.01
    center = float(rng.uniform(scores.min(), scores.max()))
    return StripeRange(f=f, lower=center - width / 2.0, upper=center + width / 2.0)


def _rank_pos(scores: np.ndarray, rank: int) -> int:
    return _kth_position(scores, rank)


def _set_equal(points_a, points_b) -> bool:
    return [p.id for p in points_a] == [p.id for p in points_b]


def run_workload(spec: WorkloadSpec) -> tuple[list[ReportRow], dict[str, object]]:
    """Build, query, measure.  Returns per-query rows and the summary block."""
    validate_spec(spec)
    D = load_spec_dataset(spec)
    n = D.n

    summary: dict[str, object] = {
        "kind": spec.kind,
        "backend": spec.backend,
        "n": n,
        "d": D.d,
        "q": spec.q,
    }
    params = (
        f"kind={spec.kind};backend={spec.backend};n={n};d={D.d};"
        f"epsilon={spec.epsilon};r={spec.r}"
    )

    t0 = time.perf_counter_ns()
    if spec.backend == "kdtree":
        backend = kdtree_build(D)
        index_bytes = storage.serialized_size(backend, storage.save_kdtree)
    elif spec.backend == "hier":
        backend = build_hier(D, r=spec.r, seed=spec.index_seed)
        index_bytes = storage.serialized_size(backend, storage.save_hier)
    else:
        backend = ExhaustiveBackend(D)
        index_bytes = 0
    structure = None
    if spec.kind == "kthlevel2d":
        structure = build_levels_2d(D)
        index_bytes += storage.serialized_size(structure, storage.save_levels)
    sample = None
    sample_bytes = 0
    if spec.kind in ("conformal", "exact"):
        sample = build_eps_sample(
            D, spec.epsilon, spec.phi, spec.sample_seed, c=spec.sample_c
        )
        sample_bytes = storage.serialized_size(sample, storage.save_sample)
    build_ns = time.perf_counter_ns() - t0
    summary["build_ns"] = build_ns
    summary["index_bytes"] = index_bytes
    summary["sample_bytes"] = sample_bytes

    rows: list[ReportRow] = []
    if spec.q > 0:
        directions = gen_directions(spec.q, D.d, spec.query_seed)
        rng = np.random.default_rng(spec.query_seed + 1)
        for qi in range(spec.q):
            f = directions[qi]
            recall = 1
            stats = ScanStats(points_examined=0, nodes_visited=0)
            if spec.kind == "srs":
                stripe = _stripe_for_query(spec, D, f, rng)
                t1 = time.perf_counter_ns()
                result, stats = backend.query_stripe_counted(stripe)
                wall = time.perf_counter_ns() - t1
                size = len(result)
                if spec.verify:
                    oracle = ExhaustiveBackend(D).query_stripe(stripe)
                    recall = int(_set_equal(result, oracle))
            elif spec.kind == "conformal":
                i = _rank_for_query(spec, qi, n, rng)
                t1 = time.perf_counter_ns()
                cs = conformal_query(D, sample, backend, f, i)
                wall = time.perf_counter_ns() - t1
                size = cs.size
                if spec.verify:
                    target = select_rank_exhaustive(D, f, i).point
                    recall = int(any(p.id == target.id for p in cs.points))
            elif spec.kind == "exact":
                i = _rank_for_query(spec, qi, n, rng)
                t1 = time.perf_counter_ns()
                answer = exact_query(D, sample, backend, f, i)
                wall = time.perf_counter_ns() - t1
                size = 1
                if spec.verify:
                    target = select_rank_exhaustive(D, f, i).point
                    recall = int(answer.point.id == target.id)
            else:  # kthlevel2d
                i = _rank_for_query(spec, qi, n, rng)
                t1 = time.perf_counter_ns()
                p = query_kth_2d(structure, f, i)
                wall = time.perf_counter_ns() - t1
                size = 1
                if spec.verify:
                    target = select_rank_exhaustive(D, f, i).point
                    recall = int(p.id == target.id)
            rows.append(
                ReportRow(
                    query_index=qi,
                    wall_ns=int(wall),
                    points_examined=stats.points_examined,
                    nodes_visited=stats.nodes_visited,
                    result_size=size,
                    recall=recall,
                    backend=spec.backend,
                    params=params,
                )
            )

    walls = [r.wall_ns for r in rows]
    summary["median_wall_ns"] = int(np.median(walls)) if walls else 0
    summary["p95_wall_ns"] = (
        int(np.percentile(walls, 95, method="nearest")) if walls else 0
    )
    summary["mean_points_examined"] = (
        float(np.mean([r.points_examined for r in rows])) if rows else 0.0
    )
    summary["recall_rate"] = float(np.mean([r.recall for r in rows])) if rows else 1.0
    if spec.kind == "conformal":
        summary["kappa"] = spec.kappa
        summary["kappa_satisfied_rate"] = (
            float(np.mean([r.result_size <= spec.kappa for r in rows])) if rows else 1.0
        )
    return rows, summary


def rows_to_csv(rows: Sequence[ReportRow]) -> str:
    lines = [",".join(REPORT_HEADER)]
    lines.extend(",".join(r.as_csv()) for r in rows)
    return "\n".join(lines) + "\n"


def summary_block(summary: dict[str, object]) -> str:
    return "\n".join(f"{k}={v}" for k, v in summary.items()) + "\n"
