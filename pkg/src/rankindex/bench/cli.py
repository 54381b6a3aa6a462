"""Command-line interface.

Subcommands: ``gen`` (synthetic datasets), ``ingest`` (CSV), ``index``
(build and persist an index), ``sample`` (build and persist a sample),
``query`` (run a workload file), ``bench`` (parameter sweeps).  Exit codes:
0 success, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from ..epsample import build_eps_sample
from ..errors import DataError, UsageError
from ..hier import build_hier
from ..kthlevel2d import build_levels_2d
from ..srr import kdtree_build
from . import storage
from .generate import gen_uniform, gen_zipfian
from .ingest import load_csv
from .workload import (
    REPORT_HEADER,
    parse_workload,
    rows_to_csv,
    run_workload,
    summary_block,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankindex",
        description="Ranked-retrieval indexing and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic dataset")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--d", type=int, required=True)
    p_gen.add_argument(
        "--dist", default="uniform", help="uniform or zipfian:s,V (e.g. zipfian:1.0,1000)"
    )
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)

    p_ing = sub.add_parser("ingest", help="load a CSV into a dataset file")
    p_ing.add_argument("--csv", required=True)
    p_ing.add_argument("--columns", required=True, help="comma-separated column names")
    p_ing.add_argument(
        "--normalize", default="none", choices=("none", "minmax", "zscore")
    )
    p_ing.add_argument("--out", required=True)

    p_idx = sub.add_parser("index", help="build an index over a dataset file")
    p_idx.add_argument("--data", required=True)
    p_idx.add_argument(
        "--backend", required=True, choices=("kdtree", "hier", "kthlevel2d")
    )
    p_idx.add_argument("--r", type=int, default=4, help="hier decay rate")
    p_idx.add_argument("--seed", type=int, default=0)
    p_idx.add_argument("--out", required=True)

    p_smp = sub.add_parser("sample", help="build a sample over a dataset file")
    p_smp.add_argument("--data", required=True)
    p_smp.add_argument("--epsilon", type=float, required=True)
    p_smp.add_argument("--phi", type=float, default=0.1)
    p_smp.add_argument("--seed", type=int, default=0)
    p_smp.add_argument("--out", required=True)

    p_qry = sub.add_parser("query", help="run a workload file")
    p_qry.add_argument("--workload", required=True)
    p_qry.add_argument("--verify", action="store_true")
    p_qry.add_argument("--report", required=True, help="per-query CSV output path")

    p_bch = sub.add_parser("bench", help="sweep one workload parameter")
    p_bch.add_argument("--workload", required=True, help="base workload file")
    p_bch.add_argument(
        "--sweep", required=True, choices=("dim", "size", "width", "epsilon", "i")
    )
    p_bch.add_argument(
        "--values", default="", help="comma-separated sweep values (defaults per axis)"
    )
    p_bch.add_argument("--verify", action="store_true")
    p_bch.add_argument("--report", required=True)
    return parser


_SWEEP_DEFAULTS = {
    "dim": "2,4,8,16,32",
    "size": "1000,10000,100000",
    "width": "10,100,1000",
    "epsilon": "0.5,0.25,0.125,0.0625,0.03125",
    "i": "1,10,100,1000",
}


def _cmd_gen(args) -> int:
    if args.dist == "uniform":
        D = gen_uniform(args.n, args.d, args.seed)
    elif args.dist.startswith("zipfian:"):
        body = args.dist.split(":", 1)[1]
        try:
            s_str, v_str = body.split(",")
            s, V = float(s_str), int(v_str)
        except ValueError:
            raise UsageError(f"--dist: expected zipfian:s,V got '{args.dist}'")
        D = gen_zipfian(args.n, args.d, s, V, args.seed)
    else:
        raise UsageError(f"--dist: unknown distribution '{args.dist}'")
    storage.save_dataset(D, args.out)
    print(f"wrote dataset n={D.n} d={D.d} -> {args.out}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    columns = tuple(c.strip() for c in args.columns.split(",") if c.strip())
    result = load_csv(args.csv, columns, args.normalize)
    storage.save_dataset(result.dataset, args.out)
    print(
        f"wrote dataset n={result.dataset.n} d={result.dataset.d} "
        f"(dropped {result.dropped_rows} rows) -> {args.out}"
    )
    return EXIT_OK


def _cmd_index(args) -> int:
    D = storage.load_dataset(args.data)
    if args.backend == "kdtree":
        storage.save_kdtree(kdtree_build(D), args.out)
    elif args.backend == "hier":
        storage.save_hier(build_hier(D, r=args.r, seed=args.seed), args.out)
    else:
        storage.save_levels(build_levels_2d(D), args.out)
    print(f"wrote {args.backend} index -> {args.out}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    D = storage.load_dataset(args.data)
    sample = build_eps_sample(D, args.epsilon, args.phi, args.seed)
    storage.save_sample(sample, args.out)
    print(f"wrote sample m={sample.m} of n={D.n} -> {args.out}")
    return EXIT_OK


def _cmd_query(args) -> int:
    spec = parse_workload(Path(args.workload).read_text())
    if args.verify:
        spec = replace(spec, verify=True)
    rows, summary = run_workload(spec)
    Path(args.report).write_text(rows_to_csv(rows))
    sys.stdout.write(summary_block(summary))
    return EXIT_OK


_SWEEP_FIELDS = {
    "dim": ("d", int),
    "size": ("n", int),
    "width": ("width_points", int),
    "epsilon": ("epsilon", float),
    "i": (None, int),  # becomes i_rule = fixed:<value>
}


def _cmd_bench(args) -> int:
    base = parse_workload(Path(args.workload).read_text())
    if args.verify:
        base = replace(base, verify=True)
    values_text = args.values or _SWEEP_DEFAULTS[args.sweep]
    field_name, conv = _SWEEP_FIELDS[args.sweep]
    out_lines: list[str] = []
    for raw in values_text.split(","):
        value = conv(raw.strip())
        if field_name is None:
            spec = replace(base, i_rule=f"fixed:{value}")
        else:
            spec = replace(base, **{field_name: value})
        rows, summary = run_workload(spec)
        sys.stdout.write(f"# sweep {args.sweep}={value}\n")
        sys.stdout.write(summary_block(summary))
        for r in rows:
            out_lines.append(f"{args.sweep},{value}," + ",".join(r.as_csv()))
    header = "sweep_axis,sweep_value," + ",".join(REPORT_HEADER)
    Path(args.report).write_text(header + "\n" + "\n".join(out_lines) + "\n")
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "ingest": _cmd_ingest,
    "index": _cmd_index,
    "sample": _cmd_sample,
    "query": _cmd_query,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
