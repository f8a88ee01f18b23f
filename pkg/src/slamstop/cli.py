"""Command-line entry point: ``slamstop <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import SlamStopError


def _sizes(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from exc


def cmd_explore(args) -> int:
    from .harness.config import load_config
    from .harness.experiment import format_summary_table, run_experiment

    cfg = load_config(args.config, seed=args.seed, out=args.out)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    if args.step_cap is not None:
        cfg = replace(cfg, step_cap=args.step_cap)
    summary = run_experiment(cfg)
    print(format_summary_table(summary.rows))
    for t in summary.trials:
        print(f"seed {t.seed}: {len(t.records)} steps, halted by {t.halted_by}")
    print(f"outputs in {summary.out}")
    return 0


def cmd_bench_dopt(args) -> int:
    from .harness.bench import benchmark_dopt, format_dopt_report

    print(format_dopt_report(benchmark_dopt(args.sizes, args.reps, args.seed)))
    return 0


def cmd_bench_kernels(args) -> int:
    from . import kernels
    from .harness.bench import benchmark_kernels, format_kernel_report

    if "compiled" not in kernels.backends():
        print("compiled kernels not built; timing the Python fallback only", file=sys.stderr)
    print(format_kernel_report(benchmark_kernels(args.reps, args.world)))
    return 0


def cmd_replay(args) -> int:
    from .harness.experiment import read_csv
    from .stopping import MetricSample, parse_criterion, replay

    rows = read_csv(args.trace)
    samples = []
    for r in rows:
        cov = r.get("coverage", "")
        samples.append(MetricSample(int(r["step"]), float(r["wall_time"]), float(r["U"]), float(r["A"]),
                                    float(cov) if cov else None, r.get("exhausted", "0") == "1"))
    criteria = [parse_criterion(c) for c in args.criterion]
    decisions = replay(samples, criteria)
    print("step," + ",".join(f"{c.name}:decision" for c in criteria))
    for s, d in zip(samples, decisions):
        print(f"{s.step}," + ",".join(d[c.name].value for c in criteria))
    status = 0
    for c in criteria:
        at = "never" if c.triggered_at is None else f"step {c.triggered_at}"
        line = f"{c.name}: triggers at {at}"
        col = f"{c.name}:decision"
        if rows and col in rows[0]:
            same = all(r[col] == d[c.name].value for r, d in zip(rows, decisions))
            line += ", matches recorded decisions" if same else ", DIFFERS from recorded decisions"
            status = status or (0 if same else 1)
        print(line, file=sys.stderr)
    return status


def cmd_graph_dopt(args) -> int:
    from .graph import average_node_degree
    from .graphio import import_pose_graph
    from .toed import assemble_fim, dopt_exact, dopt_graph, dump_matrix_csv

    g = import_pose_graph(args.graph)
    print(f"nodes {g.n}")
    print(f"edges {len(g.edges)} ({g.loop_closure_count()} loop closures)")
    print(f"average degree {average_node_degree(g):.4f}")
    approx = dopt_graph(g)
    print(f"dopt_graph {approx!r}")
    if not args.no_exact:
        exact = dopt_exact(g)
        print(f"dopt_exact {exact!r}")
        if exact > 0:
            print(f"relative difference {abs(approx - exact) / exact:.6g}")
    if args.dump_fim:
        dump_matrix_csv(assemble_fim(g), args.dump_fim)
        print(f"anchored FIM written to {args.dump_fim}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slamstop", description=__doc__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explore", help="run exploration trials from a config file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--trials", type=int)
    p.add_argument("--step-cap", type=int)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("bench-dopt", help="time graph D-opt against the full eigendecomposition")
    p.add_argument("--sizes", type=_sizes, default=[10, 100, 1000])
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench_dopt)

    p = sub.add_parser("bench-kernels", help="time compiled grid kernels against the Python fallback")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--world", default="closed_rooms_small")
    p.set_defaults(func=cmd_bench_kernels)

    p = sub.add_parser("replay", help="re-evaluate stopping criteria on a recorded trace")
    p.add_argument("--trace", required=True, type=Path)
    p.add_argument("--criterion", action="append", required=True,
                   help="task:<th>:<w>, temporal:<s>, coverage:<pct> or frontier; repeatable")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("graph-tool", help="pose-graph utilities")
    gsub = p.add_subparsers(dest="tool", required=True)
    q = gsub.add_parser("dopt", help="print exact and graph D-opt of a pose-graph file")
    q.add_argument("graph", type=Path)
    q.add_argument("--dump-fim", type=Path, help="write the dense anchored FIM as CSV")
    q.add_argument("--no-exact", action="store_true", help="skip the eigendecomposition")
    q.set_defaults(func=cmd_graph_dopt)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SlamStopError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
