"""Run exploration trials, evaluate every stopping criterion on the shared stream,
and write trace / summary / decision CSVs plus pose-graph snapshots."""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..errors import ConfigurationError
from ..explore import Explorer, StepOutcome, path_length
from ..graph import Pose2, average_node_degree
from ..graphio import export_pose_graph
from ..slam.metrics import coverage, map_error
from ..slam.state import SlamState
from ..stopping import (Decision, MetricSample, baseline_sample, check_available,
                        delta_pct, evaluate_all, gamma)
from ..toed import assemble_fim, dopt_graph, dump_matrix_csv
from .config import ExperimentConfig

log = logging.getLogger(__name__)

INFINITY = "∞"
TRACE_FIELDS = ["step", "wall_time", "U", "A", "coverage", "dU_pct", "dA_pct", "gamma"]
TRACE_EXTRA = ["exhausted", "mrmse_m", "n", "d", "opt", "loop_closures"]
SUMMARY_FIELDS = ["criterion", "time_s", "area_m2", "coverage_pct", "mrmse_m", "n", "d", "opt", "dopt"]
FIG2_FIELDS = ["step", "dU_pct", "dA_pct"]
DECISION_FIELDS = ["step", "exhausted", "candidates", "candidate", "goal_x", "goal_y", "path_len",
                   "dopt_term", "area_term", "utility", "selected", "attempts", "reached"]


def fmt(v) -> str:
    """Deterministic cell formatting shared by every CSV (floats round-trip exactly)."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Decision):
        return v.value
    if isinstance(v, str):
        return v
    x = float(v)
    if math.isinf(x):
        return INFINITY
    return repr(x)


@dataclass
class StepRecord:
    sample: MetricSample
    dU: float
    dA: float
    gamma: float
    decisions: dict[str, Decision]
    mrmse: float | None
    n: int
    d: float
    opt: int
    loop_closures: int

    def trace_values(self) -> list:
        s = self.sample
        return ([s.step, s.wall_time, s.U, s.A, s.coverage, self.dU, self.dA, self.gamma]
                + list(self.decisions.values())
                + [s.frontier_exhausted, self.mrmse, self.n, self.d, self.opt, self.loop_closures])

    def summary_values(self) -> list:
        s = self.sample
        return [s.wall_time, s.A, s.coverage, self.mrmse, self.n, self.d, self.opt, s.U]


@dataclass
class TrialResult:
    seed: int
    criteria: list[str]
    records: list[StepRecord] = field(default_factory=list)
    triggers: dict[str, int | None] = field(default_factory=dict)
    outcomes: list[StepOutcome] = field(default_factory=list)
    halted_by: str = "step_cap"

    def trigger_record(self, name: str) -> StepRecord | None:
        k = self.triggers.get(name)
        return None if k is None else self.records[k]


@dataclass
class SummaryRow:
    criterion: str
    values: list | None  # None = never triggered

    def cells(self) -> list[str]:
        if self.values is None:
            return [self.criterion, INFINITY] + [""] * (len(SUMMARY_FIELDS) - 2)
        return [self.criterion] + [fmt(v) for v in self.values]


@dataclass
class RunSummary:
    rows: list[SummaryRow]
    trials: list[TrialResult]
    out: Path | None = None

    def row(self, name: str) -> SummaryRow:
        for r in self.rows:
            if r.criterion == name:
                return r
        raise KeyError(name)


# -- csv helpers ------------------------------------------------------------------

def _csv_text(header: list[str], rows: list[list], comment: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in r])
    return buf.getvalue()


def write_csv(path: Path, header: list[str], rows: list[list], comment: str) -> None:
    path.write_text(_csv_text(header, rows, comment), encoding="utf-8")


def read_csv(path) -> list[dict[str, str]]:
    """Read one of our CSVs, skipping ``#`` comment lines."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def trace_header(criteria: list[str]) -> list[str]:
    return TRACE_FIELDS + [f"{c}:decision" for c in criteria] + TRACE_EXTRA


def sort_summary(rows: list[SummaryRow]) -> list[SummaryRow]:
    """Triggered rows by time consumed, then never-triggered rows in config order."""
    done = sorted((r for r in rows if r.values is not None), key=lambda r: r.values[0])
    return done + [r for r in rows if r.values is None]


# -- one trial --------------------------------------------------------------------

def _start_pose(cfg: ExperimentConfig, world) -> Pose2:
    if cfg.start is None:
        return world.default_start()
    x, y, th = cfg.start
    r, c = world.cell_of(x, y)
    if not world.in_bounds(r, c) or world.occupied[r, c] or world.collides(x, y, cfg.slam.robot_radius):
        raise ConfigurationError(f"start pose ({x}, {y}) is not reachable free space")
    return Pose2(x, y, th)


def run_trial(cfg: ExperimentConfig, seed: int, out: Path | None = None) -> TrialResult:
    world = cfg.load_world()
    start = _start_pose(cfg, world)
    criteria = cfg.make_criteria()
    check_available(criteria, has_ground_truth=True)
    names = [c.name for c in criteria]
    explorable = world.explorable_mask(start)
    truth_dist = ndimage.distance_transform_edt(~world.occupied) * world.resolution

    state = SlamState(world, start, cfg.sensor, cfg.motion, cfg.slam, np.random.default_rng(seed))
    explorer = Explorer(state, cfg.explore)
    result = TrialResult(seed, names, triggers={n: None for n in names})
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    tag = f"seed={seed} world={world.name}"

    prev = baseline_sample()
    for step in range(cfg.step_cap):
        closures0 = state.graph.loop_closure_count()
        if step == 0:
            explorer.initial_scan()
        else:
            result.outcomes.append(explorer.select_and_execute())
        g = state.graph
        U = dopt_graph(g) if g.n >= 2 else 0.0
        A = state.map.known_area()
        cov = coverage(state.map, world, explorable)
        exhausted = not explorer.peek_frontiers()
        sample = MetricSample(step, state.time, U, A, cov, exhausted)
        dU, dA = delta_pct(prev.U, U), delta_pct(prev.A, A)
        decisions = evaluate_all(criteria, sample, prev)
        err = map_error(state.map, world, truth_dist)
        rec = StepRecord(sample, dU, dA, gamma(dU, dA), decisions,
                         None if err is None else err[1], g.n, average_node_degree(g),
                         state.optimisation_count, g.loop_closure_count() - closures0)
        result.records.append(rec)
        log.debug("seed %d step %d t=%.1f U=%.4g A=%.2f cov=%.1f gamma=%.3g",
                  seed, step, state.time, U, A, cov, rec.gamma)
        for c in criteria:
            if c.triggered_at == step:
                result.triggers[c.name] = step
                log.info("seed %d: %s triggered at step %d (t=%.1f s)", seed, c.name, step, state.time)
                if out is not None:
                    export_pose_graph(g, out / f"graph_{c.name}.g2o", comment=f"{tag} step={step}")
                    if cfg.dump_fim:
                        dump_matrix_csv(assemble_fim(g), out / f"fim_{c.name}.csv")
        prev = sample
        if cfg.master is not None:
            if result.triggers[cfg.master] is not None:
                result.halted_by = cfg.master
                break
        elif all(v is not None for v in result.triggers.values()):
            result.halted_by = "all_triggered"
            break

    if out is not None:
        write_trial_outputs(result, out, tag)
        if cfg.scan_log:
            write_scan_log(state, out / "scans.log", seed)
    return result


def trial_summary(result: TrialResult) -> list[SummaryRow]:
    rows = []
    for name in result.criteria:
        rec = result.trigger_record(name)
        rows.append(SummaryRow(name, None if rec is None else rec.summary_values()))
    return sort_summary(rows)


def fig2_rows(result: TrialResult) -> list[list]:
    return [[r.sample.step, r.dU, r.dA] for r in result.records]


def emit_fig2_trace(result: TrialResult, path) -> None:
    write_csv(Path(path), FIG2_FIELDS, fig2_rows(result), f"seed={result.seed}")


def decision_rows(result: TrialResult) -> list[list]:
    rows = []
    for o in result.outcomes:
        if not o.candidates:
            rows.append([o.step, o.exhausted, 0] + [None] * 8 + [o.attempts, o.reached])
            continue
        for c in o.candidates:
            rows.append([o.step, o.exhausted, len(o.candidates), c.index, c.goal[0], c.goal[1], path_length(c.path),
                         c.dopt_term, c.area_term, c.utility, c is o.selected, o.attempts,
                         o.reached and c is o.selected])
    return rows


def write_trial_outputs(result: TrialResult, out: Path, tag: str) -> None:
    write_csv(out / "trace.csv", trace_header(result.criteria),
              [r.trace_values() for r in result.records], tag)
    write_csv(out / "summary.csv", SUMMARY_FIELDS, [r.cells() for r in trial_summary(result)], tag)
    emit_fig2_trace(result, out / "fig2.csv")
    write_csv(out / "decisions.csv", DECISION_FIELDS, decision_rows(result), tag)


def write_scan_log(state: SlamState, path: Path, seed: int) -> None:
    """One line per keyframe scan: ``step pose_x pose_y pose_theta r1 ... rB``.

    Poses are the final estimates the map was built from; beams that saw
    nothing carry the maximum range.
    """
    lines = [f"# seed={seed} beams={state.sensor.beams} range={state.sensor.range!r}"]
    for node, scan in zip(state.graph.nodes, state.scans):
        p = node.pose
        r = " ".join(repr(float(v)) for v in scan.ranges)
        lines.append(f"{scan.step} {p.x!r} {p.y!r} {p.theta!r} {r}")
    path.write_text("\n".join(lines) + "\n")


# -- experiment -------------------------------------------------------------------

def merge_trials(trials: list[TrialResult]) -> list[SummaryRow]:
    """Arithmetic mean over trials; a criterion missing in any trial reports infinity."""
    names = trials[0].criteria
    rows = []
    for name in names:
        recs = [t.trigger_record(name) for t in trials]
        if any(r is None for r in recs):
            rows.append(SummaryRow(name, None))
            continue
        vals = []
        for col in zip(*(r.summary_values() for r in recs)):
            if any(v is None for v in col):
                vals.append(None)
            else:
                vals.append(float(np.mean(col)) if len(col) > 1 else col[0])
        rows.append(SummaryRow(name, vals))
    return sort_summary(rows)


def _trial_job(args):
    cfg, seed, out = args
    return run_trial(cfg, seed, out)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunSummary:
    out = Path(cfg.out) if write else None
    jobs = [(cfg, s, None if out is None else out / f"trial_{s}") for s in cfg.seeds]
    # fail fast on configuration problems before any process is spawned
    world = cfg.load_world()
    _start_pose(cfg, world)
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            trials = list(pool.map(_trial_job, jobs))
    else:
        trials = [_trial_job(j) for j in jobs]
    rows = merge_trials(trials)
    summary = RunSummary(rows, trials, out)
    if out is not None:
        seeds = ",".join(str(s) for s in cfg.seeds)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "summary.csv", SUMMARY_FIELDS, [r.cells() for r in rows],
                  f"seeds={seeds} world={world.name}")
    return summary


def format_summary_table(rows: list[SummaryRow]) -> str:
    cells = [SUMMARY_FIELDS] + [r.cells() for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(SUMMARY_FIELDS))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)
