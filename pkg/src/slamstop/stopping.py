"""Stopping criteria evaluated side by side on one metric stream.

The task-driven rule watches Gamma = dU + |dA| (percent changes of the graph
D-optimality and of the known area between consecutive active-SLAM steps)
and stops once ``w`` consecutive values fall below ``gamma_th``.  Temporal,
coverage and frontier-absence rules are the usual baselines.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigurationError, CriterionUnavailableError, DomainError

EPS = 1e-12
SATURATION_PCT = 1000.0
UNSEEN_PCT = 100.0


class Decision(str, Enum):
    CONTINUE = "continue"
    STOP = "stop"


class CriterionKind(str, Enum):
    TASK_DRIVEN = "task_driven"
    TEMPORAL = "temporal"
    COVERAGE = "coverage"
    FRONTIER_ABSENCE = "frontier_absence"


PRIVILEGED = {CriterionKind.COVERAGE}


@dataclass(frozen=True)
class MetricSample:
    step: int
    wall_time: float
    U: float
    A: float
    coverage: float | None = None
    frontier_exhausted: bool = False


def delta_pct(prev: float, curr: float) -> float:
    """Percent change from ``prev`` to ``curr``, saturated to +-1000."""
    if math.isnan(prev) or math.isnan(curr):
        raise DomainError("delta_pct of NaN")
    if not math.isfinite(prev):
        raise DomainError("delta_pct needs a finite baseline")
    if abs(prev) < EPS:
        return 0.0 if abs(curr) < EPS else UNSEEN_PCT
    d = 100.0 * (curr - prev) / abs(prev)
    return max(-SATURATION_PCT, min(SATURATION_PCT, d))


def gamma(dU: float, dA: float) -> float:
    return dU + abs(dA)


@dataclass
class CriterionState:
    kind: CriterionKind
    gamma_th: float = 2.0
    window: int = 3
    budget: float = 600.0
    target: float = 90.0
    name: str = ""
    gamma_window: deque = field(default_factory=deque)
    triggered_at: int | None = None
    trigger_sample: MetricSample | None = None

    def __post_init__(self):
        self.kind = CriterionKind(self.kind)
        if self.kind is CriterionKind.TASK_DRIVEN and self.window < 1:
            raise ConfigurationError("task-driven window must be >= 1")
        self.gamma_window = deque(self.gamma_window, maxlen=self.window)
        if not self.name:
            self.name = default_name(self)

    @property
    def privileged(self) -> bool:
        return self.kind in PRIVILEGED

    @property
    def triggered(self) -> bool:
        return self.triggered_at is not None

    def record(self, decision: Decision, sample: MetricSample) -> Decision:
        if decision is Decision.STOP and self.triggered_at is None:
            self.triggered_at = sample.step
            self.trigger_sample = sample
        return decision

    def reset(self) -> None:
        self.gamma_window.clear()
        self.triggered_at = None
        self.trigger_sample = None


def default_name(c: CriterionState) -> str:
    if c.kind is CriterionKind.TASK_DRIVEN:
        return f"task_{c.gamma_th:g}_{c.window}"
    if c.kind is CriterionKind.TEMPORAL:
        return f"temporal_{c.budget:g}"
    if c.kind is CriterionKind.COVERAGE:
        return f"coverage_{c.target:g}"
    return "frontier"


def parse_criterion(text: str) -> CriterionState:
    """Parse ``task:2:3``, ``temporal:600``, ``coverage:90`` or ``frontier``."""
    parts = text.strip().split(":")
    head = parts[0].lower()
    try:
        if head in ("task", "task_driven"):
            th = float(parts[1]) if len(parts) > 1 else 2.0
            w = int(parts[2]) if len(parts) > 2 else 3
            return CriterionState(CriterionKind.TASK_DRIVEN, gamma_th=th, window=w)
        if head in ("temporal", "time"):
            return CriterionState(CriterionKind.TEMPORAL, budget=float(parts[1]))
        if head == "coverage":
            return CriterionState(CriterionKind.COVERAGE, target=float(parts[1]))
        if head in ("frontier", "frontier_absence", "frontiers"):
            return CriterionState(CriterionKind.FRONTIER_ABSENCE)
    except (IndexError, ValueError) as exc:
        raise ConfigurationError(f"bad criterion text {text!r}") from exc
    raise ConfigurationError(f"unknown criterion {text!r}")


def update_task_driven(state: CriterionState, sample: MetricSample,
                       prev: MetricSample) -> Decision:
    g = gamma(delta_pct(prev.U, sample.U), delta_pct(prev.A, sample.A))
    state.gamma_window.append(g)
    full = len(state.gamma_window) == state.window
    stop = full and all(v < state.gamma_th for v in state.gamma_window)
    return state.record(Decision.STOP if stop else Decision.CONTINUE, sample)


def update_temporal(state: CriterionState, sample: MetricSample) -> Decision:
    stop = sample.wall_time >= state.budget
    return state.record(Decision.STOP if stop else Decision.CONTINUE, sample)


def update_coverage(state: CriterionState, sample: MetricSample) -> Decision:
    if sample.coverage is None:
        raise CriterionUnavailableError(f"{state.name} needs ground-truth coverage")
    stop = sample.coverage >= state.target
    return state.record(Decision.STOP if stop else Decision.CONTINUE, sample)


def update_frontier_absence(state: CriterionState, sample: MetricSample) -> Decision:
    return state.record(Decision.STOP if sample.frontier_exhausted else Decision.CONTINUE, sample)


def update(state: CriterionState, sample: MetricSample, prev: MetricSample) -> Decision:
    k = state.kind
    if k is CriterionKind.TASK_DRIVEN:
        return update_task_driven(state, sample, prev)
    if k is CriterionKind.TEMPORAL:
        return update_temporal(state, sample)
    if k is CriterionKind.COVERAGE:
        return update_coverage(state, sample)
    return update_frontier_absence(state, sample)


def evaluate_all(criteria: list[CriterionState], sample: MetricSample,
                 prev: MetricSample) -> dict[str, Decision]:
    """Update every criterion independently on the same sample."""
    return {c.name: update(c, sample, prev) for c in criteria}


def check_available(criteria: list[CriterionState], has_ground_truth: bool) -> None:
    if has_ground_truth:
        return
    for c in criteria:
        if c.privileged:
            raise CriterionUnavailableError(f"{c.name} requires ground truth, none configured")


def baseline_sample() -> MetricSample:
    """The 'nothing known yet' sample preceding step 0."""
    return MetricSample(step=-1, wall_time=0.0, U=0.0, A=0.0, coverage=0.0)


def replay(samples: list[MetricSample], criteria: list[CriterionState],
           prev: MetricSample | None = None) -> list[dict[str, Decision]]:
    """Re-run criteria over a recorded stream; decisions depend only on the stream."""
    prev = prev or baseline_sample()
    out = []
    for s in samples:
        out.append(evaluate_all(criteria, s, prev))
        prev = s
    return out
