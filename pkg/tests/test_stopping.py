import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slamstop.errors import ConfigurationError, CriterionUnavailableError, DomainError
from slamstop.stopping import (CriterionKind, CriterionState, Decision, MetricSample,
                               baseline_sample, check_available, delta_pct, evaluate_all, gamma,
                               parse_criterion, replay, update_coverage, update_frontier_absence,
                               update_task_driven, update_temporal)

STOP, GO = Decision.STOP, Decision.CONTINUE


def sample(step=0, t=0.0, U=1.0, A=1.0, cov=0.0, exhausted=False):
    return MetricSample(step, t, U, A, cov, exhausted)


def stream_from_gammas(gammas, U0=10.0, A0=10.0):
    """Metric samples whose consecutive U changes reproduce ``gammas`` with A held fixed."""
    out = [sample(0, 0.0, U0, A0)]
    U = U0
    for k, g in enumerate(gammas, start=1):
        U = U * (1 + g / 100.0)
        out.append(sample(k, float(k), U, A0))
    return out


def trigger_step(samples, text):
    c = parse_criterion(text)
    replay(samples[1:], [c], prev=samples[0])
    return c.triggered_at if c.triggered else math.inf


# -- primitives --------------------------------------------------------------------

def test_delta_pct_examples():
    assert delta_pct(100, 100) == 0.0
    assert delta_pct(200, 190) == pytest.approx(-5.0)
    assert delta_pct(50, 75) == pytest.approx(50.0)
    assert delta_pct(0.0, 0.0) == 0.0
    assert delta_pct(0.0, 3.0) == 100.0
    assert delta_pct(1.0, 1e9) == 1000.0
    assert delta_pct(1.0, -1e9) == -1000.0


def test_delta_pct_rejects_nan():
    with pytest.raises(DomainError):
        delta_pct(math.nan, 1.0)
    with pytest.raises(DomainError):
        delta_pct(1.0, math.nan)
    with pytest.raises(DomainError):
        delta_pct(math.inf, 1.0)


def test_gamma_examples():
    assert gamma(0, 0) == 0
    assert gamma(-1.5, 0.2) == pytest.approx(-1.3)
    assert gamma(-1.5, -4.0) == pytest.approx(2.5)


# -- task-driven -------------------------------------------------------------------

@pytest.mark.parametrize("gammas, expected", [
    ([0.5, 0.3, 0.1], STOP),
    ([5.0, 0.1, 0.1], GO),
    ([0.1, 0.1], GO),
])
def test_task_window_examples(gammas, expected):
    s = stream_from_gammas(gammas)
    c = CriterionState(CriterionKind.TASK_DRIVEN, gamma_th=2.0, window=3)
    decisions = [update_task_driven(c, b, a) for a, b in zip(s, s[1:])]
    assert decisions[-1] is expected
    np.testing.assert_allclose(list(c.gamma_window), gammas, rtol=1e-9, atol=1e-12)


def test_area_shrink_does_not_trigger():
    c = CriterionState(CriterionKind.TASK_DRIVEN, gamma_th=2.0, window=1)
    prev = sample(0, 0.0, U=100.0, A=100.0)
    cur = sample(1, 1.0, U=98.5, A=96.0)
    assert update_task_driven(c, cur, prev) is GO
    assert c.gamma_window[-1] == pytest.approx(2.5)


def test_trigger_step_is_immutable():
    s = stream_from_gammas([0.1, 0.1, 0.1, 9.0, 0.1])
    c = parse_criterion("task:2:3")
    replay(s[1:], [c], prev=s[0])
    assert c.triggered_at == 3
    assert c.trigger_sample is s[3]


def test_window_must_be_positive():
    with pytest.raises(ConfigurationError):
        CriterionState(CriterionKind.TASK_DRIVEN, window=0)


gamma_streams = st.lists(st.floats(-5, 12, allow_nan=False), min_size=1, max_size=40)


@given(gamma_streams, st.floats(0.1, 5), st.floats(0, 5), st.integers(1, 6))
def test_monotone_threshold(gammas, th, bump, w):
    s = stream_from_gammas(gammas)
    assert trigger_step(s, f"task:{th + bump}:{w}") <= trigger_step(s, f"task:{th}:{w}")


@given(gamma_streams, st.floats(0.1, 5), st.integers(1, 6), st.integers(0, 4))
def test_monotone_window(gammas, th, w, extra):
    s = stream_from_gammas(gammas)
    assert trigger_step(s, f"task:{th}:{w + extra}") >= trigger_step(s, f"task:{th}:{w}")


@given(st.lists(st.tuples(st.floats(0.5, 50), st.floats(0, 80)), min_size=2, max_size=30),
       st.integers(-10, 10))
def test_trigger_invariant_to_scaling_u(pairs, k):
    c = 2.0**k  # exact in floating point, so percent deltas match bit for bit
    s = [sample(k, float(k), U, A) for k, (U, A) in enumerate(pairs)]
    scaled = [sample(x.step, x.wall_time, c * x.U, x.A) for x in s]
    a = [d["task_2_3"] for d in replay(s[1:], [parse_criterion("task:2:3")], prev=s[0])]
    b = [d["task_2_3"] for d in replay(scaled[1:], [parse_criterion("task:2:3")], prev=scaled[0])]
    assert a == b


# -- baselines ---------------------------------------------------------------------

def test_temporal_examples():
    c = parse_criterion("temporal:600")
    assert update_temporal(c, sample(t=599.0)) is GO
    assert update_temporal(c, sample(t=600.0)) is STOP
    z = parse_criterion("temporal:0")
    assert update_temporal(z, sample(step=0, t=0.0)) is STOP
    assert z.triggered_at == 0


def test_coverage_examples():
    c = parse_criterion("coverage:90")
    assert update_coverage(c, sample(cov=89.9)) is GO
    assert update_coverage(c, sample(cov=90.0)) is STOP
    with pytest.raises(CriterionUnavailableError):
        update_coverage(parse_criterion("coverage:90"), sample(cov=None))


def test_coverage_needs_ground_truth_at_configuration():
    crit = [parse_criterion("task:2:3"), parse_criterion("coverage:90")]
    check_available(crit, has_ground_truth=True)
    with pytest.raises(CriterionUnavailableError):
        check_available(crit, has_ground_truth=False)
    check_available(crit[:1], has_ground_truth=False)


def test_frontier_examples():
    c = parse_criterion("frontier")
    assert update_frontier_absence(c, sample(exhausted=False)) is GO
    assert update_frontier_absence(c, sample(exhausted=True)) is STOP


def test_parse_criterion():
    c = parse_criterion("task:1.5:4")
    assert (c.kind, c.gamma_th, c.window, c.name) == (CriterionKind.TASK_DRIVEN, 1.5, 4, "task_1.5_4")
    assert parse_criterion("coverage:99").name == "coverage_99"
    assert parse_criterion("temporal:600").name == "temporal_600"
    for bad in ("task:x", "coverage", "warp:9", "temporal:"):
        with pytest.raises(ConfigurationError):
            parse_criterion(bad)


def test_evaluate_all_is_independent():
    crit = [parse_criterion(s) for s in ("task:2:1", "temporal:5", "coverage:50", "frontier")]
    stream = [sample(0, 0, 10, 10, 10), sample(1, 3, 10.05, 10, 40), sample(2, 6, 20, 30, 60, True)]
    prev = baseline_sample()
    for s in stream:
        evaluate_all(crit, s, prev)
        prev = s
    assert [c.triggered_at for c in crit] == [1, 2, 2, 2]


def test_first_sample_against_baseline_saturates_area():
    c = parse_criterion("task:2:1")
    update_task_driven(c, sample(0, 0, U=0.0, A=12.0), baseline_sample())
    assert c.gamma_window[-1] == 100.0


@given(st.lists(st.tuples(st.floats(0, 50), st.floats(0, 80), st.floats(0, 100), st.booleans()),
                min_size=1, max_size=25))
def test_replay_is_deterministic(rows):
    s = [MetricSample(k, 10.0 * k, U, A, cov, ex) for k, (U, A, cov, ex) in enumerate(rows)]
    specs = ("task:2:3", "temporal:50", "coverage:90", "frontier")
    a = replay(s, [parse_criterion(x) for x in specs])
    b = replay(s, [parse_criterion(x) for x in specs])
    assert a == b
