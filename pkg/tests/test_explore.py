import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import ndimage

from slamstop.errors import ConfigurationError
from slamstop.explore import (CandidateAction, Explorer, ExploreParams, detect_frontiers,
                              frontier_mask, hallucinate, normalise_and_score, path_length,
                              plan_path, select_best, utility)
from slamstop.graph import EdgeKind, Pose2, PoseGraph
from slamstop.randgraph import random_pose_graph
from slamstop.slam import MotionModel, OccupancyGrid, SensorModel, SlamState, box_world, bundled_world
from slamstop.toed import dopt_graph

FREE, OCC, UNK = -2.0, 2.0, 0.0


def grid_from(rows, res=0.1):
    """'.' free, '#' occupied, '?' unknown; first string is the lowest row."""
    lut = {".": FREE, "#": OCC, "?": UNK}
    lo = np.array([[lut[ch] for ch in row] for row in rows])
    return OccupancyGrid(lo.shape, res, logodds=lo)


def open_room(n=100, res=0.1):
    lo = np.full((n, n), FREE)
    lo[0] = lo[-1] = OCC
    lo[:, 0] = lo[:, -1] = OCC
    return OccupancyGrid(lo.shape, res, logodds=lo)


# -- frontiers ---------------------------------------------------------------------

def test_fully_known_map_has_no_frontiers():
    assert detect_frontiers(open_room(30)) == []


def test_half_disc_gives_one_cluster():
    w = box_world(14, 14)
    s = SlamState(w, Pose2(7.0, 7.0, math.pi / 2), sensor=SensorModel(sigma_r=0.0),
                  motion=MotionModel(noise_cov=np.zeros((3, 3))))
    clusters = detect_frontiers(s.map)
    assert len(clusters) == 1
    assert clusters[0].size > 100


def test_two_doorways_two_clusters():
    rows = ["#" * 30]
    rows += ["#" + "." * 28 + "#"] * 6
    rows += ["#" * 5 + "." * 3 + "#" * 14 + "." * 3 + "#" * 5]
    rows += ["#?????????????#??????????????#"] * 6
    rows += ["#" * 30]
    clusters = detect_frontiers(grid_from(rows), min_cluster_size=2)
    assert len(clusters) == 2
    xs = sorted(c.centroid[0] for c in clusters)
    assert xs[0] < 1.0 < 2.0 < xs[1]


def test_cluster_ordering_and_size_filter():
    rows = ["#" * 20, "#" + "." * 18 + "#", "#" + "?" * 3 + "#" * 5 + "?" * 8 + "#" * 2 + "#", "#" * 20]
    g = grid_from(rows)
    big, small = detect_frontiers(g, min_cluster_size=1)
    assert big.size == 8 and small.size == 3
    assert [c.size for c in detect_frontiers(g, min_cluster_size=4)] == [8]


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_frontier_predicate_exhaustive(seed, min_size):
    rng = np.random.default_rng(seed)
    lo = rng.choice([FREE, OCC, UNK], size=(25, 30), p=[0.5, 0.15, 0.35])
    g = OccupancyGrid(lo.shape, 0.1, logodds=lo)
    unk = g.unknown_mask()
    pad = np.pad(unk, 1)
    in_cluster = np.zeros_like(unk)
    for cl in detect_frontiers(g, min_size):
        assert cl.size >= min_size
        for r, c in cl.cells:
            assert g.free_mask()[r, c]
            assert pad[r, c + 1] or pad[r + 2, c + 1] or pad[r + 1, c] or pad[r + 1, c + 2]
            assert not in_cluster[r, c]
            in_cluster[r, c] = True
    # clusters are exactly the components of the frontier mask that are large enough
    labels, n = ndimage.label(frontier_mask(g), structure=np.ones((3, 3)))
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, range(1, n + 1))
    big = np.isin(labels, 1 + np.flatnonzero(sizes >= min_size))
    np.testing.assert_array_equal(in_cluster, big)


# -- planning ----------------------------------------------------------------------

def test_plan_goal_equals_start():
    g = open_room(20)
    start = Pose2(1.0, 1.0, 0.3)
    path = plan_path(g, start, (1.0, 1.0))
    assert path == [start]
    assert path_length(path) == 0.0


def test_plan_across_wall_is_unreachable():
    rows = ["#" * 20] + ["#" + "." * 8 + "#" + "." * 9 + "#"] * 10 + ["#" * 20]
    g = grid_from(rows)
    assert plan_path(g, Pose2(0.45, 0.55, 0), (1.45, 0.55), inflation_radius=0.0) is None


def test_plan_diagonal_of_open_room():
    g = open_room(102)
    start, goal = Pose2(0.55, 0.55, 0.0), (9.55, 9.55)
    path = plan_path(g, start, goal, inflation_radius=0.2)
    diag = math.hypot(9.0, 9.0)
    assert (path[0].x, path[0].y) == (start.x, start.y) and (path[-1].x, path[-1].y) == goal
    assert abs(path_length(path) - diag) <= 0.05 * diag


def test_plan_rejects_bad_start():
    g = open_room(20)
    with pytest.raises(ConfigurationError):
        plan_path(g, Pose2(0.05, 0.05, 0), (1.0, 1.0))


# -- utility -----------------------------------------------------------------------

def chain_graph(n=12, spacing=0.3):
    g = PoseGraph()
    g.add_node(Pose2())
    for i in range(1, n):
        g.add_node(Pose2(spacing * i, 0.0, 0.0))
        g.add_edge(i - 1, i, Pose2(spacing, 0.0, 0.0), np.diag([100.0, 100.0, 400.0]))
    return g


ODOM = np.diag([100.0, 100.0, 400.0])
LOOP = np.diag([400.0, 400.0, 1600.0])


def test_identity_action_keeps_current_dopt():
    g = chain_graph()
    here = g.nodes[-1].pose
    pred = hallucinate(g, [here], ODOM, LOOP)
    cand = CandidateAction(0, (here.x, here.y), [here], pred)
    assert utility(cand, alpha=1.0) == pytest.approx(dopt_graph(g), rel=1e-12)


def test_area_term_breaks_equal_information():
    g = chain_graph()
    cands = [CandidateAction(i, (0, 0), [], g, dopt_term=3.0, area_term=a) for i, a in enumerate([1.0, 11.0])]
    for alpha in (0.1, 1.0, 5.0):
        normalise_and_score(cands, alpha)
        assert cands[1].utility > cands[0].utility
        raw = [utility(c, alpha=alpha) for c in cands]
        assert raw[1] > raw[0]


def _leg(y, n=12):
    start = Pose2(3.3, 0.0, math.pi)
    return [start] + [Pose2(3.3 - 0.3 * k, y, math.pi) for k in range(1, n)]


def test_path_past_old_nodes_scores_higher():
    g = chain_graph()
    # same-length return legs, one hugging the old chain, one 3 m away from it
    near = hallucinate(g, [g.nodes[-1].pose] + _leg(0.2), ODOM, LOOP, loop_yaw_gate=math.pi)
    far = hallucinate(g, [g.nodes[-1].pose] + _leg(3.0), ODOM, LOOP, loop_yaw_gate=math.pi)
    assert near.n == far.n
    assert near.loop_closure_count() >= 3 and far.loop_closure_count() == 0
    assert dopt_graph(near) > dopt_graph(far)


@given(st.integers(3, 40), st.integers(0, 2**32 - 1))
def test_extra_loop_edge_never_lowers_graph_term(n, seed):
    rng = np.random.default_rng(seed)
    g = random_pose_graph(n, rng, loop_prob=0.1)
    before = dopt_graph(g)
    a, b = sorted(rng.choice(n, 2, replace=False).tolist())
    g.add_edge(b, a, Pose2(), LOOP, EdgeKind.LOOP_CLOSURE)
    assert dopt_graph(g) >= before * (1 - 1e-12)


def test_hallucination_extends_current_graph():
    g = chain_graph()
    pred = hallucinate(g, [g.nodes[-1].pose] + _leg(0.2), ODOM, LOOP)
    assert pred.n > g.n
    assert [nd.pose for nd in pred.nodes[: g.n]] == [nd.pose for nd in g.nodes]
    assert pred.edges[: len(g.edges)] == g.edges
    assert g.n == 12  # input untouched


# -- selection ---------------------------------------------------------------------

def _cands(utils):
    return [CandidateAction(i, (0, 0), [], None, utility=u) for i, u in enumerate(utils)]


def test_select_best_examples():
    assert select_best(_cands([5.0, 3.2, 3.2])).index == 0
    assert select_best(_cands([3.2, 3.2])).index == 0
    assert select_best(_cands([0.0])).index == 0
    assert select_best([]) is None


@given(st.lists(st.floats(0, 10), min_size=1, max_size=12))
def test_select_best_is_argmax(utils):
    best = select_best(_cands(utils))
    assert all(u <= best.utility for u in utils)
    assert best.index == utils.index(max(utils))


def test_single_candidate_normalises_to_zero_and_is_chosen():
    c = _cands([0.0])
    c[0].dopt_term, c[0].area_term = 7.0, 2.0
    normalise_and_score(c, 1.0)
    assert c[0].utility == 0.0
    assert select_best(c) is c[0]


# -- explorer ----------------------------------------------------------------------

def _explorer(world, seed=0, **kw):
    s = SlamState(world, world.default_start(), rng=seed)
    return Explorer(s, ExploreParams(**kw))


def test_fully_known_map_is_exhausted():
    w = box_world(3, 3)
    ex = _explorer(w)
    ex.state.map.logodds[:] = np.where(w.occupied, OCC, FREE)
    assert ex.peek_frontiers() == []
    out = ex.select_and_execute()
    assert out.exhausted
    assert out.step == 0


def test_initial_scan_sees_around():
    w = box_world(6, 6)
    ex = _explorer(w)
    ticks = ex.initial_scan()
    assert ticks == math.ceil(2 * math.pi / (0.8 * 0.25))
    assert ex.state.map.known_area() > 30.0
    assert ex.step == 1 and ex.state.graph.n > 5


def test_steps_pick_argmax_and_are_deterministic():
    def run():
        ex = _explorer(bundled_world("closed_rooms_small"), seed=7)
        ex.initial_scan()
        log = []
        for _ in range(4):
            out = ex.select_and_execute()
            if out.attempts == 1:
                assert all(c.utility <= out.selected.utility for c in out.candidates)
            log.append((out.exhausted, out.selected and out.selected.goal, out.ticks))
        return log, ex.state.graph.poses_array()

    a, pa = run()
    b, pb = run()
    assert a == b
    np.testing.assert_array_equal(pa, pb)
    assert not a[0][0]


def test_explorer_exhausts_small_box():
    ex = _explorer(box_world(3, 3))
    ex.initial_scan()
    for _ in range(15):
        if not ex.peek_frontiers():
            break
        ex.select_and_execute()
    assert not ex.peek_frontiers()
