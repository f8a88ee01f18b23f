"""Frontier-based active SLAM: identify candidate goals, score them, drive to the best.

Utility of a candidate = graph D-optimality of the pose graph predicted for
reaching it (hallucinated odometry chain plus loop closures near old nodes)
+ alpha * area of unknown cells visible from the goal.  Both terms are
min-max normalised over the candidate set before summing.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import ConfigurationError
from .graph import EdgeKind, Pose2, PoseGraph, wrap_angle
from .slam.grid import OccupancyGrid
from .slam.models import MotionModel
from .slam.state import SlamState
from .toed import dopt_graph

log = logging.getLogger(__name__)

EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class ExploreParams:
    min_cluster_size: int = 5
    max_candidates: int = 10
    alpha: float = 1.0
    inflation_radius: float = 0.2
    dt: float = 0.25
    goal_tolerance: float = 0.15
    lookahead: float = 0.3
    heading_gain: float = 2.0
    stuck_ticks: int = 40
    max_attempts: int = 3
    blacklist_after: int = 2
    revisit_min_dist: float = 1.5


@dataclass
class FrontierCluster:
    cells: np.ndarray  # (k, 2) rows/cols
    centroid: tuple[float, float]
    size: int


@dataclass
class CandidateAction:
    index: int
    goal: tuple[float, float]
    path: list[Pose2]
    predicted_graph: PoseGraph
    dopt_term: float = 0.0
    area_term: float = 0.0
    utility: float = 0.0
    cluster: FrontierCluster | None = None


@dataclass
class StepOutcome:
    step: int
    exhausted: bool
    candidates: list[CandidateAction] = field(default_factory=list)
    selected: CandidateAction | None = None
    reached: bool = False
    ticks: int = 0
    attempts: int = 0
    loop_closures: int = 0
    optimized: bool = False


# -- frontiers ---------------------------------------------------------------

def frontier_mask(grid: OccupancyGrid) -> np.ndarray:
    """Known-free cells with at least one unknown 4-neighbour."""
    free = grid.free_mask()
    unk = grid.unknown_mask()
    adj = np.zeros_like(unk)
    adj[1:, :] |= unk[:-1, :]
    adj[:-1, :] |= unk[1:, :]
    adj[:, 1:] |= unk[:, :-1]
    adj[:, :-1] |= unk[:, 1:]
    return free & adj


def detect_frontiers(grid: OccupancyGrid, min_cluster_size: int = 5) -> list[FrontierCluster]:
    """8-connected frontier clusters, largest first (ties: lower centroid x, then y)."""
    mask = frontier_mask(grid)
    labels, nlab = ndimage.label(mask, structure=EIGHT)
    if nlab == 0:
        return []
    res = grid.resolution
    out = []
    objs = ndimage.find_objects(labels)
    for lab, sl in enumerate(objs, start=1):
        sub = labels[sl] == lab
        rr, cc = np.nonzero(sub)
        if len(rr) < min_cluster_size:
            continue
        rows = rr + sl[0].start
        cols = cc + sl[1].start
        cx = float(np.mean((cols + 0.5) * res))
        cy = float(np.mean((rows + 0.5) * res))
        out.append(FrontierCluster(np.column_stack([rows, cols]), (cx, cy), len(rows)))
    out.sort(key=lambda f: (-f.size, f.centroid[0], f.centroid[1]))
    return out


# -- planning ----------------------------------------------------------------

def traversable_mask(grid: OccupancyGrid, inflation_radius: float) -> np.ndarray:
    """Known-free cells farther than ``inflation_radius`` from any known obstacle."""
    occ = grid.occupied_mask()
    free = grid.free_mask()
    if not occ.any():
        return free
    dist = ndimage.distance_transform_edt(~occ) * grid.resolution
    return free & (dist > inflation_radius)


def nearest_true_cell(mask: np.ndarray, cell: tuple[int, int], max_radius: int = 20):
    """Closest True cell to ``cell`` within a square window, or None."""
    r, c = cell
    H, W = mask.shape
    r0, r1 = max(0, r - max_radius), min(H, r + max_radius + 1)
    c0, c1 = max(0, c - max_radius), min(W, c + max_radius + 1)
    rr, cc = np.nonzero(mask[r0:r1, c0:c1])
    if len(rr) == 0:
        return None
    d = (rr + r0 - r) ** 2 + (cc + c0 - c) ** 2
    k = int(np.argmin(d))
    return int(rr[k] + r0), int(cc[k] + c0)


def path_length(path: list[Pose2]) -> float:
    return float(sum(a.distance_to(b) for a, b in zip(path, path[1:])))


def _cells_to_path(cells, res, start: Pose2, goal_xy) -> list[Pose2]:
    pts = [((c + 0.5) * res, (r + 0.5) * res) for r, c in cells]
    pts[0] = (start.x, start.y)
    pts[-1] = (float(goal_xy[0]), float(goal_xy[1]))
    path = []
    for i, (x, y) in enumerate(pts):
        if i + 1 < len(pts):
            nx, ny = pts[i + 1]
            th = math.atan2(ny - y, nx - x) if (nx, ny) != (x, y) else (path[-1].theta if path else start.theta)
        else:
            th = path[-1].theta if path else start.theta
        path.append(Pose2(x, y, th))
    return path


def plan_path(grid: OccupancyGrid, start: Pose2, goal, inflation_radius: float = 0.2,
              traversable: np.ndarray | None = None) -> list[Pose2] | None:
    """A* over inflated known-free cells (8-connected).  None when unreachable.

    Raises:
        ConfigurationError: the start cell is occupied, unknown or inside the inflation.
    """
    if traversable is None:
        traversable = traversable_mask(grid, inflation_radius)
    sr, sc = grid.cell_of(start.x, start.y)
    H, W = grid.shape
    if not (0 <= sr < H and 0 <= sc < W) or not traversable[sr, sc]:
        raise ConfigurationError("start cell is not known-free traversable space")
    gr, gc = grid.cell_of(goal[0], goal[1])
    if (gr, gc) == (sr, sc):
        return [start]
    if not (0 <= gr < H and 0 <= gc < W) or not traversable[gr, gc]:
        return None
    cells = kernels.astar(np.ascontiguousarray(traversable, dtype=np.uint8), sr, sc, gr, gc)
    if cells is None:
        return None
    return _cells_to_path(cells, grid.resolution, start, goal)


# -- utility -----------------------------------------------------------------

def nominal_odometry_info(motion: MotionModel, keyframe_dist: float, dt: float) -> np.ndarray:
    """Information of a keyframe-to-keyframe odometry edge at cruise speed."""
    ticks = max(1, math.ceil(keyframe_dist / (motion.v_max * dt) - 1e-9))
    cov = ticks * np.asarray(motion.noise_cov) + 1e-12 * np.eye(3)
    info = np.linalg.inv(cov)
    return 0.5 * (info + info.T)


def hallucinate(graph: PoseGraph, path: list[Pose2], odom_info, loop_info,
                keyframe_dist: float = 0.3, loop_radius: float = 1.0,
                loop_yaw_gate: float = 2 * math.pi / 3, loop_gap_min: int = 10) -> PoseGraph:
    """Predicted graph after following ``path`` under maximum-likelihood observations."""
    g = graph.copy()
    if len(path) < 2:
        return g
    old = graph.poses_array()
    samples = _resample(path, keyframe_dist)
    prev = g.nodes[-1]
    for pose in samples:
        node = g.add_node(pose, prev.step)
        g.add_edge(prev.id, node.id, prev.pose.between(pose), odom_info, EdgeKind.ODOMETRY)
        last_ok = node.id - loop_gap_min
        if last_ok >= 0:
            cand = old[: min(last_ok + 1, len(old))]
            d = np.hypot(cand[:, 0] - pose.x, cand[:, 1] - pose.y)
            dth = np.abs(np.pi - np.mod(np.pi - (cand[:, 2] - pose.theta), 2 * np.pi))
            ok = (d <= loop_radius) & (dth <= loop_yaw_gate)
            if ok.any():
                idx = np.flatnonzero(ok)
                t = int(idx[np.argmin(d[idx])])
                g.add_edge(node.id, t, pose.between(Pose2.from_array(old[t])), loop_info,
                           EdgeKind.LOOP_CLOSURE)
        prev = node
    return g


def _resample(path: list[Pose2], spacing: float) -> list[Pose2]:
    """Poses every ``spacing`` metres along the path, always ending at its last pose."""
    out = []
    acc = 0.0
    last = 0
    for i in range(1, len(path)):
        acc += path[i - 1].distance_to(path[i])
        if acc >= spacing:
            out.append(path[i])
            acc = 0.0
            last = i
    if last != len(path) - 1 and path[0].distance_to(path[-1]) + acc > 0:
        out.append(path[-1])
    return out


def visible_unknown_area(grid: OccupancyGrid, pose: Pose2, bearings, max_range: float) -> float:
    ang = pose.theta + np.asarray(bearings)
    n = kernels.count_unknown_visible(grid.logodds, grid.tau, grid.resolution, pose.x, pose.y,
                                      np.cos(ang), np.sin(ang), max_range)
    return n * grid.resolution**2


def utility(candidate: CandidateAction, graph: PoseGraph | None = None,
            grid: OccupancyGrid | None = None, alpha: float = 1.0) -> float:
    """Un-normalised utility: graph D-opt of the predicted graph + alpha * visible area."""
    return dopt_graph(candidate.predicted_graph) + alpha * candidate.area_term


def normalise_and_score(cands: list[CandidateAction], alpha: float) -> None:
    if not cands:
        return
    d = np.array([c.dopt_term for c in cands])
    a = np.array([c.area_term for c in cands])

    def mm(v):
        span = v.max() - v.min()
        return np.zeros_like(v) if span <= 0 else (v - v.min()) / span

    u = mm(d) + alpha * mm(a)
    for c, val in zip(cands, u):
        c.utility = float(val)


def select_best(cands: list[CandidateAction]) -> CandidateAction | None:
    """Argmax utility; ties go to the lower candidate index."""
    best = None
    for c in cands:
        if best is None or c.utility > best.utility:
            best = c
    return best


# -- execution ---------------------------------------------------------------

def _goal_key(xy, cell=0.25):
    return (round(xy[0] / cell), round(xy[1] / cell))


class Explorer:
    """Runs one active-SLAM step at a time on a :class:`SlamState`."""

    def __init__(self, state: SlamState, params: ExploreParams | None = None):
        self.state = state
        self.params = params or ExploreParams()
        sp = state.params
        self.odom_info = nominal_odometry_info(state.motion, sp.keyframe_dist, self.params.dt)
        self.goal_visits: dict[tuple[int, int], int] = {}
        self.step = 0
        self._cache = None

    # candidate generation
    def _blacklisted(self, xy) -> bool:
        return self.goal_visits.get(_goal_key(xy), 0) >= self.params.blacklist_after

    def _start(self, trav):
        est = self.state.estimated_pose
        cell = self.state.map.cell_of(est.x, est.y)
        H, W = trav.shape
        if 0 <= cell[0] < H and 0 <= cell[1] < W and trav[cell]:
            return est
        near = nearest_true_cell(trav, cell)
        if near is None:
            return None
        x, y = self.state.map.cell_center(*near)
        return Pose2(x, y, est.theta)

    def _make_candidate(self, idx, goal_xy, trav, start, with_area, cluster=None):
        st = self.state
        path = plan_path(st.map, start, goal_xy, traversable=trav)
        if path is None:
            return None
        if start is not st.estimated_pose:
            path = [st.estimated_pose] + path
        sp = st.params
        pg = hallucinate(st.graph, path, self.odom_info, sp.loop_info, sp.keyframe_dist,
                         sp.loop_radius, sp.loop_yaw_gate, sp.loop_gap_min)
        cand = CandidateAction(idx, goal_xy, path, pg, cluster=cluster)
        cand.dopt_term = dopt_graph(pg)
        if with_area:
            cand.area_term = visible_unknown_area(st.map, path[-1], st._bearings, st.sensor.range)
        return cand

    def frontier_candidates(self, trav=None) -> list[CandidateAction]:
        p = self.params
        st = self.state
        if trav is None:
            trav = traversable_mask(st.map, p.inflation_radius)
        start = self._start(trav)
        if start is None:
            return []
        clusters = [c for c in detect_frontiers(st.map, p.min_cluster_size)
                    if not self._blacklisted(c.centroid)][: p.max_candidates]
        out = []
        for i, cl in enumerate(clusters):
            ok = trav[cl.cells[:, 0], cl.cells[:, 1]]
            if not ok.any():
                continue
            cells = cl.cells[ok]
            centers = (cells[:, ::-1] + 0.5) * st.map.resolution
            k = int(np.argmin(np.hypot(centers[:, 0] - cl.centroid[0], centers[:, 1] - cl.centroid[1])))
            goal = (float(centers[k, 0]), float(centers[k, 1]))
            cand = self._make_candidate(i, goal, trav, start, True, cl)
            if cand is not None:
                out.append(cand)
        return out

    def revisit_candidates(self, trav=None) -> list[CandidateAction]:
        """Old graph nodes to drive back to once no frontier is reachable."""
        p = self.params
        st = self.state
        if trav is None:
            trav = traversable_mask(st.map, p.inflation_radius)
        start = self._start(trav)
        if start is None:
            return []
        est = st.estimated_pose
        poses = st.graph.poses_array()
        far = np.flatnonzero(np.hypot(poses[:, 0] - est.x, poses[:, 1] - est.y) >= p.revisit_min_dist)
        if len(far) == 0:
            return []
        pick = far[np.linspace(0, len(far) - 1, min(p.max_candidates, len(far))).round().astype(int)]
        out = []
        for i, nid in enumerate(dict.fromkeys(pick.tolist())):
            goal = (float(poses[nid, 0]), float(poses[nid, 1]))
            r, c = st.map.cell_of(*goal)
            if not trav[r, c] or self._blacklisted(goal):
                continue
            cand = self._make_candidate(i, goal, trav, start, False)
            if cand is not None:
                out.append(cand)
        return out

    def _state_token(self):
        st = self.state
        return (st.graph.n, len(st.graph.edges), st.time, sum(self.goal_visits.values()))

    def peek_frontiers(self) -> list[CandidateAction]:
        """Reachable frontier candidates for the current state.

        Cached until the robot moves, so the harness can ask whether frontiers
        remain after a step without paying for the search twice.
        """
        tok = self._state_token()
        if self._cache is None or self._cache[0] != tok:
            trav = traversable_mask(self.state.map, self.params.inflation_radius)
            self._cache = (tok, trav, self.frontier_candidates(trav))
        return self._cache[2]

    def initial_scan(self) -> int:
        """Turn once on the spot and close the resulting keyframes; counts as step 0."""
        st = self.state
        st.step = self.step
        ticks = self.spin()
        self._finish_step()
        self.step += 1
        return ticks

    def _finish_step(self) -> bool:
        st = self.state
        if st._pending.x or st._pending.y or st._pending.theta:
            st.add_keyframe()
            st.detect_loop_closure()
        if st._closure_since_opt:
            st.optimize()
            return True
        return False

    def select_and_execute(self) -> StepOutcome:
        p = self.params
        st = self.state
        st.step = self.step
        cands = self.peek_frontiers()
        trav = self._cache[1]
        exhausted = not cands
        if exhausted:
            cands = self.revisit_candidates(trav)
        normalise_and_score(cands, p.alpha)
        outcome = StepOutcome(self.step, exhausted, list(cands))
        closures0 = st.graph.loop_closure_count()
        remaining = list(cands)
        for _ in range(p.max_attempts):
            best = select_best(remaining)
            if best is None:
                break
            if outcome.selected is not None:
                # replan from where the previous attempt left the robot
                trav = traversable_mask(st.map, p.inflation_radius)
                start = self._start(trav)
                if start is None:
                    break
                path = plan_path(st.map, start, best.goal, traversable=trav)
                if path is None:
                    remaining.remove(best)
                    continue
                best.path = [st.estimated_pose] + path if start is not st.estimated_pose else path
            outcome.selected = best
            reached, ticks = self.drive(best.path)
            outcome.ticks += ticks
            outcome.attempts += 1
            key = _goal_key(best.goal)
            self.goal_visits[key] = self.goal_visits.get(key, 0) + 1
            if reached:
                outcome.reached = True
                break
            remaining.remove(best)
        if outcome.selected is None:
            # nothing reachable at all: turn on the spot to rescan
            outcome.ticks += self.spin()
        outcome.optimized = self._finish_step()
        outcome.loop_closures = st.graph.loop_closure_count() - closures0
        self.step += 1
        return outcome

    def spin(self, turns: float = 1.0) -> int:
        st = self.state
        w = st.motion.w_max
        ticks = max(1, math.ceil(turns * 2 * math.pi / (w * self.params.dt)))
        for _ in range(ticks):
            st.move(0.0, w, self.params.dt)
            if st.needs_keyframe():
                st.add_keyframe()
                st.detect_loop_closure()
        return ticks

    def drive(self, path: list[Pose2]) -> tuple[bool, int]:
        """Follow ``path`` with a pure-pursuit style controller on the estimated pose."""
        p = self.params
        st = self.state
        mm = st.motion
        goal = path[-1]
        length = path_length(path)
        max_ticks = int(3 * length / (mm.v_max * p.dt)) + 4 * p.stuck_ticks
        best = math.inf
        since_best = 0
        idx = 0
        ticks = 0
        pts = np.array([[q.x, q.y] for q in path])
        while ticks < max_ticks:
            est = st.estimated_pose
            dist_goal = math.hypot(goal.x - est.x, goal.y - est.y)
            if dist_goal <= p.goal_tolerance:
                return True, ticks
            if dist_goal < best - 0.01:
                best = dist_goal
                since_best = 0
            else:
                since_best += 1
                if since_best >= p.stuck_ticks:
                    return False, ticks
            # closest point ahead of the current index, then look ahead along the path
            window = pts[idx: idx + 40]
            idx += int(np.argmin(np.hypot(window[:, 0] - est.x, window[:, 1] - est.y)))
            j = idx
            while j + 1 < len(pts) and math.hypot(pts[j, 0] - est.x, pts[j, 1] - est.y) < p.lookahead:
                j += 1
            tx, ty = pts[j]
            err = wrap_angle(math.atan2(ty - est.y, tx - est.x) - est.theta)
            w = max(-mm.w_max, min(mm.w_max, p.heading_gain * err))
            if abs(err) > math.pi / 4:
                v = 0.0
            else:
                v = min(mm.v_max * math.cos(err), dist_goal / p.dt)
            st.move(v, w, p.dt)
            ticks += 1
            if st.needs_keyframe():
                st.add_keyframe()
                st.detect_loop_closure()
        return False, ticks
