"""Simulated graph-SLAM: true robot, noisy odometry, lidar, loop closures."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import ConfigurationError, SimulationFault
from ..graph import EdgeKind, GraphEdge, Pose2, PoseGraph, PoseNode
from .grid import DEFAULT_L_MAX, DEFAULT_TAU, OccupancyGrid
from .models import MotionModel, SensorModel
from .optimizer import OptimizationReport, optimize
from .world import WorldModel

log = logging.getLogger(__name__)

# sigma = 5 cm, 5 cm, 0.025 rad
LOOP_CLOSURE_INFO = np.diag([400.0, 400.0, 1600.0])
# keeps inverse(cov) finite when a noise component is exactly zero
COV_FLOOR = 1e-12


@dataclass(frozen=True)
class SlamParams:
    keyframe_dist: float = 0.3
    keyframe_rot: float = 0.3
    loop_radius: float = 1.0
    loop_yaw_gate: float = 2 * math.pi / 3
    loop_gap_min: int = 10
    loop_info: np.ndarray = field(default_factory=lambda: LOOP_CLOSURE_INFO.copy())
    robot_radius: float = 0.15
    tau: float = DEFAULT_TAU
    l_max: float = DEFAULT_L_MAX


@dataclass
class Scan:
    step: int
    ranges: np.ndarray
    hits: np.ndarray


def _compose_jacobians(a: Pose2, b: Pose2):
    """Jacobians of a (+) b with respect to a and b."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    Ja = np.array([
        [1.0, 0.0, -s * b.x - c * b.y],
        [0.0, 1.0, c * b.x - s * b.y],
        [0.0, 0.0, 1.0],
    ])
    Jb = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return Ja, Jb


def unicycle(pose: Pose2, v: float, w: float, dt: float) -> Pose2:
    """Exact constant-velocity unicycle integration."""
    th = pose.theta
    if abs(w) < 1e-12:
        return Pose2(pose.x + v * dt * math.cos(th), pose.y + v * dt * math.sin(th), th)
    th2 = th + w * dt
    return Pose2(
        pose.x + v / w * (math.sin(th2) - math.sin(th)),
        pose.y - v / w * (math.cos(th2) - math.cos(th)),
        th2,
    )


class SlamState:
    """Single-owner simulation state.

    The graph and map live in the estimated frame, which coincides with the
    world frame at node 0 (the start pose is known).  ``true_pose`` and the
    per-node true poses are privileged simulator data, used only to generate
    measurements.
    """

    def __init__(self, world: WorldModel, start: Pose2, sensor: SensorModel | None = None,
                 motion: MotionModel | None = None, params: SlamParams | None = None,
                 rng: np.random.Generator | int | None = 0):
        self.world = world
        self.sensor = sensor or SensorModel()
        self.motion = motion or MotionModel()
        self.params = params or SlamParams()
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        if world.collides(start.x, start.y, 0.0) or world.is_occupied_at(start.x, start.y):
            raise ConfigurationError("start pose is not in free space")
        self.graph = PoseGraph()
        self.map = OccupancyGrid(world.shape, world.resolution, self.params.tau, self.params.l_max)
        self.true_pose = start
        self.true_node_poses: list[Pose2] = []
        self.scans: list[Scan] = []
        self.time = 0.0
        self.step = 0
        self.optimisation_count = 0
        self.pending_closures = 0
        self._closure_since_opt = False
        self._bearings = self.sensor.bearings()
        self._noise_factor = self.motion.noise_factor()
        self._pending = Pose2()
        self._pending_cov = np.zeros((3, 3))
        self._pending_true = Pose2()
        self._add_node(start)

    # -- odometry ---------------------------------------------------------

    @property
    def estimated_pose(self) -> Pose2:
        return self.graph.nodes[-1].pose.compose(self._pending)

    def pending_motion(self) -> Pose2:
        return self._pending

    def move(self, v: float, w: float, dt: float) -> bool:
        """Advance the true robot one control tick and accumulate noisy odometry.

        Returns False when the motion was blocked by an obstacle (only the
        rotation is then applied).
        """
        mm = self.motion
        if abs(v) > mm.v_max + 1e-12 or abs(w) > mm.w_max + 1e-12:
            log.warning("command (%.3f, %.3f) exceeds limits, clamping", v, w)
            v = max(-mm.v_max, min(mm.v_max, v))
            w = max(-mm.w_max, min(mm.w_max, w))
        new = unicycle(self.true_pose, v, w, dt)
        moved = True
        if v != 0.0 and self.world.collides(new.x, new.y, self.params.robot_radius):
            new = Pose2(self.true_pose.x, self.true_pose.y, self.true_pose.theta + w * dt)
            moved = False
        delta = self.true_pose.between(new)
        noise = self._noise_factor @ self.rng.standard_normal(3)
        meas = Pose2(delta.x + noise[0], delta.y + noise[1], delta.theta + noise[2])
        Ja, Jb = _compose_jacobians(self._pending, meas)
        self._pending_cov = Ja @ self._pending_cov @ Ja.T + Jb @ self.motion.noise_cov @ Jb.T
        self._pending = self._pending.compose(meas)
        self._pending_true = self._pending_true.compose(delta)
        self.true_pose = new
        self.time += dt
        return moved

    def needs_keyframe(self) -> bool:
        p = self._pending
        return (math.hypot(p.x, p.y) >= self.params.keyframe_dist
                or abs(p.theta) >= self.params.keyframe_rot)

    def add_keyframe(self) -> tuple[PoseNode, GraphEdge]:
        """Turn accumulated odometry into a node + odometry edge, then scan."""
        prev = self.graph.nodes[-1]
        info = np.linalg.inv(self._pending_cov + COV_FLOOR * np.eye(3))
        info = 0.5 * (info + info.T)
        node = self._add_node(prev.pose.compose(self._pending))
        edge = self.graph.add_edge(prev.id, node.id, self._pending, info, EdgeKind.ODOMETRY)
        self._pending = Pose2()
        self._pending_true = Pose2()
        self._pending_cov = np.zeros((3, 3))
        return node, edge

    def step_odometry(self, v: float, w: float, dt: float) -> tuple[PoseNode, GraphEdge]:
        """One control tick that always produces a node and an odometry edge."""
        self.move(v, w, dt)
        return self.add_keyframe()

    def _add_node(self, pose: Pose2) -> PoseNode:
        node = self.graph.add_node(pose, self.step)
        self.true_node_poses.append(self.true_pose)
        scan = self.sense()
        self.scans.append(scan)
        self._integrate(node.pose, scan)
        return node

    # -- sensing ----------------------------------------------------------

    def sense(self) -> Scan:
        """Cast the lidar from the true pose through the ground truth."""
        tp = self.true_pose
        if self.world.is_occupied_at(tp.x, tp.y):
            raise SimulationFault(f"robot inside an occupied cell at ({tp.x:.3f}, {tp.y:.3f})")
        ang = tp.theta + self._bearings
        ranges, hits = kernels.cast_rays(self.world.occ_u8, self.world.resolution, tp.x, tp.y,
                                         np.cos(ang), np.sin(ang), self.sensor.range)
        if self.sensor.sigma_r > 0:
            ranges = ranges + self.sensor.sigma_r * self.rng.standard_normal(len(ranges))
            np.clip(ranges, 0.0, self.sensor.range, out=ranges)
        return Scan(self.step, ranges, hits)

    def _integrate(self, pose: Pose2, scan: Scan) -> None:
        s = self.sensor
        self.map.integrate_scan(pose, self._bearings, scan.ranges, scan.hits, s.range,
                                s.l_hit, s.l_miss)

    def raycast_and_update(self) -> Scan:
        """Scan from the current pose and fuse it at the current estimate (not stored)."""
        scan = self.sense()
        self._integrate(self.estimated_pose, scan)
        return scan

    def rebuild_map(self) -> None:
        """Replay every stored keyframe scan from the current node estimates."""
        self.map.reset()
        for node, scan in zip(self.graph.nodes, self.scans):
            self._integrate(node.pose, scan)

    # -- loop closure & optimisation ---------------------------------------

    def detect_loop_closure(self, radius: float | None = None,
                            yaw_gate: float | None = None) -> GraphEdge | None:
        """Close a loop from the newest node to the nearest old node, if any qualifies."""
        p = self.params
        radius = p.loop_radius if radius is None else radius
        yaw_gate = p.loop_yaw_gate if yaw_gate is None else yaw_gate
        cur = self.graph.n - 1
        last = cur - p.loop_gap_min
        if last < 0:
            return None
        tp = self.true_node_poses[cur]
        old = np.array([[q.x, q.y, q.theta] for q in self.true_node_poses[: last + 1]])
        d = np.hypot(old[:, 0] - tp.x, old[:, 1] - tp.y)
        dth = np.abs(np.pi - np.mod(np.pi - (old[:, 2] - tp.theta), 2 * np.pi))
        ok = (d <= radius) & (dth <= yaw_gate)
        if not ok.any():
            return None
        idx = np.flatnonzero(ok)
        target = int(idx[np.argmin(d[idx])])  # argmin keeps the lowest id on ties
        rel = tp.between(self.true_node_poses[target])
        cov = np.linalg.inv(p.loop_info)
        w, V = np.linalg.eigh(cov)
        noise = (V * np.sqrt(np.clip(w, 0, None))) @ self.rng.standard_normal(3)
        meas = Pose2(rel.x + noise[0], rel.y + noise[1], rel.theta + noise[2])
        edge = self.graph.add_edge(cur, target, meas, p.loop_info, EdgeKind.LOOP_CLOSURE)
        self.pending_closures += 1
        self._closure_since_opt = True
        return edge

    def optimize(self, rebuild: bool = True) -> OptimizationReport:
        poses, report = optimize(self.graph)
        self.graph.set_poses(poses)
        if self._closure_since_opt:
            self.optimisation_count += 1
            self._closure_since_opt = False
        self.pending_closures = 0
        if rebuild:
            self.rebuild_map()
        return report
