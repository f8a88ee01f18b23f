"""SE(2) pose graphs and graph-connectivity numerics.

The weighted spanning-tree count of a pose graph is obtained from the
matrix-tree theorem: any cofactor of the weighted Laplacian equals the sum,
over all spanning trees, of the product of edge weights.  Counts grow
super-exponentially with graph size so everything here works in log space.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    ConfigurationError,
    DisconnectedGraphError,
    DomainError,
    EnumerationLimitError,
)

BRUTE_FORCE_MAX_NODES = 10


def wrap_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    return math.pi - (math.pi - theta) % (2.0 * math.pi)


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    return np.pi - np.mod(np.pi - theta, 2.0 * np.pi)


@dataclass(frozen=True)
class Pose2:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    def compose(self, other: "Pose2") -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    __matmul__ = compose

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)

    def between(self, other: "Pose2") -> "Pose2":
        """Relative transform taking this pose to ``other`` (this^-1 * other)."""
        dx, dy = other.x - self.x, other.y - self.y
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(c * dx + s * dy, -s * dx + c * dy, other.theta - self.theta)

    def distance_to(self, other: "Pose2") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @classmethod
    def from_array(cls, a) -> "Pose2":
        return cls(a[0], a[1], a[2])


def validate_info(info, rtol: float = 1e-12) -> np.ndarray:
    """Check a 3x3 information matrix and return a read-only float copy."""
    m = np.array(info, dtype=float)
    if m.shape != (3, 3):
        raise DomainError(f"information matrix must be 3x3, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("information matrix has non-finite entries")
    scale = max(float(np.max(np.abs(m))), 1e-300)
    if np.max(np.abs(m - m.T)) > rtol * scale:
        raise DomainError("information matrix is not symmetric")
    m = 0.5 * (m + m.T)
    tr = float(np.trace(m))
    if np.linalg.eigvalsh(m)[0] < -1e-12 * max(abs(tr), 1e-300):
        raise DomainError("information matrix is not positive semidefinite")
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class PoseNode:
    id: int
    pose: Pose2
    step: int = 0


class EdgeKind(str, Enum):
    ODOMETRY = "odometry"
    LOOP_CLOSURE = "loop_closure"


@dataclass(frozen=True, eq=False)
class GraphEdge:
    from_id: int
    to_id: int
    measurement: Pose2
    info: np.ndarray
    kind: EdgeKind = EdgeKind.ODOMETRY

    def __eq__(self, other):
        if not isinstance(other, GraphEdge):
            return NotImplemented
        return (
            self.from_id == other.from_id
            and self.to_id == other.to_id
            and self.measurement == other.measurement
            and self.kind == other.kind
            and np.array_equal(self.info, other.info)
        )

    __hash__ = None


@dataclass
class PoseGraph:
    """Append-only pose graph; node 0 is the anchor.

    Node poses may be replaced wholesale (after optimisation) but nodes and
    edges are never removed.
    """

    nodes: list[PoseNode] = field(default_factory=list)
    edges: list[GraphEdge] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def add_node(self, pose: Pose2, step: int = 0) -> PoseNode:
        node = PoseNode(len(self.nodes), pose, step)
        self.nodes.append(node)
        return node

    def add_edge(
        self,
        from_id: int,
        to_id: int,
        measurement: Pose2,
        info,
        kind: EdgeKind | str = EdgeKind.ODOMETRY,
    ) -> GraphEdge:
        kind = EdgeKind(kind)
        n = len(self.nodes)
        if from_id == to_id:
            raise ConfigurationError(f"self-loop on node {from_id}")
        if not (0 <= from_id < n and 0 <= to_id < n):
            raise ConfigurationError(f"edge ({from_id}, {to_id}) references a missing node")
        if kind is EdgeKind.ODOMETRY and to_id != from_id + 1:
            raise ConfigurationError(
                f"odometry edge ({from_id}, {to_id}) must join consecutive nodes"
            )
        edge = GraphEdge(from_id, to_id, measurement, validate_info(info), kind)
        self.edges.append(edge)
        return edge

    def copy(self) -> "PoseGraph":
        return PoseGraph(list(self.nodes), list(self.edges))

    def poses_array(self) -> np.ndarray:
        if not self.nodes:
            return np.zeros((0, 3))
        return np.array([[p.pose.x, p.pose.y, p.pose.theta] for p in self.nodes])

    def set_poses(self, poses: np.ndarray) -> None:
        poses = np.asarray(poses, dtype=float)
        if poses.shape != (self.n, 3):
            raise ConfigurationError(f"expected {(self.n, 3)} poses, got {poses.shape}")
        self.nodes = [
            PoseNode(nd.id, Pose2(*row), nd.step) for nd, row in zip(self.nodes, poses)
        ]

    def edge_pairs(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([(e.from_id, e.to_id) for e in self.edges], dtype=np.int64)

    def infos(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 3, 3))
        return np.stack([e.info for e in self.edges])

    def loop_closure_count(self) -> int:
        return sum(1 for e in self.edges if e.kind is EdgeKind.LOOP_CLOSURE)

    def is_connected(self) -> bool:
        return _is_connected(self.n, self.edge_pairs())


def _is_connected(n: int, pairs: np.ndarray, weights: np.ndarray | None = None) -> bool:
    if n <= 1:
        return n == 1
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if weights is not None:
        pairs = pairs[np.asarray(weights) > 0]
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    ncomp, _ = connected_components(adj, directed=False)
    return ncomp == 1


@dataclass(frozen=True, eq=False)
class WeightedLaplacian:
    matrix: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def reduced(self, anchor: int = 0) -> np.ndarray:
        keep = np.arange(self.n) != anchor
        return self.matrix[np.ix_(keep, keep)]


def _as_weights(weights, m: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != m:
        raise ConfigurationError(f"got {w.shape[0]} weights for {m} edges")
    if not np.all(np.isfinite(w)):
        raise DomainError("edge weights must be finite")
    if np.any(w < 0):
        raise DomainError("edge weights must be non-negative")
    return w


def laplacian_from_edges(n: int, pairs, weights) -> WeightedLaplacian:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    w = _as_weights(weights, len(pairs))
    L = np.zeros((n, n))
    a, b = pairs[:, 0], pairs[:, 1]
    np.add.at(L, (a, a), w)
    np.add.at(L, (b, b), w)
    np.add.at(L, (a, b), -w)
    np.add.at(L, (b, a), -w)
    w.setflags(write=False)
    L.setflags(write=False)
    return WeightedLaplacian(L, w)


def build_weighted_laplacian(graph: PoseGraph, weights) -> WeightedLaplacian:
    """Weighted Laplacian of ``graph``; parallel edges add their weights."""
    return laplacian_from_edges(graph.n, graph.edge_pairs(), weights)


def log_weighted_spanning_trees(L: WeightedLaplacian, anchor: int = 0) -> float:
    """Natural log of the weighted spanning-tree count.

    Computed as the log-determinant of the reduced Laplacian through a
    Cholesky factorisation, so the count itself is never formed.

    Raises:
        DisconnectedGraphError: the positively weighted graph is disconnected.
    """
    if L.n < 2:
        raise ConfigurationError("spanning-tree count needs at least 2 nodes")
    # round-off can leave a tiny positive pivot on a cut graph; check topology first
    ncomp, _ = connected_components(L.matrix != 0, directed=False)
    if ncomp != 1:
        raise DisconnectedGraphError(f"graph has {ncomp} connected components")
    R = L.reduced(anchor)
    try:
        C = scipy.linalg.cholesky(R, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise DisconnectedGraphError("reduced Laplacian is not positive definite") from exc
    d = np.diag(C)
    if not np.all(d > 0) or not np.all(np.isfinite(d)):
        raise DisconnectedGraphError("reduced Laplacian is not positive definite")
    return float(2.0 * np.sum(np.log(d)))


def brute_force_spanning_trees(graph_or_n, weights, pairs=None) -> float:
    """Exact weighted spanning-tree count by enumerating (n-1)-edge subsets.

    Accepts either a :class:`PoseGraph` or a node count together with an
    explicit ``pairs`` array.  Only meant as a test oracle.
    """
    if isinstance(graph_or_n, PoseGraph):
        n, pairs = graph_or_n.n, graph_or_n.edge_pairs()
    else:
        n = int(graph_or_n)
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if n > BRUTE_FORCE_MAX_NODES:
        raise EnumerationLimitError(f"n={n} exceeds the enumeration guard of {BRUTE_FORCE_MAX_NODES}")
    w = _as_weights(weights, len(pairs))
    if n == 1:
        return 1.0
    edges = [(int(a), int(b)) for a, b in pairs]
    total = 0.0
    for subset in itertools.combinations(range(len(edges)), n - 1):
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        prod = 1.0
        for k in subset:
            ra, rb = find(edges[k][0]), find(edges[k][1])
            if ra == rb:
                break
            parent[ra] = rb
            prod *= w[k]
        else:
            total += prod
    return total


def average_node_degree(graph: PoseGraph) -> float:
    if graph.n < 1:
        raise ConfigurationError("average degree of an empty graph")
    return 2.0 * len(graph.edges) / graph.n


def connected_component_count(n: int, pairs: Iterable[Sequence[int]], weights=None) -> int:
    pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    if weights is not None:
        pairs = pairs[np.asarray(weights) > 0]
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return int(connected_components(adj, directed=False)[0])
