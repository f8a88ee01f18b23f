"""Random connected pose graphs for benchmarks and property tests."""
from __future__ import annotations

import numpy as np

from .graph import EdgeKind, Pose2, PoseGraph


def random_chain_poses(n: int, rng: np.random.Generator, step: float = 0.5) -> list[Pose2]:
    poses = [Pose2()]
    for _ in range(n - 1):
        d = Pose2(step * rng.uniform(0.5, 1.5), 0.0, rng.uniform(-0.8, 0.8))
        poses.append(poses[-1].compose(d))
    return poses


def random_pose_graph(n: int, rng: np.random.Generator | int | None = None, *,
                      loop_prob: float = 0.2, extra_edges: int | None = None,
                      weight_range: tuple[float, float] = (0.5, 2.0),
                      isotropic: bool = True) -> PoseGraph:
    """Odometry chain plus random loop-closure edges.

    With ``extra_edges=None`` every non-consecutive pair gets a loop closure
    with probability ``loop_prob`` (fine for small n); otherwise exactly that
    many distinct random pairs are added.  Isotropic graphs carry
    ``gamma * I_3`` information with gamma uniform in ``weight_range``;
    otherwise a random diagonal with the same geometric-mean range.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if n < 1:
        raise ValueError("n must be >= 1")
    poses = random_chain_poses(n, rng)
    g = PoseGraph()
    for p in poses:
        g.add_node(p)

    def info():
        gam = rng.uniform(*weight_range)
        if isotropic:
            return gam * np.eye(3)
        d = rng.uniform(0.5, 2.0, 3)
        return np.diag(gam * d / np.cbrt(np.prod(d)))

    for i in range(n - 1):
        g.add_edge(i, i + 1, poses[i].between(poses[i + 1]), info(), EdgeKind.ODOMETRY)
    if extra_edges is None:
        pairs = [(i, j) for i in range(n) for j in range(i + 2, n) if rng.random() < loop_prob]
    else:
        total = n * (n - 1) // 2 - (n - 1)
        k = min(extra_edges, total)
        seen: set[tuple[int, int]] = set()
        while len(seen) < k:
            i, j = sorted(rng.integers(0, n, 2).tolist())
            if j - i >= 2:
                seen.add((i, j))
        pairs = sorted(seen)
    for i, j in pairs:
        g.add_edge(j, i, poses[j].between(poses[i]), info(), EdgeKind.LOOP_CLOSURE)
    return g


def random_tree_pairs(n: int, rng: np.random.Generator) -> np.ndarray:
    """Edges of a random labelled tree (each node joins a random earlier one)."""
    return np.array([(int(rng.integers(0, i)), i) for i in range(1, n)], dtype=int).reshape(-1, 2)


def random_connected_pairs(n: int, rng: np.random.Generator, max_extra: int = 6) -> np.ndarray:
    """Random spanning tree plus up to ``max_extra`` extra edges (parallel edges allowed)."""
    pairs = [tuple(p) for p in random_tree_pairs(n, rng)]
    if n >= 2:
        for _ in range(int(rng.integers(0, max_extra + 1))):
            i, j = rng.choice(n, size=2, replace=False)
            pairs.append((int(min(i, j)), int(max(i, j))))
    return np.array(pairs, dtype=int).reshape(-1, 2)
