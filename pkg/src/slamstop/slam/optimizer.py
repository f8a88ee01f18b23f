"""Gauss-Newton optimisation of SE(2) pose graphs with node 0 held fixed."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import DisconnectedGraphError
from ..graph import PoseGraph, wrap_angles

log = logging.getLogger(__name__)

MAX_ITERATIONS = 50
STEP_TOL = 1e-6
MAX_HALVINGS = 12


@dataclass
class OptimizationReport:
    iterations: int
    chi2_initial: float
    chi2_final: float
    converged: bool
    chi2_history: list[float] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return not self.converged


def _edge_arrays(graph: PoseGraph):
    pairs = graph.edge_pairs()
    meas = np.array([[e.measurement.x, e.measurement.y, e.measurement.theta] for e in graph.edges])
    return pairs, meas.reshape(-1, 3), graph.infos()


def residuals(poses: np.ndarray, pairs: np.ndarray, meas: np.ndarray) -> np.ndarray:
    """Per-edge error t2v(Z^-1 Xi^-1 Xj), angle wrapped; shape (m, 3)."""
    xi, xj = poses[pairs[:, 0]], poses[pairs[:, 1]]
    ci, si = np.cos(xi[:, 2]), np.sin(xi[:, 2])
    cz, sz = np.cos(meas[:, 2]), np.sin(meas[:, 2])
    dx, dy = xj[:, 0] - xi[:, 0], xj[:, 1] - xi[:, 1]
    # R_i^T (t_j - t_i) - t_z, then rotate by R_z^T
    lx = ci * dx + si * dy - meas[:, 0]
    ly = -si * dx + ci * dy - meas[:, 1]
    e = np.empty_like(meas)
    e[:, 0] = cz * lx + sz * ly
    e[:, 1] = -sz * lx + cz * ly
    e[:, 2] = wrap_angles(xj[:, 2] - xi[:, 2] - meas[:, 2])
    return e


def chi2(poses, pairs, meas, infos) -> float:
    if len(pairs) == 0:
        return 0.0
    e = residuals(poses, pairs, meas)
    return float(np.einsum("ki,kij,kj->", e, infos, e))


def _jacobians(poses, pairs, meas):
    xi, xj = poses[pairs[:, 0]], poses[pairs[:, 1]]
    ci, si = np.cos(xi[:, 2]), np.sin(xi[:, 2])
    cz, sz = np.cos(meas[:, 2]), np.sin(meas[:, 2])
    dx, dy = xj[:, 0] - xi[:, 0], xj[:, 1] - xi[:, 1]
    m = len(pairs)
    # RzT RiT, rows of the translational block
    Rzi = np.empty((m, 2, 2))
    Rzi[:, 0, 0] = cz * ci - sz * si
    Rzi[:, 0, 1] = cz * si + sz * ci
    Rzi[:, 1, 0] = -sz * ci - cz * si
    Rzi[:, 1, 1] = -sz * si + cz * ci
    # d(RiT)/dtheta_i applied to (tj - ti), then RzT
    gx = -si * dx + ci * dy
    gy = -ci * dx - si * dy
    A = np.zeros((m, 3, 3))
    B = np.zeros((m, 3, 3))
    A[:, :2, :2] = -Rzi
    A[:, 0, 2] = cz * gx + sz * gy
    A[:, 1, 2] = -sz * gx + cz * gy
    A[:, 2, 2] = -1.0
    B[:, :2, :2] = Rzi
    B[:, 2, 2] = 1.0
    return A, B


def _solve_step(poses, pairs, meas, infos, anchor=0):
    n = poses.shape[0]
    e = residuals(poses, pairs, meas)
    A, B = _jacobians(poses, pairs, meas)
    OA = np.einsum("kji,kjl->kil", A, infos)  # A^T Omega
    OB = np.einsum("kji,kjl->kil", B, infos)
    Haa = OA @ A
    Hab = OA @ B
    Hbb = OB @ B
    ba = np.einsum("kij,kj->ki", OA, e)
    bb = np.einsum("kij,kj->ki", OB, e)

    ia = 3 * pairs[:, 0][:, None] + np.arange(3)
    ib = 3 * pairs[:, 1][:, None] + np.arange(3)

    def block_idx(r, c):
        rows = np.broadcast_to(r[:, :, None], (len(r), 3, 3))
        cols = np.broadcast_to(c[:, None, :], (len(c), 3, 3))
        return rows.ravel(), cols.ravel()

    parts = [
        (block_idx(ia, ia), Haa),
        (block_idx(ib, ib), Hbb),
        (block_idx(ia, ib), Hab),
        (block_idx(ib, ia), np.transpose(Hab, (0, 2, 1))),
    ]
    rows = np.concatenate([p[0][0] for p in parts])
    cols = np.concatenate([p[0][1] for p in parts])
    vals = np.concatenate([p[1].ravel() for p in parts])
    H = sp.coo_matrix((vals, (rows, cols)), shape=(3 * n, 3 * n)).tocsc()
    b = np.zeros(3 * n)
    np.add.at(b, ia.ravel(), ba.ravel())
    np.add.at(b, ib.ravel(), bb.ravel())

    keep = np.ones(3 * n, dtype=bool)
    keep[3 * anchor:3 * anchor + 3] = False
    Hr = H[keep][:, keep]
    with np.errstate(all="raise"):
        try:
            dx_r = spla.spsolve(Hr.tocsc(), -b[keep])
        except (RuntimeError, FloatingPointError) as exc:
            raise DisconnectedGraphError("pose-graph normal equations are singular") from exc
    if not np.all(np.isfinite(dx_r)):
        raise DisconnectedGraphError("pose-graph normal equations are singular")
    dx = np.zeros(3 * n)
    dx[keep] = dx_r
    return dx.reshape(n, 3)


def optimize_poses(poses, pairs, meas, infos, max_iterations: int = MAX_ITERATIONS,
                   tol: float = STEP_TOL) -> tuple[np.ndarray, OptimizationReport]:
    """Gauss-Newton with backtracking so accepted iterates never raise chi^2."""
    x = np.array(poses, dtype=float)
    c0 = chi2(x, pairs, meas, infos)
    history = [c0]
    current = c0
    converged = False
    it = 0
    while it < max_iterations:
        it += 1
        step = _solve_step(x, pairs, meas, infos)
        alpha = 1.0
        accepted = None
        for _ in range(MAX_HALVINGS):
            trial = x + alpha * step
            trial[:, 2] = wrap_angles(trial[:, 2])
            c = chi2(trial, pairs, meas, infos)
            if c <= current:
                accepted = (trial, c)
                break
            alpha *= 0.5
        if accepted is None:
            # no descent along the GN direction: we are at (numerical) optimum
            converged = bool(np.linalg.norm(step) < 1e3 * tol) or current == 0.0
            break
        x, current = accepted
        history.append(current)
        if np.linalg.norm(alpha * step) < tol:
            converged = True
            break
    if not converged:
        log.warning("pose-graph optimisation did not converge in %d iterations (chi2=%.4g)",
                    it, current)
    return x, OptimizationReport(it, c0, current, converged, history)


def optimize(graph: PoseGraph, max_iterations: int = MAX_ITERATIONS,
             tol: float = STEP_TOL) -> tuple[np.ndarray, OptimizationReport]:
    """Optimise ``graph``'s node poses; returns the new poses without mutating the graph."""
    if graph.n < 2 or not graph.edges:
        return graph.poses_array(), OptimizationReport(0, 0.0, 0.0, True, [0.0])
    if not graph.is_connected():
        raise DisconnectedGraphError("cannot optimise a disconnected pose graph")
    pairs, meas, infos = _edge_arrays(graph)
    return optimize_poses(graph.poses_array(), pairs, meas, infos, max_iterations, tol)
