"""D-optimality of information matrices, exact and through graph connectivity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .graph import (
    PoseGraph,
    laplacian_from_edges,
    log_weighted_spanning_trees,
    validate_info,
)

STATE_DIM = 3
CLAMP_RTOL = 1e-12
# eigenvalues more negative than this (relative to the largest) mean "not PSD"
PSD_RTOL = 1e-9


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray

    @property
    def d(self) -> int:
        return len(self.eigenvalues)


def _check_symmetric(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has NaN or infinite entries")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if M.size and np.max(np.abs(M - M.T)) > 1e-9 * max(scale, 1e-300):
        raise DomainError("matrix is not symmetric")
    return M


def spectrum(M) -> Spectrum:
    """Ascending eigenvalues of a symmetric PSD matrix, round-off clamped to 0."""
    M = _check_symmetric(M)
    lam = np.linalg.eigvalsh(M)
    top = float(np.max(np.abs(lam))) if lam.size else 0.0
    if lam.size and lam[0] < -PSD_RTOL * top:
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {lam[0]:.3e})")
    lam = np.where(lam < CLAMP_RTOL * top, 0.0, lam)
    return Spectrum(lam)


def dopt_matrix(M, d: int | None = None) -> float:
    """Geometric mean of the eigenvalues of ``M``; 0 when any is 0."""
    lam = spectrum(M).eigenvalues
    if d is None:
        d = lam.shape[0]
    elif d != lam.shape[0]:
        raise DomainError(f"dimension {d} does not match matrix side {lam.shape[0]}")
    if d == 0 or np.any(lam <= 0):
        return 0.0
    return float(np.exp(np.sum(np.log(lam)) / d))


def edge_weight(info) -> float:
    return dopt_matrix(validate_info(info), STATE_DIM)


def edge_weights(infos: np.ndarray) -> np.ndarray:
    """Vectorised :func:`edge_weight` over a stack of already validated 3x3 matrices."""
    infos = np.asarray(infos, dtype=float).reshape(-1, 3, 3)
    if infos.shape[0] == 0:
        return np.zeros(0)
    lam = np.linalg.eigvalsh(infos)
    top = np.max(np.abs(lam), axis=1, keepdims=True)
    lam = np.where(lam < CLAMP_RTOL * top, 0.0, lam)
    out = np.zeros(infos.shape[0])
    ok = np.all(lam > 0, axis=1)
    out[ok] = np.exp(np.mean(np.log(lam[ok]), axis=1))
    return out


def log_dopt_graph_from_edges(n: int, pairs, weights) -> float:
    """log of (n * t)^(1/n) for a graph given as edge list plus weights."""
    L = laplacian_from_edges(n, pairs, weights)
    return (math.log(n) + log_weighted_spanning_trees(L)) / n


def dopt_graph_from_edges(n: int, pairs, weights) -> float:
    return math.exp(log_dopt_graph_from_edges(n, pairs, weights))


def dopt_graph(graph: PoseGraph) -> float:
    """Connectivity-based D-optimality estimate, (n * t(G_gamma))^(1/n).

    Each edge is weighted by the D-optimality of its own information matrix
    and t is the weighted spanning-tree count, evaluated in log space.
    """
    return dopt_graph_from_edges(graph.n, graph.edge_pairs(), edge_weights(graph.infos()))


def assemble_fim(graph: PoseGraph) -> np.ndarray:
    """Anchored system information matrix under unit relative-pose Jacobians.

    Edge (a, b) adds its information matrix to blocks (a, a) and (b, b) and
    subtracts it from (a, b) and (b, a).  Rows and columns of node 0 are
    dropped, leaving a 3(n-1) square matrix.
    """
    n = graph.n
    ell = STATE_DIM
    Y = np.zeros((ell * n, ell * n))
    blocks = np.arange(ell)
    for e in graph.edges:
        ia = e.from_id * ell + blocks
        ib = e.to_id * ell + blocks
        Y[np.ix_(ia, ia)] += e.info
        Y[np.ix_(ib, ib)] += e.info
        Y[np.ix_(ia, ib)] -= e.info
        Y[np.ix_(ib, ia)] -= e.info
    return Y[ell:, ell:]


def dopt_exact(graph: PoseGraph) -> float:
    Y = assemble_fim(graph)
    return dopt_matrix(Y, Y.shape[0])


def dump_matrix_csv(M, path) -> None:
    """Row-major, comma-separated dump for debugging."""
    np.savetxt(path, np.asarray(M), delimiter=",", fmt="%.17g")
