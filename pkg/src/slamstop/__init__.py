"""Uncertainty-driven stopping criteria for active graph-SLAM."""
from .graph import Pose2, PoseGraph, PoseNode, GraphEdge, EdgeKind
from .toed import dopt_exact, dopt_graph, dopt_matrix

__version__ = "0.1.0"

__all__ = [
    "Pose2",
    "PoseGraph",
    "PoseNode",
    "GraphEdge",
    "EdgeKind",
    "dopt_exact",
    "dopt_graph",
    "dopt_matrix",
]
