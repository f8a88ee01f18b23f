"""Plain-text pose-graph records, compatible with common SE(2) tooling.

    VERTEX_SE2 id x y theta
    EDGE_SE2 from to dx dy dtheta i11 i12 i13 i22 i23 i33

Lines starting with ``#`` are comments.  Edge kind is not part of the record
format: an edge joining consecutive ids is read back as odometry, any other
as a loop closure.  Floats are written with ``repr`` so a round trip is exact.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError, PoseGraphParseError
from .graph import EdgeKind, Pose2, PoseGraph

_UPPER = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


def format_pose_graph(graph: PoseGraph, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {ln}" for ln in comment.splitlines())
    for nd in graph.nodes:
        p = nd.pose
        lines.append(f"VERTEX_SE2 {nd.id} {p.x!r} {p.y!r} {p.theta!r}")
    for e in graph.edges:
        m = e.measurement
        info = " ".join(repr(float(e.info[i, j])) for i, j in _UPPER)
        lines.append(f"EDGE_SE2 {e.from_id} {e.to_id} {m.x!r} {m.y!r} {m.theta!r} {info}")
    return "\n".join(lines) + "\n"


def export_pose_graph(graph: PoseGraph, path, comment: str | None = None) -> None:
    Path(path).write_text(format_pose_graph(graph, comment))


def parse_pose_graph(text: str) -> PoseGraph:
    vertices: dict[int, tuple[int, Pose2]] = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        try:
            if tok[0] == "VERTEX_SE2":
                if len(tok) != 5:
                    raise PoseGraphParseError(lineno, f"VERTEX_SE2 needs 4 fields, got {len(tok) - 1}")
                vid = int(tok[1])
                if vid in vertices:
                    raise PoseGraphParseError(lineno, f"duplicate vertex {vid}")
                vertices[vid] = (lineno, Pose2(float(tok[2]), float(tok[3]), float(tok[4])))
            elif tok[0] == "EDGE_SE2":
                if len(tok) != 12:
                    raise PoseGraphParseError(lineno, f"EDGE_SE2 needs 11 fields, got {len(tok) - 1}")
                a, b = int(tok[1]), int(tok[2])
                meas = Pose2(float(tok[3]), float(tok[4]), float(tok[5]))
                vals = [float(v) for v in tok[6:]]
                info = np.zeros((3, 3))
                for (i, j), v in zip(_UPPER, vals):
                    info[i, j] = info[j, i] = v
                edges.append((lineno, a, b, meas, info))
            else:
                raise PoseGraphParseError(lineno, f"unknown record {tok[0]!r}")
        except ValueError as exc:
            if isinstance(exc, PoseGraphParseError):
                raise
            raise PoseGraphParseError(lineno, str(exc)) from exc
    ids = sorted(vertices)
    if ids != list(range(len(ids))):
        raise ConfigurationError("vertex ids must be contiguous from 0")
    g = PoseGraph()
    for vid in ids:
        g.add_node(vertices[vid][1])
    for lineno, a, b, meas, info in edges:
        if a not in vertices or b not in vertices:
            missing = a if a not in vertices else b
            raise PoseGraphParseError(lineno, f"edge references missing vertex {missing}")
        kind = EdgeKind.ODOMETRY if b == a + 1 else EdgeKind.LOOP_CLOSURE
        try:
            g.add_edge(a, b, meas, info, kind)
        except (DomainError, ConfigurationError) as exc:
            raise PoseGraphParseError(lineno, str(exc)) from exc
    if g.n and not g.is_connected():
        raise ConfigurationError("imported pose graph is not connected")
    return g


def import_pose_graph(path) -> PoseGraph:
    return parse_pose_graph(Path(path).read_text())
