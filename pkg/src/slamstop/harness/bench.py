"""Timing benchmarks: graph D-opt vs. the full eigendecomposition, and the
compiled grid kernels vs. their Python fallback."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .. import kernels
from ..errors import ConfigurationError
from ..randgraph import random_pose_graph
from ..toed import dopt_exact, dopt_graph


@dataclass
class DoptTiming:
    n: int
    fim_dim: int
    reps: int
    median_graph_s: float
    median_exact_s: float
    mean_rel_error: float

    @property
    def ratio(self) -> float:
        """How many times faster the graph estimate is."""
        return self.median_exact_s / max(self.median_graph_s, 1e-12)


def bench_graph(n: int, rng: np.random.Generator):
    """Isotropic chain with n // 5 random loop closures."""
    return random_pose_graph(n, rng, extra_edges=n // 5 if n >= 3 else 0)


def _timed(fn, *args):
    t0 = time.perf_counter()
    v = fn(*args)
    return time.perf_counter() - t0, v


def benchmark_dopt(sizes, reps: int = 5, seed: int = 0) -> list[DoptTiming]:
    sizes = list(sizes)
    if any(n < 2 for n in sizes):
        raise ConfigurationError("benchmark sizes must be >= 2")
    if reps < 1:
        raise ConfigurationError("reps must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for n in sizes:
        tg, te, errs = [], [], []
        for _ in range(reps):
            g = bench_graph(n, rng)
            dt_g, vg = _timed(dopt_graph, g)
            dt_e, ve = _timed(dopt_exact, g)
            tg.append(dt_g)
            te.append(dt_e)
            errs.append(abs(vg - ve) / ve)
        out.append(DoptTiming(n, 3 * (n - 1), reps, statistics.median(tg),
                              statistics.median(te), float(np.mean(errs))))
    return out


def format_dopt_report(rows: list[DoptTiming]) -> str:
    lines = ["n,fim_dim,reps,median_graph_s,median_exact_s,ratio,mean_rel_error"]
    for r in rows:
        lines.append(f"{r.n},{r.fim_dim},{r.reps},{r.median_graph_s:.6g},{r.median_exact_s:.6g},"
                     f"{r.ratio:.4g},{r.mean_rel_error:.4g}")
    return "\n".join(lines)


@dataclass
class KernelTiming:
    kernel: str
    backend: str
    median_s: float


def benchmark_kernels(reps: int = 5, world_name: str = "closed_rooms_small") -> list[KernelTiming]:
    """Median time per call of each grid kernel on a bundled world, per backend."""
    from ..slam.grid import DEFAULT_TAU
    from ..slam.models import SensorModel
    from ..slam.world import bundled_world

    world = bundled_world(world_name)
    occ = world.occ_u8
    res = world.resolution
    start = world.default_start()
    ang = SensorModel().bearings() * 2.0  # full turn
    dxs, dys = np.cos(ang), np.sin(ang)
    free = np.ascontiguousarray(world.clearance > 0.2, dtype=np.uint8)
    sr, sc = world.cell_of(start.x, start.y)
    labels, _ = ndimage.label(free)
    rr, cc = np.nonzero(labels == labels[sr, sc])
    far = int(np.argmax((rr - sr) ** 2 + (cc - sc) ** 2))
    logodds = np.where(world.occupied, 5.0, 0.0)
    logodds[: occ.shape[0] // 2] = 0.0
    out = []
    for name, mod in kernels.backends().items():
        ranges, hits = mod.cast_rays(occ, res, start.x, start.y, dxs, dys, 5.0)
        cases = {
            "cast_rays": lambda: mod.cast_rays(occ, res, start.x, start.y, dxs, dys, 5.0),
            "scan_marks": lambda: mod.scan_marks(np.zeros_like(occ), res, start.x, start.y,
                                                 dxs, dys, ranges, hits, 1e-9),
            "count_unknown_visible": lambda: mod.count_unknown_visible(
                logodds, DEFAULT_TAU, res, start.x, start.y, dxs, dys, 5.0),
            "astar": lambda: mod.astar(free, sr, sc, int(rr[far]), int(cc[far])),
        }
        for kname, fn in cases.items():
            ts = [_timed(fn)[0] for _ in range(reps)]
            out.append(KernelTiming(kname, name, statistics.median(ts)))
    return out


def format_kernel_report(rows: list[KernelTiming]) -> str:
    lines = ["kernel,backend,median_s,speedup_vs_python"]
    py = {r.kernel: r.median_s for r in rows if r.backend == "python"}
    for r in rows:
        sp = py[r.kernel] / max(r.median_s, 1e-12)
        lines.append(f"{r.kernel},{r.backend},{r.median_s:.6g},{sp:.3g}")
    return "\n".join(lines)
