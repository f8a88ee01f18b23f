from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..graph import Pose2

# P(occ) outside [0.35, 0.65] counts as known
DEFAULT_TAU = math.log(0.65 / 0.35)
DEFAULT_L_MAX = 10.0
ENDPOINT_EPS = 1e-9


@dataclass(eq=False)
class OccupancyGrid:
    """Log-odds occupancy grid sharing the world's cell layout (row = y, col = x)."""

    shape: tuple[int, int]
    resolution: float = 0.05
    tau: float = DEFAULT_TAU
    l_max: float = DEFAULT_L_MAX
    origin: Pose2 = field(default_factory=Pose2)
    logodds: np.ndarray = None

    def __post_init__(self):
        if self.logodds is None:
            self.logodds = np.zeros(self.shape, dtype=np.float64)
        else:
            self.logodds = np.ascontiguousarray(self.logodds, dtype=np.float64)
        self.shape = tuple(self.logodds.shape)

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.shape, self.resolution, self.tau, self.l_max, self.origin,
                             self.logodds.copy())

    def reset(self) -> None:
        self.logodds.fill(0.0)

    def known_mask(self) -> np.ndarray:
        return np.abs(self.logodds) > self.tau

    def free_mask(self) -> np.ndarray:
        return self.logodds < -self.tau

    def occupied_mask(self) -> np.ndarray:
        return self.logodds > self.tau

    def unknown_mask(self) -> np.ndarray:
        return ~self.known_mask()

    def known_area(self) -> float:
        return float(np.count_nonzero(self.known_mask())) * self.resolution**2

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(y / self.resolution)), int(math.floor(x / self.resolution))

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (col + 0.5) * self.resolution, (row + 0.5) * self.resolution

    def integrate_scan(self, pose: Pose2, bearings, ranges, hits, max_range: float,
                       l_hit: float, l_miss: float) -> None:
        """Inverse sensor model update, at most one update per cell per scan.

        Cells crossed before a beam's endpoint get ``l_miss``; the endpoint
        cell of a beam that hit something gets ``l_hit`` (hit wins over miss).
        """
        ang = pose.theta + np.asarray(bearings, dtype=float)
        dxs, dys = np.cos(ang), np.sin(ang)
        mark = np.zeros(self.shape, dtype=np.uint8)
        rng_arr = np.minimum(np.asarray(ranges, dtype=np.float64), max_range)
        kernels.scan_marks(mark, self.resolution, pose.x, pose.y, dxs, dys,
                           np.ascontiguousarray(rng_arr),
                           np.ascontiguousarray(hits, dtype=np.uint8), ENDPOINT_EPS)
        lo = self.logodds
        lo[mark == 1] += l_miss
        lo[mark == 2] += l_hit
        np.clip(lo, -self.l_max, self.l_max, out=lo)
