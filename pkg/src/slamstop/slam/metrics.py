"""Map quality metrics against ground truth (privileged)."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .grid import OccupancyGrid
from .world import WorldModel


def known_area(grid: OccupancyGrid) -> float:
    return grid.known_area()


def coverage(grid: OccupancyGrid, world: WorldModel, explorable: np.ndarray | None = None,
             start=None) -> float:
    """Percent of the world's explorable cells that are known in ``grid``."""
    if explorable is None:
        explorable = world.explorable_mask(start if start is not None else world.default_start())
    total = int(np.count_nonzero(explorable))
    if total == 0:
        return 0.0
    return 100.0 * np.count_nonzero(grid.known_mask() & explorable) / total


def map_error(grid: OccupancyGrid, world: WorldModel,
              truth_distance: np.ndarray | None = None) -> tuple[float, float] | None:
    """(rmse, max) distance from mapped-occupied cells to the nearest true obstacle.

    Returns None when the map has no known occupied cell.
    """
    occ = grid.occupied_mask()
    if not occ.any():
        return None
    if truth_distance is None:
        truth_distance = ndimage.distance_transform_edt(~world.occupied) * world.resolution
    d = truth_distance[occ]
    return float(np.sqrt(np.mean(d * d))), float(np.max(d))
