from .grid import OccupancyGrid
from .metrics import coverage, known_area, map_error
from .models import MotionModel, SensorModel
from .optimizer import OptimizationReport, optimize
from .state import SlamParams, SlamState
from .world import WorldModel, box_world, bundled_world, load_world, parse_world

__all__ = [
    "OccupancyGrid",
    "coverage",
    "known_area",
    "map_error",
    "MotionModel",
    "SensorModel",
    "OptimizationReport",
    "optimize",
    "SlamParams",
    "SlamState",
    "WorldModel",
    "box_world",
    "bundled_world",
    "load_world",
    "parse_world",
]
