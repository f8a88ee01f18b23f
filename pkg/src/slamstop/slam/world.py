"""Ground-truth worlds loaded from ASCII grid files.

File format: a first line ``resolution <meters>`` followed by rows of ``#``
(occupied) and ``.`` (free).  The first text row is the top of the map, so
row ``r`` of the file becomes grid row ``H - 1 - r`` (y grows upwards).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..errors import ConfigurationError
from ..graph import Pose2

BUNDLED_WORLDS = ("closed_rooms_small", "closed_maze")


@dataclass(eq=False)
class WorldModel:
    occupied: np.ndarray
    resolution: float
    origin: Pose2 = field(default_factory=Pose2)
    name: str = ""

    def __post_init__(self):
        self.occupied = np.ascontiguousarray(self.occupied, dtype=bool)
        if self.occupied.ndim != 2 or min(self.occupied.shape) < 3:
            raise ConfigurationError("world grid must be 2-D and at least 3x3")
        if not self.resolution > 0:
            raise ConfigurationError("world resolution must be positive")
        occ = self.occupied
        if not (occ[0].all() and occ[-1].all() and occ[:, 0].all() and occ[:, -1].all()):
            raise ConfigurationError(f"world {self.name!r} is not closed: border cells must be '#'")

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupied.shape

    @cached_property
    def occ_u8(self) -> np.ndarray:
        return self.occupied.astype(np.uint8)

    @cached_property
    def clearance(self) -> np.ndarray:
        """Distance (m) from each cell centre to the nearest occupied cell centre."""
        return ndimage.distance_transform_edt(~self.occupied) * self.resolution

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the cell containing world point (x, y)."""
        return int(math.floor(y / self.resolution)), int(math.floor(x / self.resolution))

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (col + 0.5) * self.resolution, (row + 0.5) * self.resolution

    def in_bounds(self, row: int, col: int) -> bool:
        H, W = self.shape
        return 0 <= row < H and 0 <= col < W

    def is_occupied_at(self, x: float, y: float) -> bool:
        r, c = self.cell_of(x, y)
        return not self.in_bounds(r, c) or bool(self.occupied[r, c])

    def collides(self, x: float, y: float, radius: float) -> bool:
        r, c = self.cell_of(x, y)
        if not self.in_bounds(r, c):
            return True
        return bool(self.clearance[r, c] < radius + 0.5 * self.resolution)

    def explorable_mask(self, start: Pose2) -> np.ndarray:
        """Free cells connected to ``start`` plus occupied cells bordering them."""
        r, c = self.cell_of(start.x, start.y)
        if not self.in_bounds(r, c) or self.occupied[r, c]:
            raise ConfigurationError("start pose is not in free space")
        labels, _ = ndimage.label(~self.occupied)
        reach = labels == labels[r, c]
        walls = ndimage.binary_dilation(reach, structure=np.ones((3, 3), bool)) & self.occupied
        return reach | walls

    def default_start(self) -> Pose2:
        """Free cell with the largest clearance (lowest row, then col, on ties)."""
        flat = int(np.argmax(self.clearance))
        r, c = divmod(flat, self.shape[1])
        x, y = self.cell_center(r, c)
        return Pose2(x, y, 0.0)

    def to_text(self) -> str:
        rows = ["".join("#" if v else "." for v in row) for row in self.occupied[::-1]]
        return f"resolution {self.resolution!r}\n" + "\n".join(rows) + "\n"


def parse_world(text: str, name: str = "") -> WorldModel:
    lines = [ln.rstrip("\r\n") for ln in text.splitlines()]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise ConfigurationError("empty world file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "resolution":
        raise ConfigurationError("world file must start with 'resolution <m>'")
    try:
        res = float(head[1])
    except ValueError as exc:
        raise ConfigurationError(f"bad resolution {head[1]!r}") from exc
    rows = lines[1:]
    if not rows:
        raise ConfigurationError("world file has no grid rows")
    width = len(rows[0])
    grid = np.zeros((len(rows), width), dtype=bool)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ConfigurationError(f"world row {i + 2} has length {len(row)}, expected {width}")
        bad = set(row) - {"#", "."}
        if bad:
            raise ConfigurationError(f"world row {i + 2} has invalid characters {sorted(bad)}")
        grid[i] = np.frombuffer(row.encode(), dtype=np.uint8) == ord("#")
    return WorldModel(grid[::-1].copy(), res, name=name)


def load_world(path) -> WorldModel:
    """Load a world from a file path or a bundled world name."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED_WORLDS:
        return bundled_world(str(path))
    if not p.exists():
        raise ConfigurationError(f"world file {path} not found")
    return parse_world(p.read_text(), name=p.stem)


def bundled_world(name: str) -> WorldModel:
    if name not in BUNDLED_WORLDS:
        raise ConfigurationError(f"unknown bundled world {name!r}")
    text = resources.files("slamstop.worlds").joinpath(f"{name}.world").read_text()
    return parse_world(text, name=name)


def world_from_strings(rows: list[str], resolution: float, name: str = "") -> WorldModel:
    return parse_world(f"resolution {resolution}\n" + "\n".join(rows), name=name)


def box_world(width_m: float, height_m: float, resolution: float = 0.05, wall: int = 1) -> WorldModel:
    """Empty closed rectangular room; handy for tests."""
    W = int(round(width_m / resolution)) + 2 * wall
    H = int(round(height_m / resolution)) + 2 * wall
    occ = np.zeros((H, W), dtype=bool)
    occ[:wall] = occ[-wall:] = True
    occ[:, :wall] = occ[:, -wall:] = True
    return WorldModel(occ, resolution, name=f"box_{width_m:g}x{height_m:g}")
