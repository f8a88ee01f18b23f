"""Flat ``key = value`` experiment configuration.

Blank lines and ``#``/``;`` comments are ignored.  Keys (defaults in brackets):

    world              bundled name, path to a .world file, or box:<w>x<h>  [closed_rooms_small]
    seed               base seed; trial k uses seed + k                      [0]
    trials             number of trials                                      [1]
    step_cap           maximum active-SLAM steps per trial                   [120]
    out                output directory                                      [runs/<world>]
    criteria           comma list: task:<th>:<w>, temporal:<s>, coverage:<pct>, frontier
                                                        [task:2:3, temporal:600, coverage:90, coverage:99, frontier]
    master             criterion name that halts the run; empty = all triggered  []
    start              "x y theta" start pose; empty = max-clearance cell    []
    workers            parallel trial processes                              [1]
    sensor_fov_deg, sensor_range, sensor_beams, sensor_sigma
    motion_v_max, motion_w_max, motion_sigma_x, motion_sigma_y, motion_sigma_theta
    keyframe_dist, keyframe_rot, loop_radius, loop_yaw_gate_deg, loop_gap_min,
    loop_sigma_xy, loop_sigma_theta, robot_radius
    alpha, min_cluster_size, max_candidates, inflation_radius, dt
    scan_log           write per-keyframe raw scans (debug)                  [false]
    dump_fim           write the dense anchored FIM at each trigger (debug)  [false]
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..explore import ExploreParams
from ..slam.models import MotionModel, SensorModel
from ..slam.state import SlamParams
from ..slam.world import WorldModel, box_world, load_world
from ..stopping import CriterionState, parse_criterion

DEFAULT_CRITERIA = ("task:2:3", "temporal:600", "coverage:90", "coverage:99", "frontier")
_SECTION = "experiment"


@dataclass
class ExperimentConfig:
    world: str = "closed_rooms_small"
    seed: int = 0
    trials: int = 1
    step_cap: int = 120
    out: Path | None = None
    criteria: list[str] = field(default_factory=lambda: list(DEFAULT_CRITERIA))
    master: str | None = None
    start: tuple[float, float, float] | None = None
    workers: int = 1
    sensor: SensorModel = field(default_factory=SensorModel)
    motion: MotionModel = field(default_factory=MotionModel)
    slam: SlamParams = field(default_factory=SlamParams)
    explore: ExploreParams = field(default_factory=ExploreParams)
    scan_log: bool = False
    dump_fim: bool = False
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        if self.step_cap <= 0:
            raise ConfigurationError("step_cap must be positive")
        if self.trials <= 0:
            raise ConfigurationError("trials must be positive")
        if not self.criteria:
            raise ConfigurationError("at least one criterion must be configured")
        names = [c.name for c in self.make_criteria()]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate criteria {names}")
        if self.master and self.master not in names:
            raise ConfigurationError(f"master criterion {self.master!r} is not configured")
        if self.out is None:
            self.out = Path("runs") / Path(self.world).stem.replace(":", "_")

    def make_criteria(self) -> list[CriterionState]:
        return [parse_criterion(s) for s in self.criteria]

    @property
    def seeds(self) -> list[int]:
        return [self.seed + k for k in range(self.trials)]

    def load_world(self) -> WorldModel:
        w = self.world
        if w.startswith("box:"):
            try:
                a, b = w[4:].lower().split("x")
                return box_world(float(a), float(b))
            except ValueError as exc:
                raise ConfigurationError(f"bad box world {w!r}") from exc
        p = Path(w)
        if not p.is_absolute() and (self.base_dir / p).exists():
            p = self.base_dir / p
        return load_world(p if p.exists() else w)


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ConfigurationError(f"bad boolean {v!r}")


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"bad config: {exc}") from exc
    raw = dict(cp[_SECTION])
    kw: dict = {}
    sensor: dict = {}
    motion: dict = {}
    sigmas = [0.01, 0.005, 0.008]
    slam: dict = {}
    loop_sig = [None, None]
    explore: dict = {}

    def num(key, cast=float):
        try:
            return cast(raw.pop(key))
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {exc}") from exc

    for key in list(raw):
        if key in ("seed", "trials", "step_cap", "workers"):
            kw[key] = num(key, int)
        elif key == "world":
            kw["world"] = raw.pop(key)
        elif key == "out":
            kw["out"] = Path(raw.pop(key))
        elif key == "criteria":
            kw["criteria"] = [c.strip() for c in raw.pop(key).split(",") if c.strip()]
        elif key == "master":
            kw["master"] = raw.pop(key).strip() or None
        elif key == "start":
            v = raw.pop(key).split()
            if v:
                if len(v) != 3:
                    raise ConfigurationError("start needs 'x y theta'")
                kw["start"] = tuple(float(t) for t in v)
        elif key in ("scan_log", "dump_fim"):
            kw[key] = _bool(raw.pop(key))
        elif key == "sensor_fov_deg":
            sensor["fov"] = math.radians(num(key))
        elif key == "sensor_range":
            sensor["range"] = num(key)
        elif key == "sensor_beams":
            sensor["beams"] = num(key, int)
        elif key == "sensor_sigma":
            sensor["sigma_r"] = num(key)
        elif key in ("motion_v_max", "motion_w_max"):
            motion[key[7:]] = num(key)
        elif key in ("motion_sigma_x", "motion_sigma_y", "motion_sigma_theta"):
            sigmas[("x", "y", "theta").index(key[13:])] = num(key)
        elif key in ("keyframe_dist", "keyframe_rot", "loop_radius", "robot_radius"):
            slam[key] = num(key)
        elif key == "loop_yaw_gate_deg":
            slam["loop_yaw_gate"] = math.radians(num(key))
        elif key == "loop_gap_min":
            slam[key] = num(key, int)
        elif key == "loop_sigma_xy":
            loop_sig[0] = num(key)
        elif key == "loop_sigma_theta":
            loop_sig[1] = num(key)
        elif key in ("alpha", "inflation_radius", "dt"):
            explore[key] = num(key)
        elif key in ("min_cluster_size", "max_candidates"):
            explore[key] = num(key, int)
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    if loop_sig != [None, None]:
        base = SlamParams().loop_info
        sxy = loop_sig[0] if loop_sig[0] is not None else base[0, 0] ** -0.5
        sth = loop_sig[1] if loop_sig[1] is not None else base[2, 2] ** -0.5
        slam["loop_info"] = np.diag([sxy**-2, sxy**-2, sth**-2])
    kw["sensor"] = SensorModel(**sensor)
    kw["motion"] = MotionModel.from_sigmas(*sigmas, **motion)
    kw["slam"] = SlamParams(**slam)
    kw["explore"] = ExploreParams(**explore)
    if base_dir is not None:
        kw["base_dir"] = base_dir
    return ExperimentConfig(**kw)


def load_config(path, seed: int | None = None, out=None) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file {path} not found")
    cfg = parse_config(p.read_text(), base_dir=p.resolve().parent)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if out is not None:
        cfg = replace(cfg, out=Path(out))
    return cfg
