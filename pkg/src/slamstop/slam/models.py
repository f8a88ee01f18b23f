from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


@dataclass(frozen=True)
class SensorModel:
    """Planar lidar: 180 deg, 5 m, 1500 beams by default."""

    fov: float = math.pi
    range: float = 5.0
    beams: int = 1500
    sigma_r: float = 0.01
    l_hit: float = _logit(0.7)
    l_miss: float = _logit(0.33)

    def __post_init__(self):
        if not (0.0 < self.fov <= 2.0 * math.pi + 1e-12):
            raise ConfigurationError("sensor fov must be in (0, 2pi]")
        if self.beams < 1:
            raise ConfigurationError("sensor needs at least one beam")
        if self.sigma_r < 0 or self.range <= 0:
            raise ConfigurationError("sensor range must be positive and sigma_r non-negative")

    def bearings(self) -> np.ndarray:
        """Beam bearings relative to the robot heading, centred on 0."""
        k = np.arange(self.beams, dtype=float)
        return -0.5 * self.fov + (k + 0.5) * (self.fov / self.beams)


@dataclass(frozen=True)
class MotionModel:
    """Unicycle with velocity limits and additive Gaussian odometry noise per control tick."""

    v_max: float = 0.2
    w_max: float = 0.8
    noise_cov: np.ndarray = field(default_factory=lambda: np.diag([0.01**2, 0.005**2, 0.008**2]))

    def __post_init__(self):
        if self.v_max <= 0 or self.w_max <= 0:
            raise ConfigurationError("velocity limits must be positive")
        cov = np.array(self.noise_cov, dtype=float)
        if cov.shape != (3, 3) or not np.allclose(cov, cov.T):
            raise ConfigurationError("odometry noise covariance must be symmetric 3x3")
        if np.linalg.eigvalsh(cov)[0] < -1e-15:
            raise ConfigurationError("odometry noise covariance must be PSD")
        cov.setflags(write=False)
        object.__setattr__(self, "noise_cov", cov)

    @classmethod
    def from_sigmas(cls, sx: float, sy: float, stheta: float, **kw) -> "MotionModel":
        return cls(noise_cov=np.diag([sx * sx, sy * sy, stheta * stheta]), **kw)

    def noise_factor(self) -> np.ndarray:
        """Matrix F with F F^T = noise_cov (zero rows for zero variance)."""
        w, V = np.linalg.eigh(self.noise_cov)
        return V * np.sqrt(np.clip(w, 0.0, None))
