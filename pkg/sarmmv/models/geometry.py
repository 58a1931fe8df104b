"""
Geometry Models
===============

Platform trajectory and sub-aperture frame containers.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np


# =============================================================================
# Enums
# =============================================================================

class TrajectoryKind(str, Enum):
    """How platform positions are produced."""
    CIRCULAR = "circular"
    CUSTOM = "custom"


# =============================================================================
# Containers
# =============================================================================

@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Platform path with uniform slow-time sampling s_j = j * slow_time_step.

    Circular paths have radius ``radius`` at height ``height`` above the
    image plane z = 0 and are flown counter-clockwise at arc speed
    ``speed`` starting at ``start_angle``. Custom paths interpolate the
    stored ``points`` (one per slow-time sample) piecewise-linearly.
    """

    kind: TrajectoryKind
    speed: float
    slow_time_step: float
    n_slow: int
    wave_speed: float = 3.0e8
    height: float = 0.0
    radius: float = float("inf")
    start_angle: float = 0.0
    points: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def duration(self) -> float:
        return (self.n_slow - 1) * self.slow_time_step

    @property
    def slow_times(self) -> np.ndarray:
        return np.arange(self.n_slow) * self.slow_time_step

    @property
    def aperture_length(self) -> float:
        """Path length flown over the sampled slow times."""
        return self.speed * self.duration


@dataclass(frozen=True, eq=False)
class SubapertureFrame:
    """Local frame of one sub-aperture about the reference point."""

    center_time: float
    center_position: np.ndarray
    range_vector: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    range: float
    projector: np.ndarray
    velocity: np.ndarray
    curvature_radius: float = float("inf")

    @property
    def horizontal_range_axis(self) -> np.ndarray:
        """Unit projection of the range vector onto the image plane."""
        horizontal = np.array([self.range_vector[0], self.range_vector[1], 0.0])
        norm = np.linalg.norm(horizontal)
        if norm == 0.0:
            return np.array([1.0, 0.0, 0.0])
        return horizontal / norm
