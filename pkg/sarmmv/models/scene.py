"""
Scene Models
============

Image grid, scatterers and ground truth.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np


class ProfileKind(str, Enum):
    """Parametric dependence on sub-aperture or sub-band index."""
    CONSTANT = "constant"
    GAUSSIAN = "gaussian"
    INDICATOR = "indicator"


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """
    Uniform rectangular grid on the image plane, endpoints included.

    Point q sits at range index q // n_cross and cross-range index
    q % n_cross, i.e. at center + range_offsets[i] * range_axis +
    cross_offsets[k] * cross_axis.
    """

    center: np.ndarray
    range_axis: np.ndarray
    cross_axis: np.ndarray
    range_offsets: np.ndarray
    cross_offsets: np.ndarray
    step_range: float
    step_cross: float

    @property
    def n_range(self) -> int:
        return len(self.range_offsets)

    @property
    def n_cross(self) -> int:
        return len(self.cross_offsets)

    @property
    def size(self) -> int:
        return self.n_range * self.n_cross

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_range, self.n_cross

    @property
    def extent_range(self) -> float:
        return float(self.range_offsets[-1] - self.range_offsets[0])

    @property
    def extent_cross(self) -> float:
        return float(self.cross_offsets[-1] - self.cross_offsets[0])

    @property
    def is_line(self) -> bool:
        return self.n_range == 1 or self.n_cross == 1

    @property
    def offsets(self) -> np.ndarray:
        """Q x 3 displacements from the center."""
        u = np.repeat(self.range_offsets, self.n_cross)
        v = np.tile(self.cross_offsets, self.n_range)
        return u[:, None] * self.range_axis + v[:, None] * self.cross_axis

    @property
    def points(self) -> np.ndarray:
        return self.center + self.offsets

    def index(self, i_range: int, i_cross: int) -> int:
        return i_range * self.n_cross + i_cross

    def unravel(self, q: int) -> tuple[int, int]:
        return divmod(int(q), self.n_cross)


@dataclass(frozen=True)
class Profile:
    """Dependence of a scatterer on a 1-based cell index."""

    kind: ProfileKind = ProfileKind.CONSTANT
    peak: float = 1.0
    width: float = 1.0
    indices: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class Scatterer:
    """Point scatterer attached to grid point ``grid_index``."""

    grid_index: int
    position: np.ndarray
    amplitude: complex = 1.0
    direction: Profile = field(default_factory=Profile)
    frequency: Profile = field(default_factory=Profile)
    table: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class Scene:
    """Scatterers on a grid, frozen over N_alpha x N_beta cells."""

    grid: ImageGrid
    n_apertures: int
    n_subbands: int
    scatterers: tuple[Scatterer, ...] = ()

    @property
    def n_columns(self) -> int:
        return self.n_apertures * self.n_subbands


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Q x (N_alpha N_beta) reflectivity matrix and its row support."""

    values: np.ndarray
    support: np.ndarray
