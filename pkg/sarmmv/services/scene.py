"""
Scene Service
=============

Image grids, parametric scatterer profiles and the ground-truth matrix.

Columns of every Q x (N_alpha N_beta) matrix are ordered with beta
varying fastest: column (alpha - 1) * N_beta + (beta - 1) holds
sub-aperture alpha and sub-band beta (1-based indices, 0-based column).
The grid-cell area is absorbed into the stored reflectivity values.
"""

import logging
from typing import Iterable, Optional, Sequence

import numpy as np

from sarmmv.core.errors import ErrorCodes, ValidationError
from sarmmv.models.scene import (
    GroundTruth,
    ImageGrid,
    Profile,
    ProfileKind,
    Scatterer,
    Scene,
)
from sarmmv.models.segmentation import Segmentation
from sarmmv.schemas.experiment import GridConfig, ProfileConfig, SceneConfig
from sarmmv.utils.validators import validate_index, validate_vector3

logger = logging.getLogger(__name__)

# Position mismatch, as a fraction of the grid step, still treated as on-grid
ON_GRID_TOLERANCE = 1e-6


# =============================================================================
# Grid
# =============================================================================

def _axis_offsets(extent: float, step: float, field: str) -> np.ndarray:
    if step <= 0 or not np.isfinite(step):
        raise ValidationError(
            message="Grid step must be positive",
            field=field,
            code=ErrorCodes.SCENE_INVALID_GRID,
        )
    if extent < 0 or not np.isfinite(extent):
        raise ValidationError(
            message="Grid extent must be non-negative",
            field=field,
            code=ErrorCodes.SCENE_INVALID_GRID,
        )
    n = int(np.floor(extent / step + 1e-9)) + 1
    return (np.arange(n) - (n - 1) / 2.0) * step


def make_grid(
    extent_range: float,
    extent_cross: float,
    step_range: float,
    step_cross: float,
    center: Optional[Sequence[float]] = None,
    range_axis: Optional[Sequence[float]] = None,
) -> ImageGrid:
    """
    Uniform grid centred on ``center``, endpoints included.

    An extent of 0 gives a single sample along that axis. The range axis
    is projected onto the image plane; the cross-range axis is z x range.

    Raises:
        ValidationError: If a step is not positive or an extent negative
    """
    y_o = validate_vector3(center if center is not None else np.zeros(3), "center")
    if y_o[2] != 0.0:
        raise ValidationError(
            message="Grid center must lie in the image plane",
            field="center",
            code=ErrorCodes.SCENE_INVALID_GRID,
        )
    axis = validate_vector3(range_axis if range_axis is not None else [1.0, 0.0, 0.0], "range_axis")
    axis = np.array([axis[0], axis[1], 0.0])
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        raise ValidationError(message="Range axis is vertical", field="range_axis")
    axis = axis / norm
    cross = np.cross([0.0, 0.0, 1.0], axis)

    grid = ImageGrid(
        center=y_o,
        range_axis=axis,
        cross_axis=cross,
        range_offsets=_axis_offsets(extent_range, step_range, "extent_range"),
        cross_offsets=_axis_offsets(extent_cross, step_cross, "extent_cross"),
        step_range=float(step_range),
        step_cross=float(step_cross),
    )
    logger.debug("Grid %d x %d (Q = %d)", grid.n_range, grid.n_cross, grid.size)
    return grid


def grid_from_config(config: GridConfig, range_axis: Optional[Sequence[float]] = None) -> ImageGrid:
    return make_grid(
        extent_range=config.extent_range_m,
        extent_cross=config.extent_cross_m,
        step_range=config.step_range_m,
        step_cross=config.step_cross_m,
        center=config.center_m,
        range_axis=range_axis,
    )


def nearest_index(grid: ImageGrid, range_offset: float, cross_offset: float) -> tuple[int, bool]:
    """
    Closest grid point to an in-plane offset, and whether it is on-grid.

    Raises:
        ValidationError: If the offset is outside the window by more than
            half a step
    """
    i_r = int(np.argmin(np.abs(grid.range_offsets - range_offset)))
    i_c = int(np.argmin(np.abs(grid.cross_offsets - cross_offset)))
    d_r = abs(grid.range_offsets[i_r] - range_offset)
    d_c = abs(grid.cross_offsets[i_c] - cross_offset)
    if d_r > grid.step_range / 2 + 1e-9 or d_c > grid.step_cross / 2 + 1e-9:
        raise ValidationError(
            message=f"Scatterer at ({range_offset}, {cross_offset}) m lies outside the window",
            field="position_m",
            code=ErrorCodes.SCENE_OUTSIDE_WINDOW,
        )
    on_grid = d_r <= ON_GRID_TOLERANCE * grid.step_range and d_c <= ON_GRID_TOLERANCE * grid.step_cross
    return grid.index(i_r, i_c), on_grid


# =============================================================================
# Column Convention
# =============================================================================

def column_index(alpha: int, beta: int, n_subbands: int) -> int:
    """0-based column of the 1-based cell (alpha, beta)."""
    return (alpha - 1) * n_subbands + (beta - 1)


def column_pair(column: int, n_subbands: int) -> tuple[int, int]:
    """Inverse of :func:`column_index`."""
    alpha, beta = divmod(int(column), n_subbands)
    return alpha + 1, beta + 1


# =============================================================================
# Profiles
# =============================================================================

def profile_from_config(config: ProfileConfig) -> Profile:
    return Profile(
        kind=ProfileKind(config.kind),
        peak=config.peak,
        width=config.width,
        indices=tuple(config.indices),
    )


def evaluate_profile(profile: Profile, index) -> np.ndarray:
    """
    Profile value at 1-based (possibly fractional) cell indices.

    Indicator profiles round fractional indices to the nearest cell.
    """
    index = np.asarray(index, dtype=float)
    if profile.kind == ProfileKind.CONSTANT:
        return np.ones_like(index)
    if profile.kind == ProfileKind.GAUSSIAN:
        return np.exp(-((index - profile.peak) ** 2) / (2.0 * profile.width**2))
    return np.isin(np.rint(index).astype(int), profile.indices).astype(float)


def scatterer_value(scatterer: Scatterer, alpha, beta) -> np.ndarray:
    """Reflectivity of one scatterer at (possibly fractional) cell indices."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if scatterer.table is not None:
        n_a, n_b = scatterer.table.shape
        ia = np.clip(np.rint(alpha).astype(int), 1, n_a) - 1
        ib = np.clip(np.rint(beta).astype(int), 1, n_b) - 1
        return scatterer.amplitude * scatterer.table[ia, ib]
    return (
        scatterer.amplitude
        * evaluate_profile(scatterer.direction, alpha)
        * evaluate_profile(scatterer.frequency, beta)
    )


def cell_values(scatterer: Scatterer, n_apertures: int, n_subbands: int) -> np.ndarray:
    """N_alpha x N_beta matrix of frozen values."""
    alpha = np.arange(1, n_apertures + 1)[:, None]
    beta = np.arange(1, n_subbands + 1)[None, :]
    return np.broadcast_to(
        scatterer_value(scatterer, alpha, beta), (n_apertures, n_subbands)
    ).astype(complex)


# =============================================================================
# Scenes
# =============================================================================

def make_scene(
    grid: ImageGrid,
    n_apertures: int,
    n_subbands: int,
    scatterers: Iterable[Scatterer] = (),
) -> Scene:
    """
    Validate scatterers against the grid and the cell counts.

    Raises:
        ValidationError: If an index is out of range, a table has the
            wrong shape or a scatterer is zero in every cell
    """
    checked = []
    for k, scatterer in enumerate(scatterers):
        validate_index(scatterer.grid_index, grid.size, f"scatterers[{k}].grid_index")
        if scatterer.table is not None and scatterer.table.shape != (n_apertures, n_subbands):
            raise ValidationError(
                message=f"Table shape {scatterer.table.shape} != ({n_apertures}, {n_subbands})",
                field=f"scatterers[{k}].table",
            )
        values = cell_values(scatterer, n_apertures, n_subbands)
        if not np.all(np.isfinite(values)):
            raise ValidationError(message="Amplitudes must be finite", field=f"scatterers[{k}]")
        if not np.any(values != 0):
            raise ValidationError(
                message="Scatterer is zero for every sub-aperture and sub-band",
                field=f"scatterers[{k}]",
                code=ErrorCodes.SCENE_EMPTY_SCATTERER,
            )
        checked.append(scatterer)
    return Scene(grid=grid, n_apertures=n_apertures, n_subbands=n_subbands, scatterers=tuple(checked))


def scene_from_config(
    config: SceneConfig,
    grid: ImageGrid,
    n_apertures: int,
    n_subbands: int,
) -> Scene:
    """Build a scene from its config block."""
    scatterers = []
    for k, entry in enumerate(config.scatterers):
        if entry.grid_index is not None:
            q = validate_index(entry.grid_index, grid.size, f"scene.scatterers[{k}].grid_index")
            position = grid.points[q]
        else:
            u, v = entry.position_m
            q, on_grid = nearest_index(grid, u, v)
            position = grid.center + u * grid.range_axis + v * grid.cross_axis
            if not on_grid:
                if not config.allow_off_grid:
                    raise ValidationError(
                        message=f"Scatterer {k} at ({u}, {v}) m is not on a grid point",
                        field=f"scene.scatterers[{k}].position_m",
                        code=ErrorCodes.SCENE_OUTSIDE_WINDOW,
                    )
                logger.warning("Scatterer %d is off-grid, nearest pixel %d", k, q)

        table = None
        if entry.table_real is not None:
            table = np.asarray(entry.table_real, dtype=float).astype(complex)
            if entry.table_imag is not None:
                table = table + 1j * np.asarray(entry.table_imag, dtype=float)

        scatterers.append(
            Scatterer(
                grid_index=q,
                position=position,
                amplitude=entry.amplitude * np.exp(1j * entry.phase_rad),
                direction=profile_from_config(entry.direction),
                frequency=profile_from_config(entry.frequency),
                table=table,
            )
        )
    return make_scene(grid, n_apertures, n_subbands, scatterers)


def sample_reflectivity(scene: Scene, q: int, alpha: int, beta: int) -> complex:
    """
    Frozen reflectivity of pixel q seen from sub-aperture alpha in
    sub-band beta (1-based cell indices).

    Raises:
        ValidationError: If an index is out of range
    """
    validate_index(q, scene.grid.size, "q")
    validate_index(alpha, scene.n_apertures, "alpha", one_based=True)
    validate_index(beta, scene.n_subbands, "beta", one_based=True)
    total = 0j
    for scatterer in scene.scatterers:
        if scatterer.grid_index == q:
            total += complex(scatterer_value(scatterer, alpha, beta))
    return total


def ground_truth_matrix(scene: Scene, grid: ImageGrid, segmentation: Segmentation) -> GroundTruth:
    """R_true with rows indexed by pixel and columns by (alpha, beta)."""
    if grid.size != scene.grid.size:
        raise ValidationError(message="Scene and grid sizes differ", field="grid")
    n_a, n_b = segmentation.n_apertures, segmentation.n_subbands
    if (n_a, n_b) != (scene.n_apertures, scene.n_subbands):
        raise ValidationError(message="Scene and segmentation cell counts differ", field="segmentation")

    values = np.zeros((grid.size, n_a * n_b), dtype=complex)
    for scatterer in scene.scatterers:
        values[scatterer.grid_index] += cell_values(scatterer, n_a, n_b).ravel()
    support = np.flatnonzero(np.any(values != 0, axis=1))
    return GroundTruth(values=values, support=support)
