"""
Baseline Imagers
================

Weighted Kirchhoff migration and the matched-filter / least-squares
images of a single model matrix.

Migration back-propagates every sample along the travel-time delay,

    I(y) = (4 pi)^2 / (k_o^2 |f(omega_o)|^2 N)
           sum_j sum_l d(s_j, omega_l) |r(s_j) - y|^2 exp(-2 i omega_l (tau - tau_o))

with N the number of summed samples, so a unit on-grid isotropic
scatterer images to about one. The grid-cell area is part of the stored
reflectivity and does not appear in the weight.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
import scipy.linalg

from sarmmv.config import settings
from sarmmv.models.data import DataCube
from sarmmv.models.geometry import Trajectory
from sarmmv.models.mmv import ModelMatrix
from sarmmv.models.scene import ImageGrid
from sarmmv.models.waveform import Pulse
from sarmmv.services.geometry import distances
from sarmmv.utils.validators import validate_shape

logger = logging.getLogger(__name__)

# Pixels per migration work item
PIXEL_CHUNK = 128


def _migrate_pixels(
    pixels: np.ndarray,
    values: np.ndarray,
    traj: Trajectory,
    points: np.ndarray,
    center: np.ndarray,
    slow_times: np.ndarray,
    omegas: np.ndarray,
) -> np.ndarray:
    c = traj.wave_speed
    dist = distances(traj, slow_times, points[pixels])
    dist_o = distances(traj, slow_times, center[None, :])
    delay = (dist - dist_o) / c
    image = np.zeros(len(pixels), dtype=complex)
    for l, omega in enumerate(omegas):
        kernel = dist**2 * np.exp(-2j * omega * delay)
        image += values[:, l] @ kernel
    return image


def migrate(
    data: DataCube,
    traj: Trajectory,
    grid: ImageGrid,
    pulse: Pulse,
    slow_indices: Optional[np.ndarray] = None,
    freq_indices: Optional[np.ndarray] = None,
    workers: Optional[int] = None,
) -> np.ndarray:
    """
    Weighted Kirchhoff migration image, one complex value per grid point.

    ``slow_indices`` and ``freq_indices`` restrict the sum to part of the
    data, e.g. a single sub-aperture.
    """
    rows = np.arange(len(data.slow_times)) if slow_indices is None else np.asarray(slow_indices)
    cols = np.arange(len(data.frequencies)) if freq_indices is None else np.asarray(freq_indices)
    values = data.values[np.ix_(rows, cols)]
    slow_times = data.slow_times[rows]
    omegas = data.frequencies[cols]
    if not np.any(values):
        return np.zeros(grid.size, dtype=complex)

    points = grid.points
    chunks = [np.arange(i, min(i + PIXEL_CHUNK, grid.size)) for i in range(0, grid.size, PIXEL_CHUNK)]
    image = np.empty(grid.size, dtype=complex)
    with ThreadPoolExecutor(max_workers=workers or settings.SIM_WORKERS) as pool:
        results = pool.map(
            lambda px: _migrate_pixels(px, values, traj, points, grid.center, slow_times, omegas),
            chunks,
        )
        for pixels, block in zip(chunks, results):
            image[pixels] = block

    k_o = pulse.central_wavenumber
    weight = (4.0 * math.pi) ** 2 / ((k_o * pulse.spectrum_level) ** 2 * values.size)
    logger.info("Migrated %d samples onto %d pixels", values.size, grid.size)
    return weight * image


def matched_filter(A: ModelMatrix, d: np.ndarray) -> np.ndarray:
    """
    A^* d with column q divided by ||a_q||^2, the diagonal-Gram
    approximation of the least-squares image.
    """
    values = A.values
    d = np.asarray(d)
    validate_shape(d, (values.shape[0],) + d.shape[1:], "d")
    norms = np.sum(np.abs(values) ** 2, axis=0)
    image = values.conj().T @ d
    scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 0.0)
    return image * (scale if image.ndim == 1 else scale[:, None])


def pseudo_inverse_image(A: ModelMatrix, d: np.ndarray, rcond: Optional[float] = None) -> np.ndarray:
    """Minimum-norm least-squares solution of A rho = d."""
    values = A.values
    d = np.asarray(d)
    validate_shape(d, (values.shape[0],) + d.shape[1:], "d")
    solution, *_ = scipy.linalg.lstsq(values, d, cond=rcond)
    return solution
