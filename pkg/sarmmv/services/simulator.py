"""
Data Simulator
==============

Down-ramped frequency-domain data d(s_j, omega_l) of a pixelated scene,
generated directly from the single-scattering model.

One kernel evaluates both physics models. For scatterer y and reference
point y_o, with gamma the Doppler factor,

    d += k^2 f(w (1 + 2 gamma_o)) f(w (1 + 2 gamma)) rho
         exp(2 i w [(1 + gamma) tau - (1 + gamma_o) tau_o]) / (4 pi |r - y|)^2

The start-stop model passes gamma = 0 through the same arithmetic, so a
Doppler simulation of a stationary platform reproduces it bit for bit.

Rows are split into chunks evaluated by a thread pool; each worker owns
disjoint rows, so the output does not depend on the worker count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from sarmmv.config import settings
from sarmmv.core.errors import ErrorCodes, ValidationError
from sarmmv.models.data import DataCube, DataModelKind
from sarmmv.models.geometry import Trajectory
from sarmmv.models.scene import ImageGrid, Scene
from sarmmv.models.segmentation import Segmentation
from sarmmv.models.waveform import Pulse
from sarmmv.services.geometry import platform_position, platform_velocity
from sarmmv.services.scene import scatterer_value
from sarmmv.services.segmentation import cell_of_samples, fractional_cells
from sarmmv.services.waveform import spectrum

logger = logging.getLogger(__name__)

# Rows per work item
ROW_CHUNK = 64

DOWNRAMP_DOPPLER = "doppler"
DOWNRAMP_START_STOP = "start_stop"


# =============================================================================
# Kernel
# =============================================================================

def _check_window(scene: Scene, grid: ImageGrid) -> None:
    for k, scatterer in enumerate(scene.scatterers):
        dy = scatterer.position - grid.center
        u = float(dy @ grid.range_axis)
        v = float(dy @ grid.cross_axis)
        inside = (
            grid.range_offsets[0] - grid.step_range / 2 <= u <= grid.range_offsets[-1] + grid.step_range / 2
            and grid.cross_offsets[0] - grid.step_cross / 2 <= v <= grid.cross_offsets[-1] + grid.step_cross / 2
        )
        if not inside:
            raise ValidationError(
                message=f"Scatterer {k} lies outside the image window",
                field=f"scatterers[{k}]",
                code=ErrorCodes.SCENE_OUTSIDE_WINDOW,
            )


def _reflectivity_rows(
    scene: Scene,
    seg: Segmentation,
    n_slow: int,
    continuous: bool,
) -> list[np.ndarray]:
    """Per-scatterer N_s x N_omega reflectivity seen by each sample."""
    if continuous:
        alpha, beta = fractional_cells(seg, n_slow)
    else:
        alpha, beta = cell_of_samples(seg, n_slow)
    return [
        np.broadcast_to(scatterer_value(s, alpha[:, None], beta[None, :]), (n_slow, len(beta)))
        for s in scene.scatterers
    ]


def _simulate_rows(
    rows: np.ndarray,
    traj: Trajectory,
    pulse: Pulse,
    slow_times: np.ndarray,
    omegas: np.ndarray,
    positions: np.ndarray,
    rho: list[np.ndarray],
    reference: np.ndarray,
    doppler: bool,
    downramp: str,
) -> np.ndarray:
    s = slow_times[rows]
    r = platform_position(traj, s)
    c = pulse.wave_speed
    k2 = (omegas / c) ** 2

    diff_o = r - reference
    dist_o = np.linalg.norm(diff_o, axis=1)
    tau_o = dist_o / c
    if doppler:
        velocity = platform_velocity(traj, s)
        gamma_o = np.sum(velocity * diff_o, axis=1) / (dist_o * c)
    else:
        velocity = None
        gamma_o = np.zeros(len(rows))

    if downramp == DOWNRAMP_START_STOP:
        ref_phase = 2.0 * omegas[None, :] * tau_o[:, None]
        ref_spec = spectrum(pulse, omegas)[None, :] * np.ones((len(rows), 1))
    else:
        ref_phase = 2.0 * omegas[None, :] * ((1.0 + gamma_o) * tau_o)[:, None]
        ref_spec = spectrum(pulse, omegas[None, :] * (1.0 + 2.0 * gamma_o)[:, None])

    out = np.zeros((len(rows), len(omegas)), dtype=complex)
    for position, values in zip(positions, rho):
        diff = r - position
        dist = np.linalg.norm(diff, axis=1)
        tau = dist / c
        if doppler:
            gamma = np.sum(velocity * diff, axis=1) / (dist * c)
        else:
            gamma = np.zeros(len(rows))
        phase = 2.0 * omegas[None, :] * ((1.0 + gamma) * tau)[:, None] - ref_phase
        spec = spectrum(pulse, omegas[None, :] * (1.0 + 2.0 * gamma)[:, None])
        amplitude = k2[None, :] * ref_spec * spec / ((4.0 * math.pi * dist) ** 2)[:, None]
        out += amplitude * values[rows] * np.exp(1j * phase)
    return out


def simulate(
    scene: Scene,
    grid: ImageGrid,
    traj: Trajectory,
    pulse: Pulse,
    seg: Segmentation,
    kind: DataModelKind = DataModelKind.START_STOP,
    downramp: str = DOWNRAMP_DOPPLER,
    continuous: bool = False,
    workers: Optional[int] = None,
) -> DataCube:
    """
    Simulate a data cube on the segmentation lattice.

    Raises:
        ValidationError: If a scatterer lies outside the window or the
            platform is not slower than the waves
    """
    kind = DataModelKind(kind)
    if kind == DataModelKind.DOPPLER and traj.speed >= pulse.wave_speed:
        raise ValidationError(message="Platform speed must be below the wave speed", field="speed")
    if downramp not in (DOWNRAMP_DOPPLER, DOWNRAMP_START_STOP):
        raise ValidationError(message=f"Unknown down-ramp '{downramp}'", field="downramp")
    _check_window(scene, grid)

    slow_times = traj.slow_times
    omegas = seg.frequencies
    n_slow = len(slow_times)
    rho = _reflectivity_rows(scene, seg, n_slow, continuous)
    positions = [s.position for s in scene.scatterers]
    values = np.zeros((n_slow, len(omegas)), dtype=complex)

    if positions:
        chunks = [np.arange(i, min(i + ROW_CHUNK, n_slow)) for i in range(0, n_slow, ROW_CHUNK)]
        workers = workers or settings.SIM_WORKERS
        args = (traj, pulse, slow_times, omegas, positions, rho, seg.reference_point, kind == DataModelKind.DOPPLER, downramp)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(lambda rows: _simulate_rows(rows, *args), chunks)
            for rows, block in zip(chunks, results):
                values[rows] = block

    if kind == DataModelKind.DOPPLER and positions:
        _warn_band_leak(traj, pulse, omegas)

    logger.info(
        "Simulated %s data: %d x %d samples, %d scatterers",
        kind.value,
        n_slow,
        len(omegas),
        len(positions),
    )
    return DataCube(values=values, slow_times=slow_times, frequencies=omegas, model_kind=kind)


def _warn_band_leak(traj: Trajectory, pulse: Pulse, omegas: np.ndarray) -> None:
    """Doppler-shifted edge samples can fall outside the band."""
    shift = 2.0 * traj.speed / pulse.wave_speed
    edge = np.abs(omegas - pulse.carrier) + omegas * shift
    leaking = int(np.count_nonzero(edge > pulse.half_band * (1 + 1e-12)))
    if leaking:
        logger.warning(
            "%d frequencies may be Doppler-shifted outside the band; their spectrum is zero",
            leaking,
        )


def simulate_start_stop(
    scene: Scene,
    grid: ImageGrid,
    traj: Trajectory,
    pulse: Pulse,
    seg: Segmentation,
    continuous: bool = False,
) -> DataCube:
    """Data under the start-stop approximation."""
    return simulate(scene, grid, traj, pulse, seg, DataModelKind.START_STOP, continuous=continuous)


def simulate_doppler(
    scene: Scene,
    grid: ImageGrid,
    traj: Trajectory,
    pulse: Pulse,
    seg: Segmentation,
    downramp: str = DOWNRAMP_DOPPLER,
    continuous: bool = False,
) -> DataCube:
    """Data with first-order Doppler corrections."""
    return simulate(scene, grid, traj, pulse, seg, DataModelKind.DOPPLER, downramp, continuous)


# =============================================================================
# Noise
# =============================================================================

NOISE_FROBENIUS = "frobenius"
NOISE_PER_SAMPLE = "per_sample"


def add_noise(data: DataCube, level: float, seed: int = 0, mode: str = NOISE_FROBENIUS) -> DataCube:
    """
    Additive circular complex Gaussian noise.

    ``frobenius`` scales the noise so that E ||n||_F = level ||d||_F;
    ``per_sample`` gives each sample a standard deviation level |d|.

    Raises:
        ValidationError: If the level is negative or the mode unknown
    """
    if not np.isfinite(level) or level < 0:
        raise ValidationError(message="Noise level must be non-negative", field="level")
    if mode not in (NOISE_FROBENIUS, NOISE_PER_SAMPLE):
        raise ValidationError(message=f"Unknown noise mode '{mode}'", field="mode")
    if level == 0:
        return data.with_values(data.values, noise_level=0.0)

    rng = np.random.default_rng(seed)
    draws = rng.standard_normal(data.values.shape + (2,))
    unit = (draws[..., 0] + 1j * draws[..., 1]) / math.sqrt(2.0)
    if mode == NOISE_FROBENIUS:
        scale = level * np.linalg.norm(data.values) / math.sqrt(data.values.size)
    else:
        scale = level * np.abs(data.values)
    noisy = data.values + scale * unit
    logger.info("Added %s noise at level %.3g (seed %d)", mode, level, seed)
    return data.with_values(noisy, noise_level=float(level))
