"""
Segmentation Service
====================

Partition of the aperture into sub-apertures and of the band into
sub-bands, the regime diagnostics that justify freezing the reflectivity
over each cell, and extraction of per-cell data vectors.

Sub-apertures abut on the slow-time lattice without sharing samples: the
centre of sub-aperture alpha is ((alpha-1) n_s + (n_s-1)/2) h_s, so
consecutive centres are n_s h_s = a/V + h_s apart. Sub-bands do the same
on the frequency lattice, which is centred on the carrier.
"""

import logging
import math
from typing import Optional

import numpy as np

from sarmmv.config import settings
from sarmmv.core.errors import ErrorCodes, SamplingError, ValidationError
from sarmmv.core.limits import REGIME_LIMITS, STATUS_WARN, classify, requires_band
from sarmmv.models.data import DataCube
from sarmmv.models.geometry import Trajectory
from sarmmv.models.scene import ImageGrid
from sarmmv.models.segmentation import Segmentation
from sarmmv.models.waveform import Pulse
from sarmmv.schemas.reports import Diagnostic, RegimeReport
from sarmmv.services.geometry import subaperture_frame
from sarmmv.services.waveform import uniform_sampling
from sarmmv.utils.validators import validate_index, validate_positive

logger = logging.getLogger(__name__)


# =============================================================================
# Segmentation
# =============================================================================

def samples_per_subaperture(subaperture_m: float, speed: float, slow_time_step: float) -> int:
    """n_s = round(a / (V h_s)) + 1."""
    validate_positive(subaperture_m, "subaperture_m")
    validate_positive(slow_time_step, "slow_time_step")
    if speed <= 0:
        raise ValidationError(message="Segmentation needs a moving platform", field="speed")
    return int(round(subaperture_m / (speed * slow_time_step))) + 1


def segment(
    traj: Trajectory,
    pulse: Pulse,
    n_apertures: int,
    n_subbands: int,
    subaperture_m: float,
    subband_hz: float,
    n_omega: int,
    reference_point: Optional[np.ndarray] = None,
) -> Segmentation:
    """
    Consecutive, non-overlapping sub-apertures and sub-bands.

    Raises:
        SamplingError: If the sub-apertures need more slow-time samples
            than the trajectory has, or the frequency lattice leaves the band
    """
    if n_apertures < 1 or n_subbands < 1 or n_omega < 1:
        raise ValidationError(message="Cell counts must be at least 1", field="segmentation")
    validate_positive(subband_hz, "subband_hz")
    n_s = samples_per_subaperture(subaperture_m, traj.speed, traj.slow_time_step)
    if n_apertures * n_s > traj.n_slow:
        raise SamplingError(
            message=(
                f"{n_apertures} sub-apertures of {n_s} samples need "
                f"{n_apertures * n_s} slow-time samples, trajectory has {traj.n_slow}"
            ),
            code=ErrorCodes.SEG_EXCEEDS_APERTURE,
        )

    h_s = traj.slow_time_step
    slow_offsets = (np.arange(n_s) - (n_s - 1) / 2.0) * h_s
    center_times = (np.arange(n_apertures) * n_s + (n_s - 1) / 2.0) * h_s

    # Frequency spacing: n_omega samples span 2 pi b inclusive; a single
    # frequency per sub-band puts the sub-band centres 2 pi b apart
    freq_step = 2.0 * math.pi * subband_hz / (n_omega - 1) if n_omega > 1 else 2.0 * math.pi * subband_hz
    lattice = uniform_sampling(pulse, n_subbands * n_omega, freq_step)
    frequencies = lattice.omegas
    freq_offsets = (np.arange(n_omega) - (n_omega - 1) / 2.0) * freq_step if n_omega > 1 else np.zeros(1)
    center_omegas = frequencies.reshape(n_subbands, n_omega).mean(axis=1)

    y_o = np.zeros(3) if reference_point is None else np.asarray(reference_point, dtype=float)
    frames = tuple(subaperture_frame(traj, t, y_o) for t in center_times)

    seg = Segmentation(
        n_apertures=n_apertures,
        n_subbands=n_subbands,
        subaperture_m=float(subaperture_m),
        subband_hz=float(subband_hz),
        n_s=n_s,
        n_omega=n_omega,
        slow_step=h_s,
        freq_step=freq_step,
        center_times=center_times,
        center_omegas=center_omegas,
        slow_offsets=slow_offsets,
        freq_offsets=freq_offsets,
        frames=frames,
        slow_times=traj.slow_times,
        frequencies=frequencies,
        reference_point=y_o,
        pulse=pulse,
        speed=traj.speed,
    )
    logger.info(
        "Segmentation: %d sub-apertures x %d samples, %d sub-bands x %d frequencies",
        n_apertures,
        n_s,
        n_subbands,
        n_omega,
    )
    return seg


def cell_of_samples(seg: Segmentation, n_slow: int) -> tuple[np.ndarray, np.ndarray]:
    """
    1-based (alpha, beta) owning each global slow-time and frequency index.

    Slow-time samples past the last sub-aperture belong to the last one.
    """
    alpha = np.minimum(np.arange(n_slow) // seg.n_s, seg.n_apertures - 1) + 1
    beta = np.arange(len(seg.frequencies)) // seg.n_omega + 1
    return alpha, beta


def fractional_cells(seg: Segmentation, n_slow: int) -> tuple[np.ndarray, np.ndarray]:
    """Continuous cell coordinates, integer at cell centres."""
    alpha = 1.0 + (np.arange(n_slow) - (seg.n_s - 1) / 2.0) / seg.n_s
    beta = 1.0 + (np.arange(len(seg.frequencies)) - (seg.n_omega - 1) / 2.0) / seg.n_omega
    return alpha, beta


# =============================================================================
# Subset Extraction
# =============================================================================

def check_alignment(data: DataCube, seg: Segmentation) -> None:
    """
    Raises:
        SamplingError: If the data lattice differs from the segmentation's
    """
    n_needed = seg.n_apertures * seg.n_s
    aligned = (
        len(data.slow_times) >= n_needed
        and data.values.shape[1] == len(seg.frequencies)
        and np.allclose(data.slow_times[:n_needed], seg.slow_times[:n_needed], rtol=0, atol=1e-9 * seg.slow_step)
        and np.allclose(data.frequencies, seg.frequencies, rtol=1e-12, atol=0)
    )
    if not aligned:
        raise SamplingError(
            message="Data sampling is not aligned with the segmentation lattice",
            code=ErrorCodes.SEG_MISALIGNED,
        )


def extract_subset(data: DataCube, seg: Segmentation, alpha: int, beta: int) -> np.ndarray:
    """
    Data vector of cell (alpha, beta), frequency-block-major: for each
    frequency offset, the n_s slow-time samples.

    Raises:
        SamplingError: If the data are not on the segmentation lattice
    """
    validate_index(alpha, seg.n_apertures, "alpha", one_based=True)
    validate_index(beta, seg.n_subbands, "beta", one_based=True)
    check_alignment(data, seg)
    block = data.values[np.ix_(seg.slow_indices(alpha), seg.freq_indices(beta))]
    return block.T.ravel()


def insert_subset(values: np.ndarray, vector: np.ndarray, seg: Segmentation, alpha: int, beta: int) -> np.ndarray:
    """Inverse of :func:`extract_subset`, writing into ``values`` in place."""
    block = np.asarray(vector).reshape(seg.n_omega, seg.n_s).T
    values[np.ix_(seg.slow_indices(alpha), seg.freq_indices(beta))] = block
    return values


# =============================================================================
# Regime Diagnostics
# =============================================================================

def _window_terms(grid: ImageGrid, seg: Segmentation, pulse: Pulse) -> dict[str, float]:
    """Maxima over the window of the rotation residuals."""
    dy = grid.offsets
    frame_1 = seg.frames[0]
    k = seg.band_wavenumbers
    a = seg.subaperture_m
    c = pulse.wave_speed

    rot_range = 0.0
    rot_cross = 0.0
    dop_t = 0.0
    dop_n = 0.0
    cross_1 = (a * k[0] / frame_1.range) * (dy @ (frame_1.projector @ frame_1.tangent))
    for frame in seg.frames:
        rot_range = max(rot_range, float(np.max(np.abs(dy @ (frame.range_vector - frame_1.range_vector)))))
        tp = dy @ (frame.projector @ frame.tangent)
        for k_beta in k:
            cross = (a * k_beta / frame.range) * tp
            rot_cross = max(rot_cross, float(np.max(np.abs(cross - cross_1))))
        dop_t = max(dop_t, float(np.max(np.abs(dy @ (frame.tangent - frame_1.tangent)))))
        dop_n = max(dop_n, float(np.max(np.abs(dy @ (frame.normal - frame_1.normal)))))

    b = seg.subband_hz
    return {
        "rot_range": (b / c) * rot_range,
        "rot_cross": rot_cross,
        "dop_t": dop_t,
        "dop_n": dop_n,
    }


def regime_report(
    traj: Trajectory,
    grid: ImageGrid,
    seg: Segmentation,
    pulse: Pulse,
    small_threshold: Optional[float] = None,
    warn_threshold: Optional[float] = None,
) -> RegimeReport:
    """
    Evaluate every regime diagnostic for the geometry and segmentation.

    "At least one" diagnostics use the smallest value over sub-apertures,
    "much less than one" diagnostics the largest. Band-dependent
    diagnostics are not applicable to single-frequency sub-bands.
    """
    small = settings.REGIME_SMALL_THRESHOLD if small_threshold is None else small_threshold
    warn = settings.REGIME_WARN_THRESHOLD if warn_threshold is None else warn_threshold

    c = pulse.wave_speed
    omega_o = pulse.carrier
    lam = pulse.wavelength
    a = seg.subaperture_m
    b = seg.subband_hz
    V = traj.speed
    Y = grid.extent_range
    Yc = grid.extent_cross

    ranges = np.array([frame.range for frame in seg.frames])
    curvature = min(frame.curvature_radius for frame in seg.frames)
    L_min, L_max = float(ranges.min()), float(ranges.max())
    terms = _window_terms(grid, seg, pulse)
    beta_v = V / c

    values: dict[str, Optional[float]] = {
        "fresnel_a": a**2 / (lam * L_max),
        "fresnel_Y": Yc**2 / (lam * L_max),
        "crossrange_window": a * Yc / (lam * L_max),
        "range_window": Y / (c / b),
        "m8": (b / omega_o) * Yc / (lam * L_min / a),
        "m8_hz": (b / pulse.carrier_hz) * Yc / (lam * L_min / a),
        "m10_range": a**2 * Y / (lam * L_min**2),
        "m10_cross": a**2 * Yc / (lam * L_min**2),
        "rot_range": terms["rot_range"],
        "rot_cross": terms["rot_cross"],
        "doppler_band": beta_v * (Yc / L_min) / (b / omega_o),
        "doppler_curv": beta_v * (a / curvature) * (Y / (c / b)),
        "doppler_rot_range": beta_v * (b / c) * terms["dop_t"],
        "doppler_rot_cross": beta_v * (a / (lam * curvature)) * terms["dop_n"],
        "startstop_travel": omega_o * (L_max / c) * beta_v,
        "startstop_pulse": (omega_o / pulse.bandwidth_hz) * beta_v,
    }

    diagnostics = {}
    for name, value in values.items():
        if requires_band(name) and not seg.has_band:
            value = None
        status = classify(name, value, small, warn)
        note = "marginal, constant-phase" if name == "startstop_travel" and status == STATUS_WARN else None
        diagnostics[name] = Diagnostic(
            name=name,
            value=None if value is None else float(value),
            status=status,
            description=REGIME_LIMITS[name]["description"],
            note=note,
        )

    report = RegimeReport(
        diagnostics=diagnostics,
        small_threshold=small,
        warn_threshold=warn,
        crossrange_resolution_m=lam * seg.frames[0].range / a,
        range_resolution_m=c / b if seg.has_band else None,
        wavelength_m=lam,
        range_m=seg.frames[0].range,
    )
    for name in report.warned:
        logger.warning("Regime diagnostic %s = %.4g outside the pass band", name, report.value(name))
    for name in report.failed:
        logger.error("Regime diagnostic %s = %.4g fails", name, report.value(name))
    return report
