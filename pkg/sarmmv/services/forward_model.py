"""
Forward Models
==============

Reflectivity-to-data matrices and the MMV reduction.

    exact               k_l^2 |f|^2 / (4 pi |r_j - y_q|)^2 exp(2 i w_l (tau - tau_o))
    subset              separable small-aperture, narrow-band approximation of
                        the exact map restricted to one cell
    reference           unit-modulus matrix of the first cell's frame, shared
                        by every column of the MMV problem
    *_doppler           the same with first-order Doppler phases

Rows of the subset-type matrices are frequency-block-major (row
l * n_s + j) and columns follow the grid index. The subset matrix of
cell (alpha, beta) factors as amplitude * reference @ diag(modulation)
up to the rotation residuals reported by the regime check; ``modulate``
and ``demodulate`` apply that diagonal.

Every reference offset dy = y_q - y_o is measured from the window centre,
so the pixel at the reference point has zero phase in every matrix.
"""

import logging
import math
from typing import Optional

import numpy as np

from sarmmv.core.errors import ErrorCodes, GeometryError, SamplingError, ValidationError
from sarmmv.models.data import DataCube
from sarmmv.models.geometry import SubapertureFrame, Trajectory
from sarmmv.models.mmv import MatrixKind, MMVProblem, ModelMatrix, ReflectivityField
from sarmmv.models.scene import ImageGrid
from sarmmv.models.segmentation import Segmentation
from sarmmv.models.waveform import Pulse
from sarmmv.services.geometry import distances
from sarmmv.services.scene import column_index
from sarmmv.services.segmentation import check_alignment, extract_subset
from sarmmv.services.waveform import spectrum
from sarmmv.utils.validators import validate_index, validate_shape

logger = logging.getLogger(__name__)


# =============================================================================
# Exact Matrix
# =============================================================================

def assemble_exact(
    traj: Trajectory,
    grid: ImageGrid,
    pulse: Pulse,
    slow_times: np.ndarray,
    omegas: np.ndarray,
) -> ModelMatrix:
    """
    Exact start-stop matrix on the lattice ``slow_times`` x ``omegas``.

    Rows are frequency-block-major: row l * len(slow_times) + j.

    Raises:
        GeometryError: If a grid point coincides with a platform position
    """
    slow_times = np.atleast_1d(np.asarray(slow_times, dtype=float))
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    dist = distances(traj, slow_times, grid.points)
    if np.any(dist == 0.0):
        raise GeometryError(message="Grid point coincides with the platform position")
    dist_o = distances(traj, slow_times, grid.center[None, :])

    c = pulse.wave_speed
    weight = (omegas / c) ** 2 * spectrum(pulse, omegas) ** 2
    delay = (dist - dist_o) / c
    values = (
        weight[:, None, None]
        * np.exp(2j * omegas[:, None, None] * delay[None, :, :])
        / ((4.0 * math.pi * dist) ** 2)[None, :, :]
    )
    return ModelMatrix(MatrixKind.EXACT, values=values.reshape(-1, grid.size))


def assemble_exact_subset(
    traj: Trajectory,
    grid: ImageGrid,
    pulse: Pulse,
    seg: Segmentation,
    alpha: int,
    beta: int,
) -> ModelMatrix:
    """Exact matrix restricted to the samples of cell (alpha, beta)."""
    validate_index(alpha, seg.n_apertures, "alpha", one_based=True)
    validate_index(beta, seg.n_subbands, "beta", one_based=True)
    return assemble_exact(
        traj,
        grid,
        pulse,
        seg.slow_times[seg.slow_indices(alpha)],
        seg.frequencies[seg.freq_indices(beta)],
    )


# =============================================================================
# Separable Matrices
# =============================================================================

def _speed_ratio(seg: Segmentation, doppler: bool, doppler_speed: Optional[float]) -> float:
    if not doppler:
        return 0.0
    speed = seg.speed if doppler_speed is None else doppler_speed
    return speed / seg.wave_speed


def _cross_phase(frame: SubapertureFrame, dy: np.ndarray, speed_ratio: float) -> np.ndarray:
    """t . P dy - (L/R)(V/c) n . dy for every pixel."""
    cross = dy @ (frame.projector @ frame.tangent)
    curvature = frame.range / frame.curvature_radius
    return cross - curvature * speed_ratio * (dy @ frame.normal)


def _range_projection(frame: SubapertureFrame, dy: np.ndarray, speed_ratio: float) -> np.ndarray:
    """(m + (V/c) t) . dy for every pixel."""
    return dy @ frame.range_vector + speed_ratio * (dy @ frame.tangent)


def _quadratic(frame: SubapertureFrame, dy: np.ndarray) -> np.ndarray:
    """dy . P dy / L for every pixel."""
    return np.einsum("qi,ij,qj->q", dy, frame.projector, dy) / frame.range


def subset_amplitude(seg: Segmentation, alpha: int) -> float:
    """k_o^2 |f(omega_o)|^2 / (4 pi L_alpha)^2."""
    pulse = seg.pulse
    k_o = pulse.central_wavenumber
    return (k_o * pulse.spectrum_level) ** 2 / (4.0 * math.pi * seg.frame(alpha).range) ** 2


def _check_trajectory(traj: Trajectory, seg: Segmentation) -> None:
    """The segmentation must have been cut from this trajectory's slow-time lattice."""
    if (
        not math.isclose(traj.slow_time_step, seg.slow_step)
        or not math.isclose(traj.speed, seg.speed, abs_tol=1e-12)
        or seg.n_apertures * seg.n_s > traj.n_slow
    ):
        raise SamplingError(
            message=(
                f"Segmentation (V = {seg.speed:g} m/s, h_s = {seg.slow_step:g} s) does not belong to "
                f"the trajectory (V = {traj.speed:g} m/s, h_s = {traj.slow_time_step:g} s, {traj.n_slow} samples)"
            ),
            code=ErrorCodes.SEG_MISALIGNED,
        )


def _assemble_subset(
    traj: Trajectory,
    grid: ImageGrid,
    seg: Segmentation,
    alpha: int,
    beta: int,
    doppler: bool,
    doppler_speed: Optional[float],
) -> ModelMatrix:
    _check_trajectory(traj, seg)
    validate_index(alpha, seg.n_apertures, "alpha", one_based=True)
    validate_index(beta, seg.n_subbands, "beta", one_based=True)
    frame = seg.frame(alpha)
    dy = grid.offsets
    k_beta = seg.band_wavenumbers[beta - 1]
    dk = seg.offset_wavenumbers
    ratio = _speed_ratio(seg, doppler, doppler_speed)

    range_part = _range_projection(frame, dy, ratio)
    freq_factor = np.exp(
        -2j * (k_beta + dk)[:, None] * range_part[None, :]
        + 1j * k_beta * _quadratic(frame, dy)[None, :]
    )
    slow_factor = np.exp(
        -2j * k_beta * (seg.speed * seg.slow_offsets / frame.range)[:, None]
        * _cross_phase(frame, dy, ratio)[None, :]
    )
    kind = MatrixKind.SUBSET_DOPPLER if doppler else MatrixKind.SUBSET
    return ModelMatrix(kind, freq_factor=freq_factor, slow_factor=slow_factor, amplitude=subset_amplitude(seg, alpha))


def _assemble_reference(
    traj: Trajectory,
    grid: ImageGrid,
    seg: Segmentation,
    doppler: bool,
    doppler_speed: Optional[float],
) -> ModelMatrix:
    _check_trajectory(traj, seg)
    frame = seg.frame(1)
    dy = grid.offsets
    k_1 = seg.band_wavenumbers[0]
    dk = seg.offset_wavenumbers
    ratio = _speed_ratio(seg, doppler, doppler_speed)

    freq_factor = np.exp(-2j * dk[:, None] * _range_projection(frame, dy, ratio)[None, :])
    slow_factor = np.exp(
        -2j * k_1 * (seg.speed * seg.slow_offsets / frame.range)[:, None]
        * _cross_phase(frame, dy, ratio)[None, :]
    )
    kind = MatrixKind.REFERENCE_DOPPLER if doppler else MatrixKind.REFERENCE
    return ModelMatrix(kind, freq_factor=freq_factor, slow_factor=slow_factor, amplitude=1.0)


def assemble_subset(traj: Trajectory, grid: ImageGrid, seg: Segmentation, alpha: int, beta: int) -> ModelMatrix:
    """
    Small-aperture approximation for cell (alpha, beta): phase
    -2(k_beta + dk_l) m.dy - 2 k_beta (V ds_j / L) t.P dy + k_beta dy.P dy / L
    and constant amplitude k_o^2 |f|^2 / (4 pi L)^2.
    """
    return _assemble_subset(traj, grid, seg, alpha, beta, doppler=False, doppler_speed=None)


def assemble_subset_doppler(
    traj: Trajectory,
    grid: ImageGrid,
    seg: Segmentation,
    alpha: int,
    beta: int,
    doppler_speed: Optional[float] = None,
) -> ModelMatrix:
    """Subset matrix with the Doppler range shift and curvature term."""
    return _assemble_subset(traj, grid, seg, alpha, beta, doppler=True, doppler_speed=doppler_speed)


def assemble_reference(traj: Trajectory, grid: ImageGrid, seg: Segmentation) -> ModelMatrix:
    """Unit-modulus MMV matrix built on the first cell's frame."""
    return _assemble_reference(traj, grid, seg, doppler=False, doppler_speed=None)


def assemble_reference_doppler(
    traj: Trajectory,
    grid: ImageGrid,
    seg: Segmentation,
    doppler_speed: Optional[float] = None,
) -> ModelMatrix:
    """Reference matrix with first-order Doppler phases."""
    return _assemble_reference(traj, grid, seg, doppler=True, doppler_speed=doppler_speed)


# =============================================================================
# Modulation
# =============================================================================

def modulation(
    grid: ImageGrid,
    seg: Segmentation,
    doppler: bool = False,
    doppler_speed: Optional[float] = None,
) -> np.ndarray:
    """
    Q x (N_alpha N_beta) phases relating rho to the MMV unknown:
    X = rho * exp(-2 i k_beta (m_alpha + (V/c) t_alpha).dy + i k_beta dy.P dy / L).
    """
    dy = grid.offsets
    ratio = _speed_ratio(seg, doppler, doppler_speed)
    phases = np.empty((grid.size, seg.n_columns), dtype=complex)
    for alpha in range(1, seg.n_apertures + 1):
        frame = seg.frame(alpha)
        range_part = _range_projection(frame, dy, ratio)
        quadratic = _quadratic(frame, dy)
        for beta in range(1, seg.n_subbands + 1):
            k_beta = seg.band_wavenumbers[beta - 1]
            col = column_index(alpha, beta, seg.n_subbands)
            phases[:, col] = np.exp(-2j * k_beta * range_part + 1j * k_beta * quadratic)
    return phases


def modulate(rho: np.ndarray, grid: ImageGrid, seg: Segmentation, doppler: bool = False, doppler_speed: Optional[float] = None) -> np.ndarray:
    """Map reflectivities to the MMV unknown X."""
    validate_shape(rho, (grid.size, seg.n_columns), "rho")
    return rho * modulation(grid, seg, doppler, doppler_speed)


def demodulate(
    X: np.ndarray,
    seg: Segmentation,
    grid: ImageGrid,
    doppler: bool = False,
    doppler_speed: Optional[float] = None,
) -> ReflectivityField:
    """
    Recover rho from the MMV unknown.

    Raises:
        ValidationError: If X is not Q x (N_alpha N_beta)
    """
    validate_shape(X, (grid.size, seg.n_columns), "X")
    values = X * np.conj(modulation(grid, seg, doppler, doppler_speed))
    return ReflectivityField(values=values, grid=grid, segmentation=seg)


# =============================================================================
# MMV Reduction
# =============================================================================

def build_mmv(
    data: DataCube,
    traj: Trajectory,
    grid: ImageGrid,
    seg: Segmentation,
    doppler: bool = False,
) -> MMVProblem:
    """
    Normalised data matrix D and reference matrix for A X = D.

    Column (alpha, beta) of D is the extracted cell vector scaled by
    (4 pi L_alpha)^2 / (k_o^2 |f(omega_o)|^2).

    Raises:
        SamplingError: If the data are not on the segmentation lattice
    """
    check_alignment(data, seg)
    D = np.empty((seg.n_rows, seg.n_columns), dtype=complex)
    normalization = np.empty(seg.n_columns)
    for alpha in range(1, seg.n_apertures + 1):
        scale = 1.0 / subset_amplitude(seg, alpha)
        for beta in range(1, seg.n_subbands + 1):
            col = column_index(alpha, beta, seg.n_subbands)
            D[:, col] = scale * extract_subset(data, seg, alpha, beta)
            normalization[col] = scale

    matrix = assemble_reference_doppler(traj, grid, seg) if doppler else assemble_reference(traj, grid, seg)
    logger.info(
        "MMV problem: %d x %d matrix, %d columns (%s)",
        matrix.shape[0],
        matrix.shape[1],
        seg.n_columns,
        matrix.kind.value,
    )
    return MMVProblem(
        matrix=matrix,
        data=D,
        normalization=normalization,
        grid=grid,
        segmentation=seg,
        doppler=doppler,
        noise_level=data.noise_level,
    )


def consistent_data(problem: MMVProblem, rho: np.ndarray) -> np.ndarray:
    """D = A modulate(rho): data that the reference model explains exactly."""
    X = modulate(rho, problem.grid, problem.segmentation, problem.doppler)
    return problem.matrix.apply(X)


def check_matrix_kind(matrix: ModelMatrix, *kinds: MatrixKind) -> None:
    if matrix.kind not in kinds:
        raise ValidationError(
            message=f"Expected a {'/'.join(k.value for k in kinds)} matrix, got {matrix.kind.value}",
            field="matrix",
            code=ErrorCodes.SOLVER_SHAPE_MISMATCH,
        )
