"""
Analysis Service
================

Coherence diagnostics of subset model matrices, residual budgets of the
small-aperture expansion, and reconstruction scores.

Coherence predictions are products of un-normalized sincs, sin(x)/x. For
the discrete lattice the column pair (q, q') has

    x_range = n_omega h_omega m.(y_q' - y_q) / c
    x_cross = k_beta n_s V h_s t.P(y_q' - y_q) / L

and a row pair has the analogous products of the phase slopes with the
grid widths. A pair is flagged valid when the phase step between
neighbouring samples stays below pi, where the discrete sums behave
like the integrals behind the sinc form.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy import ndimage

from sarmmv.models.geometry import Trajectory
from sarmmv.models.mmv import MatrixKind, ModelMatrix, ReflectivityField
from sarmmv.models.scene import GroundTruth, ImageGrid
from sarmmv.models.segmentation import Segmentation
from sarmmv.schemas.reports import CoherenceReport, PairCoherence, ScoreReport
from sarmmv.services.forward_model import (
    assemble_reference,
    assemble_reference_doppler,
    assemble_subset,
    assemble_subset_doppler,
    check_matrix_kind,
    modulation,
    subset_amplitude,
)
from sarmmv.services.geometry import platform_position, platform_velocity
from sarmmv.services.scene import column_index
from sarmmv.services.solver import row_support
from sarmmv.utils.helpers import sinc
from sarmmv.utils.validators import validate_index, validate_shape

logger = logging.getLogger(__name__)

# Pairs within this many sinc null spacings are always tabulated
NEAR_CELLS = 5.0

# Largest half phase step between neighbouring samples for a valid prediction
VALID_PHASE_STEP = math.pi / 2

# Anchors whose neighbourhoods are tabulated
DEFAULT_ANCHORS = 8


# =============================================================================
# Coherence
# =============================================================================

def _normalized_gram(vectors: np.ndarray) -> np.ndarray:
    """|<v_i, v_j>| / (|v_i| |v_j|) for the columns of ``vectors``."""
    norms = np.linalg.norm(vectors, axis=0)
    unit = vectors / np.where(norms > 0, norms, 1.0)
    return np.abs(unit.conj().T @ unit)


def _pair_table(
    gram: np.ndarray,
    x_first: np.ndarray,
    x_second: np.ndarray,
    steps: np.ndarray,
    n_anchors: int,
    n_random: int,
    seed: int,
    centre: int,
) -> list[PairCoherence]:
    """
    Tabulate anchor neighbourhoods and a random sample of pairs.

    ``x_first``/``x_second`` hold the sinc arguments for every pair and
    ``steps`` the largest per-sample phase step.
    """
    n = gram.shape[0]
    rng = np.random.default_rng(seed)
    anchors = [centre] + [int(a) for a in rng.choice(n, size=min(n_anchors, n), replace=False) if a != centre]
    cells = np.maximum(np.abs(x_first), np.abs(x_second)) / math.pi

    chosen: set[tuple[int, int]] = set()
    for anchor in anchors[: n_anchors + 1]:
        near = np.flatnonzero(cells[anchor] <= NEAR_CELLS)
        chosen.update((anchor, int(j)) for j in near if j != anchor)
    if n > 1:
        for _ in range(n_random):
            i, j = rng.choice(n, size=2, replace=False)
            chosen.add((int(i), int(j)))

    table = []
    for i, j in sorted(chosen):
        predicted = float(abs(sinc(x_first[i, j]) * sinc(x_second[i, j])))
        numeric = float(gram[i, j])
        table.append(
            PairCoherence(
                first=i,
                second=j,
                numeric=numeric,
                predicted=predicted,
                abs_error=abs(numeric - predicted),
                valid=bool(steps[i, j] <= VALID_PHASE_STEP),
                separation_cells=float(cells[i, j]),
            )
        )
    return table


def _summarize(kind: str, gram: np.ndarray, table: list[PairCoherence], alpha=None, beta=None, adjacent=None) -> CoherenceReport:
    off = gram.copy()
    np.fill_diagonal(off, 0.0)
    valid = [p.abs_error for p in table if p.valid]
    report = CoherenceReport(
        kind=kind,
        alpha=alpha,
        beta=beta,
        max_offdiag_numeric=float(off.max(initial=0.0)),
        max_abs_error=max((p.abs_error for p in table), default=0.0),
        max_abs_error_valid=max(valid, default=0.0),
        n_pairs=len(table),
        n_valid=len(valid),
        adjacent_coherence=adjacent,
        pairs=table,
    )
    invalid = report.n_pairs - report.n_valid
    if invalid:
        logger.warning(
            "%s coherence: %d of %d pairs violate the fine-sampling condition",
            kind,
            invalid,
            report.n_pairs,
        )
    return report


def column_coherence(
    A: ModelMatrix,
    grid: ImageGrid,
    seg: Segmentation,
    alpha: int,
    beta: int,
    n_anchors: int = DEFAULT_ANCHORS,
    n_random: int = 200,
    seed: int = 0,
) -> CoherenceReport:
    """Normalised column inner products of a subset matrix vs sinc predictions."""
    check_matrix_kind(A, MatrixKind.SUBSET, MatrixKind.SUBSET_DOPPLER, MatrixKind.EXACT)
    validate_index(alpha, seg.n_apertures, "alpha", one_based=True)
    validate_index(beta, seg.n_subbands, "beta", one_based=True)
    gram = _normalized_gram(A.values)

    frame = seg.frame(alpha)
    dy = grid.offsets
    c = seg.wave_speed
    k_beta = seg.band_wavenumbers[beta - 1]
    range_proj = dy @ frame.range_vector
    cross_proj = dy @ (frame.projector @ frame.tangent)
    d_range = range_proj[None, :] - range_proj[:, None]
    d_cross = cross_proj[None, :] - cross_proj[:, None]

    freq_slope = seg.freq_step / c if seg.n_omega > 1 else 0.0
    slow_slope = k_beta * seg.speed * seg.slow_step / frame.range
    x_range = seg.n_omega * freq_slope * d_range
    x_cross = seg.n_s * slow_slope * d_cross
    steps = np.maximum(np.abs(freq_slope * d_range), np.abs(slow_slope * d_cross))

    table = _pair_table(gram, x_range, x_cross, steps, n_anchors, n_random, seed, grid.size // 2)

    # Nearest neighbours on the grid
    i_r, i_c = grid.unravel(grid.size // 2)
    neighbours = []
    if i_c + 1 < grid.n_cross:
        neighbours.append(grid.index(i_r, i_c + 1))
    if i_r + 1 < grid.n_range:
        neighbours.append(grid.index(i_r + 1, i_c))
    adjacent = max((float(gram[grid.size // 2, q]) for q in neighbours), default=None)

    report = _summarize("column", gram, table, alpha, beta, adjacent)
    logger.info(
        "Column coherence (%d, %d): max off-diagonal %.3f, max sinc error %.3f on %d valid pairs",
        alpha,
        beta,
        report.max_offdiag_numeric,
        report.max_abs_error_valid,
        report.n_valid,
    )
    return report


def row_coherence(
    A: ModelMatrix,
    grid: ImageGrid,
    seg: Segmentation,
    alpha: int = 1,
    beta: int = 1,
    n_anchors: int = DEFAULT_ANCHORS,
    n_random: int = 200,
    seed: int = 0,
) -> CoherenceReport:
    """Normalised row inner products of a subset matrix vs sinc predictions."""
    check_matrix_kind(A, MatrixKind.SUBSET, MatrixKind.SUBSET_DOPPLER, MatrixKind.EXACT)
    gram = _normalized_gram(A.values.T)

    frame = seg.frame(alpha)
    c = seg.wave_speed
    k_beta = seg.band_wavenumbers[beta - 1]
    dk = np.repeat(seg.offset_wavenumbers, seg.n_s)
    ds = np.tile(seg.slow_offsets, seg.n_omega)
    velocity_term = k_beta * seg.speed / frame.range

    # Phase slope of row differences along the grid axes
    def slopes(axis: np.ndarray) -> np.ndarray:
        m_a = float(frame.range_vector @ axis)
        t_a = float(frame.tangent @ frame.projector @ axis)
        per_row = dk * m_a + velocity_term * ds * t_a
        return per_row[None, :] - per_row[:, None]

    slope_r = slopes(grid.range_axis)
    slope_c = slopes(grid.cross_axis)
    x_range = grid.n_range * grid.step_range * slope_r
    x_cross = grid.n_cross * grid.step_cross * slope_c
    steps = np.maximum(np.abs(slope_r * grid.step_range), np.abs(slope_c * grid.step_cross))

    centre = (seg.n_omega // 2) * seg.n_s + seg.n_s // 2
    table = _pair_table(gram, x_range, x_cross, steps, n_anchors, n_random, seed, centre)
    report = _summarize("row", gram, table, alpha, beta)
    logger.info(
        "Row coherence: max off-diagonal %.3f, max sinc error %.3f",
        report.max_offdiag_numeric,
        report.max_abs_error_valid,
    )
    return report


# =============================================================================
# Residual Budgets
# =============================================================================

def _cubic_remainder(diff_o: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """|r - y| - rho + m.dy - dy.P dy / (2 rho), per (sample, pixel)."""
    rho = np.linalg.norm(diff_o, axis=-1)
    m = diff_o / rho[:, None]
    exact = np.linalg.norm(diff_o[:, None, :] - dy[None, :, :], axis=-1) - rho[:, None]
    m_dy = m @ dy.T
    dy_sq = np.sum(dy * dy, axis=1)
    quad = (dy_sq[None, :] - m_dy**2) / (2.0 * rho[:, None])
    return exact + m_dy - quad


def phase_residual_budget(
    traj: Trajectory,
    grid: ImageGrid,
    seg: Segmentation,
    alpha: int,
    beta: int,
    doppler: bool = False,
) -> dict[str, float]:
    """
    Per-term maxima of the exact-minus-subset phase, and their sum.

    The exact phase 2K(|r(s) - y| - |r(s) - y_o|), K = k_beta + dk, minus
    the subset phase splits exactly into

        travel_cubic        2K times the cubic remainder of |r - y|
        aperture_curvature  -2 k_beta (m(s) - m_alpha - ds m'_alpha).dy
        band_rotation       -2 dk (m(s) - m_alpha).dy
        quadratic_drift     k_beta (dy.P(s) dy / rho(s) - dy.P dy / L)
        quadratic_band      dk dy.P(s) dy / rho(s)

    plus, for the Doppler model, the remainder of the Doppler phase
    beyond its linearization. ``total`` bounds the phase discrepancy.
    """
    validate_index(alpha, seg.n_apertures, "alpha", one_based=True)
    validate_index(beta, seg.n_subbands, "beta", one_based=True)
    frame = seg.frame(alpha)
    dy = grid.offsets
    c = seg.wave_speed
    k_beta = seg.band_wavenumbers[beta - 1]
    dk = seg.offset_wavenumbers

    s = seg.slow_times[seg.slow_indices(alpha)]
    ds = s - frame.center_time
    diff_o = platform_position(traj, s) - seg.reference_point
    rho = np.linalg.norm(diff_o, axis=1)
    m = diff_o / rho[:, None]
    m_rate = frame.projector @ frame.velocity / frame.range

    m_dy = m @ dy.T
    linear = m_dy - (dy @ frame.range_vector)[None, :]
    curvature = linear - ds[:, None] * (dy @ m_rate)[None, :]
    dy_sq = np.sum(dy * dy, axis=1)
    quad_s = (dy_sq[None, :] - m_dy**2) / rho[:, None]
    quad_a = (dy_sq - (dy @ frame.range_vector) ** 2) / frame.range
    cubic = _cubic_remainder(diff_o, dy)
    K_max = k_beta + np.max(np.abs(dk))
    dk_max = float(np.max(np.abs(dk)))

    terms = {
        "travel_cubic": 2.0 * K_max * float(np.max(np.abs(cubic))),
        "aperture_curvature": 2.0 * k_beta * float(np.max(np.abs(curvature))),
        "band_rotation": 2.0 * dk_max * float(np.max(np.abs(linear))),
        "quadratic_drift": k_beta * float(np.max(np.abs(quad_s - quad_a[None, :]))),
        "quadratic_band": dk_max * float(np.max(np.abs(quad_s))),
    }

    if doppler:
        velocity = platform_velocity(traj, s)
        diff = diff_o[:, None, :] - dy[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        gamma = np.einsum("ji,jqi->jq", velocity, diff) / (dist * c)
        gamma_o = np.sum(velocity * diff_o, axis=1) / (rho * c)
        exact = gamma * dist / c - (gamma_o * rho / c)[:, None]
        ratio = seg.speed / c
        curv = frame.range / frame.curvature_radius
        model = -(ratio / c) * (
            (dy @ frame.tangent)[None, :]
            - curv * (seg.speed * ds / frame.range)[:, None] * (dy @ frame.normal)[None, :]
        )
        # Doppler model uses k_beta in the curvature term and K in the range term
        terms["doppler_linearization"] = 2.0 * c * K_max * float(np.max(np.abs(exact - model))) + 2.0 * dk_max * ratio * float(
            np.max(np.abs(curv * (seg.speed * ds / frame.range)[:, None] * (dy @ frame.normal)[None, :]))
        )

    terms["total"] = float(sum(terms.values()))
    return terms


def factorization_budget(
    traj: Trajectory,
    grid: ImageGrid,
    seg: Segmentation,
    alpha: int,
    beta: int,
    doppler: bool = False,
) -> float:
    """
    Largest phase difference between the subset matrix and the modulated
    reference matrix; the entry-wise mismatch for reflectivity rho is at
    most amplitude * ||rho||_1 times this value.
    """
    if doppler:
        sub = assemble_subset_doppler(traj, grid, seg, alpha, beta)
        ref = assemble_reference_doppler(traj, grid, seg)
    else:
        sub = assemble_subset(traj, grid, seg, alpha, beta)
        ref = assemble_reference(traj, grid, seg)
    mod = modulation(grid, seg, doppler)[:, column_index(alpha, beta, seg.n_subbands)]
    ratio = (sub.values / subset_amplitude(seg, alpha)) * np.conj(ref.values * mod[None, :])
    return float(np.max(np.abs(np.angle(ratio))))


# =============================================================================
# Scores
# =============================================================================

def _local_peaks(grid: ImageGrid, magnitude: np.ndarray, count: int) -> list[int]:
    """Indices of the ``count`` largest local maxima of an image."""
    image = magnitude.reshape(grid.shape)
    filtered = ndimage.maximum_filter(image, size=3, mode="constant", cval=-np.inf)
    peaks = np.flatnonzero((image == filtered).ravel() & (magnitude > 0))
    order = np.argsort(-magnitude[peaks], kind="stable")
    return [int(q) for q in peaks[order][:count]]


def score(
    estimate: ReflectivityField,
    truth: GroundTruth,
    support_threshold: float = 0.1,
    migration: Optional[np.ndarray] = None,
) -> ScoreReport:
    """
    Compare a reconstruction with the ground truth.

    Raises:
        ValidationError: If the shapes differ
    """
    est = estimate.values
    true = truth.values
    validate_shape(est, true.shape, "estimate", message=f"Estimate shape {est.shape} != truth shape {true.shape}")
    n_a = estimate.segmentation.n_apertures
    n_b = estimate.segmentation.n_subbands

    true_support = [int(q) for q in truth.support]
    est_support = [int(q) for q in row_support(est, support_threshold)]
    hits = len(set(true_support) & set(est_support))
    precision = hits / len(est_support) if est_support else 1.0
    recall = hits / len(true_support) if true_support else 1.0

    true_norm = np.linalg.norm(true)
    diff = est[true_support] - true[true_support]
    relative = float(np.linalg.norm(diff) / true_norm) if true_norm > 0 else float(np.linalg.norm(est) > 0)

    max_entry = 0.0
    direction_rmse: dict[int, float] = {}
    frequency_rmse: dict[int, float] = {}
    for q in true_support:
        peak = np.abs(true[q]).max()
        max_entry = max(max_entry, float(np.abs(est[q] - true[q]).max() / peak))
        mag_est = np.abs(est[q]).reshape(n_a, n_b)
        mag_true = np.abs(true[q]).reshape(n_a, n_b)
        direction_rmse[q] = float(np.sqrt(np.mean((mag_est.mean(axis=1) - mag_true.mean(axis=1)) ** 2)))
        frequency_rmse[q] = float(np.sqrt(np.mean((mag_est.mean(axis=0) - mag_true.mean(axis=0)) ** 2)))

    hit_rate = None
    peaks: list[int] = []
    if migration is not None:
        peaks = _local_peaks(estimate.grid, np.abs(migration), len(true_support))
        hit_rate = len(set(peaks) & set(true_support)) / len(true_support) if true_support else 1.0

    return ScoreReport(
        precision=precision,
        recall=recall,
        support_true=true_support,
        support_est=est_support,
        relative_error=relative,
        max_entry_error=max_entry,
        direction_rmse=direction_rmse,
        frequency_rmse=frequency_rmse,
        migration_hit_rate=hit_rate,
        migration_peaks=peaks,
    )
