"""
Forward Model Tests
===================

Exact, subset and reference matrices, modulation and the MMV reduction.
"""

import dataclasses

import numpy as np
import pytest

from sarmmv.core.errors import ErrorCodes, SamplingError, ValidationError
from sarmmv.models.data import DataCube
from sarmmv.models.mmv import MatrixKind
from sarmmv.services.analysis import factorization_budget, phase_residual_budget
from sarmmv.services.forward_model import (
    assemble_exact,
    assemble_exact_subset,
    assemble_reference,
    assemble_reference_doppler,
    assemble_subset,
    assemble_subset_doppler,
    build_mmv,
    check_matrix_kind,
    consistent_data,
    demodulate,
    modulate,
    subset_amplitude,
)
from sarmmv.services.simulator import simulate


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _random_rho(rng, grid, seg, support=(2, 7, 11)) -> np.ndarray:
    rho = np.zeros((grid.size, seg.n_columns), dtype=complex)
    rho[list(support)] = rng.standard_normal((len(support), seg.n_columns)) + 1j * rng.standard_normal(
        (len(support), seg.n_columns)
    )
    return rho


class TestExactMatrix:
    """Start-stop matrix on the sample lattice."""

    def test_shape_and_row_order(self, small_setup):
        s = small_setup
        seg = s.segmentation
        A = assemble_exact(s.trajectory, s.grid, s.pulse, seg.slow_times[:3], seg.frequencies[:2])
        assert A.kind == MatrixKind.EXACT
        assert A.shape == (6, s.grid.size)
        single = assemble_exact(s.trajectory, s.grid, s.pulse, seg.slow_times[2], seg.frequencies[1])
        assert np.allclose(A.values[1 * 3 + 2], single.values[0])

    def test_reference_pixel_has_zero_phase(self, small_setup):
        s = small_setup
        A = assemble_exact_subset(s.trajectory, s.grid, s.pulse, s.segmentation, 2, 1)
        centre = A.values[:, s.grid.size // 2]
        assert np.allclose(centre.imag, 0.0, atol=1e-12 * np.abs(centre).max())
        assert np.all(centre.real > 0)

    def test_matches_simulated_data(self, point_setup):
        s = point_setup
        seg = s.segmentation
        data = simulate(s.scene, s.grid, s.trajectory, s.pulse, seg)
        A = assemble_exact(s.trajectory, s.grid, s.pulse, seg.slow_times, seg.frequencies)
        rho = np.zeros(s.grid.size)
        rho[s.grid.size // 2] = 1.0
        assert np.allclose(A.apply(rho), data.values.T.ravel(), rtol=1e-9)


class TestSubsetMatrix:
    """Small-aperture, narrow-band approximation."""

    def test_phase_error_within_budget(self, banded_setup):
        s = banded_setup
        for alpha, beta in ((1, 1), (2, 2)):
            exact = assemble_exact_subset(s.trajectory, s.grid, s.pulse, s.segmentation, alpha, beta)
            subset = assemble_subset(s.trajectory, s.grid, s.segmentation, alpha, beta)
            mismatch = np.abs(np.angle(exact.values * np.conj(subset.values))).max()
            budget = phase_residual_budget(s.trajectory, s.grid, s.segmentation, alpha, beta)
            assert mismatch <= budget["total"] + 1e-6
            assert budget["total"] < 0.1

    def test_amplitude_close_to_exact(self, small_setup):
        s = small_setup
        exact = assemble_exact_subset(s.trajectory, s.grid, s.pulse, s.segmentation, 1, 1)
        subset = assemble_subset(s.trajectory, s.grid, s.segmentation, 1, 1)
        assert np.allclose(np.abs(subset.values), subset_amplitude(s.segmentation, 1))
        assert np.allclose(np.abs(exact.values), np.abs(subset.values), rtol=1e-2, atol=0)

    def test_separable_operator_matches_dense(self, banded_setup, rng):
        s = banded_setup
        A = assemble_subset(s.trajectory, s.grid, s.segmentation, 2, 1)
        X = rng.standard_normal((s.grid.size, 3)) + 1j * rng.standard_normal((s.grid.size, 3))
        Y = rng.standard_normal((A.shape[0], 3)) + 1j * rng.standard_normal((A.shape[0], 3))
        op = A.as_linear_operator(matrix_free=True)
        assert np.allclose(op.matmat(X), A.values @ X)
        assert np.allclose(op.rmatmat(Y), A.values.conj().T @ Y)
        assert np.allclose(op.matvec(X[:, 0]), A.values @ X[:, 0])

    def test_cell_index_checked(self, small_setup):
        s = small_setup
        with pytest.raises(ValidationError):
            assemble_subset(s.trajectory, s.grid, s.segmentation, 3, 1)

    @pytest.mark.parametrize(
        "changes",
        [{"speed": 35.0}, {"slow_time_step": 0.03}, {"n_slow": 41}],
    )
    def test_foreign_trajectory_rejected(self, small_setup, changes):
        s = small_setup
        other = dataclasses.replace(s.trajectory, **changes)
        with pytest.raises(SamplingError) as info:
            assemble_subset(other, s.grid, s.segmentation, 1, 1)
        assert info.value.code == ErrorCodes.SEG_MISALIGNED
        with pytest.raises(SamplingError):
            assemble_reference_doppler(other, s.grid, s.segmentation)


class TestReferenceFactorization:
    """Subset matrices factor through the shared reference matrix."""

    def test_first_cell_factors_exactly(self, banded_setup):
        s = banded_setup
        assert factorization_budget(s.trajectory, s.grid, s.segmentation, 1, 1) < 1e-9

    def test_other_cells_factor_approximately(self, banded_setup):
        s = banded_setup
        for alpha, beta in ((2, 1), (1, 2), (2, 2)):
            assert factorization_budget(s.trajectory, s.grid, s.segmentation, alpha, beta) < 0.05

    def test_reference_is_unit_modulus(self, banded_setup):
        s = banded_setup
        ref = assemble_reference(s.trajectory, s.grid, s.segmentation)
        assert ref.kind == MatrixKind.REFERENCE
        assert np.allclose(np.abs(ref.values), 1.0)

    def test_doppler_at_zero_speed_is_start_stop(self, banded_setup):
        s = banded_setup
        still = assemble_reference_doppler(s.trajectory, s.grid, s.segmentation, doppler_speed=0.0)
        assert np.allclose(still.values, assemble_reference(s.trajectory, s.grid, s.segmentation).values)
        sub = assemble_subset_doppler(s.trajectory, s.grid, s.segmentation, 2, 2, doppler_speed=0.0)
        assert np.allclose(sub.values, assemble_subset(s.trajectory, s.grid, s.segmentation, 2, 2).values)

    def test_doppler_kinds(self, banded_setup):
        s = banded_setup
        assert assemble_reference_doppler(s.trajectory, s.grid, s.segmentation).kind == MatrixKind.REFERENCE_DOPPLER
        assert assemble_subset_doppler(s.trajectory, s.grid, s.segmentation, 1, 1).kind == MatrixKind.SUBSET_DOPPLER


class TestModulation:
    """rho <-> X."""

    def test_demodulate_inverts_modulate(self, banded_setup, rng):
        s = banded_setup
        rho = _random_rho(rng, s.grid, s.segmentation)
        field = demodulate(modulate(rho, s.grid, s.segmentation), s.segmentation, s.grid)
        assert np.allclose(field.values, rho)

    def test_reference_pixel_is_unmodulated(self, banded_setup):
        s = banded_setup
        rho = np.zeros((s.grid.size, s.segmentation.n_columns), dtype=complex)
        rho[s.grid.size // 2] = 2.0
        assert np.allclose(modulate(rho, s.grid, s.segmentation), rho)

    def test_wrong_shape(self, banded_setup):
        s = banded_setup
        with pytest.raises(ValidationError) as info:
            demodulate(np.zeros((s.grid.size, 1)), s.segmentation, s.grid)
        assert info.value.code == ErrorCodes.SOLVER_SHAPE_MISMATCH


class TestBuildMMV:
    """Normalised data matrix and reference model."""

    def test_reference_point_data_normalise_to_one(self, point_setup):
        s = point_setup
        data = simulate(s.scene, s.grid, s.trajectory, s.pulse, s.segmentation)
        problem = build_mmv(data, s.trajectory, s.grid, s.segmentation)
        assert problem.data.shape == (s.segmentation.n_rows, s.segmentation.n_columns)
        assert np.allclose(problem.data, 1.0, atol=1e-2)

    def test_consistent_data_is_explained_exactly(self, banded_setup, rng):
        s = banded_setup
        seg = s.segmentation
        empty = DataCube(
            values=np.zeros((len(seg.slow_times), len(seg.frequencies)), dtype=complex),
            slow_times=seg.slow_times,
            frequencies=seg.frequencies,
        )
        problem = build_mmv(empty, s.trajectory, s.grid, seg)
        rho = _random_rho(rng, s.grid, seg)
        D = consistent_data(problem, rho)
        assert D.shape == (seg.n_rows, seg.n_columns)
        # The first cell's subset matrix is the reference matrix up to modulation
        sub = assemble_subset(s.trajectory, s.grid, seg, 1, 1)
        assert np.allclose(sub.values @ rho[:, 0] / subset_amplitude(seg, 1), D[:, 0])

    def test_doppler_flag_selects_matrix(self, point_setup):
        s = point_setup
        data = simulate(s.scene, s.grid, s.trajectory, s.pulse, s.segmentation)
        problem = build_mmv(data, s.trajectory, s.grid, s.segmentation, doppler=True)
        assert problem.matrix.kind == MatrixKind.REFERENCE_DOPPLER
        assert problem.doppler

    def test_misaligned_data(self, point_setup):
        s = point_setup
        data = simulate(s.scene, s.grid, s.trajectory, s.pulse, s.segmentation)
        shifted = DataCube(values=data.values, slow_times=data.slow_times + 1e-3, frequencies=data.frequencies)
        with pytest.raises(SamplingError):
            build_mmv(shifted, s.trajectory, s.grid, s.segmentation)

    def test_check_matrix_kind(self, small_setup):
        s = small_setup
        ref = assemble_reference(s.trajectory, s.grid, s.segmentation)
        check_matrix_kind(ref, MatrixKind.REFERENCE)
        with pytest.raises(ValidationError):
            check_matrix_kind(ref, MatrixKind.SUBSET)
