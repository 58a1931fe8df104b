"""
Scene Tests
===========

Grids, profiles, scenes and the ground-truth matrix.
"""

import logging

import numpy as np
import pytest

from sarmmv.core.errors import ErrorCodes, ValidationError
from sarmmv.models.scene import Profile, ProfileKind, Scatterer
from sarmmv.schemas.experiment import SceneConfig
from sarmmv.services.scene import (
    cell_values,
    column_index,
    column_pair,
    evaluate_profile,
    ground_truth_matrix,
    make_grid,
    make_scene,
    nearest_index,
    sample_reflectivity,
    scene_from_config,
    scatterer_value,
)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _make_scatterer(q: int, grid, amplitude: complex = 1.0, **kwargs) -> Scatterer:
    return Scatterer(grid_index=q, position=grid.points[q], amplitude=amplitude, **kwargs)


class TestGrid:
    """Uniform grids with endpoints included."""

    def test_counts_include_endpoints(self):
        grid = make_grid(40.0, 40.0, 2.0, 1.0)
        assert grid.shape == (21, 41)
        assert grid.size == 861
        assert grid.extent_range == pytest.approx(40.0)

    def test_zero_extent_is_a_line(self):
        grid = make_grid(0.0, 120.0, 2.0, 1.0)
        assert grid.n_range == 1
        assert grid.is_line
        assert np.allclose(grid.cross_offsets[[0, -1]], [-60.0, 60.0])

    def test_cross_axis_is_z_cross_range(self):
        grid = make_grid(4.0, 4.0, 1.0, 1.0, range_axis=[0.0, 2.0, 5.0])
        assert np.allclose(grid.range_axis, [0.0, 1.0, 0.0])
        assert np.allclose(grid.cross_axis, [-1.0, 0.0, 0.0])

    def test_index_convention(self):
        grid = make_grid(4.0, 4.0, 2.0, 1.0, center=[10.0, 20.0, 0.0])
        q = grid.index(2, 1)
        assert q == 11
        assert grid.unravel(q) == (2, 1)
        assert np.allclose(grid.points[q], [12.0, 19.0, 0.0])

    def test_centre_pixel_sits_on_centre(self):
        grid = make_grid(4.0, 4.0, 2.0, 1.0)
        assert np.allclose(grid.offsets[grid.size // 2], 0.0)

    @pytest.mark.parametrize("args", [(4.0, 4.0, 0.0, 1.0), (-1.0, 4.0, 1.0, 1.0)])
    def test_invalid_grid(self, args):
        with pytest.raises(ValidationError) as info:
            make_grid(*args)
        assert info.value.code == ErrorCodes.SCENE_INVALID_GRID

    def test_centre_off_plane(self):
        with pytest.raises(ValidationError):
            make_grid(4.0, 4.0, 1.0, 1.0, center=[0.0, 0.0, 1.0])


class TestNearestIndex:
    """Snapping in-plane offsets onto the grid."""

    def test_on_grid(self):
        grid = make_grid(4.0, 4.0, 2.0, 1.0)
        assert nearest_index(grid, 2.0, -1.0) == (grid.index(2, 1), True)

    def test_off_grid(self):
        grid = make_grid(4.0, 4.0, 2.0, 1.0)
        q, on_grid = nearest_index(grid, 0.4, 0.0)
        assert q == grid.index(1, 2)
        assert not on_grid

    def test_outside_window(self):
        grid = make_grid(4.0, 4.0, 2.0, 1.0)
        with pytest.raises(ValidationError) as info:
            nearest_index(grid, 0.0, 3.0)
        assert info.value.code == ErrorCodes.SCENE_OUTSIDE_WINDOW


class TestColumns:
    """Column (alpha - 1) N_beta + (beta - 1)."""

    def test_beta_fastest(self):
        assert column_index(1, 1, 3) == 0
        assert column_index(1, 3, 3) == 2
        assert column_index(2, 1, 3) == 3

    def test_pair_inverts_index(self):
        for col in range(12):
            assert column_index(*column_pair(col, 3), 3) == col


class TestProfiles:
    """Parametric cell dependence."""

    def test_constant(self):
        assert np.array_equal(evaluate_profile(Profile(), [1, 2, 3]), [1.0, 1.0, 1.0])

    def test_gaussian_peak(self):
        profile = Profile(kind=ProfileKind.GAUSSIAN, peak=3.0, width=1.0)
        values = evaluate_profile(profile, [2.0, 3.0, 4.0])
        assert values[1] == 1.0
        assert values[0] == pytest.approx(np.exp(-0.5))
        assert values[0] == values[2]

    def test_indicator_rounds_fractional_cells(self):
        profile = Profile(kind=ProfileKind.INDICATOR, indices=(2, 3))
        assert np.array_equal(evaluate_profile(profile, [1.0, 1.6, 3.4, 3.6]), [0.0, 1.0, 1.0, 0.0])

    def test_table_overrides_profiles(self):
        grid = make_grid(0.0, 2.0, 1.0, 1.0)
        table = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
        scatterer = _make_scatterer(0, grid, amplitude=2.0, table=table)
        assert complex(scatterer_value(scatterer, 2, 1)) == 6.0
        assert np.array_equal(cell_values(scatterer, 2, 2), 2.0 * table)


class TestScene:
    """Validation and ground truth."""

    def test_empty_scatterer_rejected(self):
        grid = make_grid(0.0, 4.0, 1.0, 1.0)
        blind = _make_scatterer(1, grid, direction=Profile(kind=ProfileKind.INDICATOR, indices=(5,)))
        with pytest.raises(ValidationError) as info:
            make_scene(grid, 4, 1, [blind])
        assert info.value.code == ErrorCodes.SCENE_EMPTY_SCATTERER

    def test_table_shape_checked(self):
        grid = make_grid(0.0, 4.0, 1.0, 1.0)
        scatterer = _make_scatterer(0, grid, table=np.ones((2, 2), dtype=complex))
        with pytest.raises(ValidationError):
            make_scene(grid, 3, 1, [scatterer])

    def test_index_out_of_range(self):
        grid = make_grid(0.0, 4.0, 1.0, 1.0)
        with pytest.raises(ValidationError) as info:
            make_scene(grid, 2, 1, [Scatterer(grid_index=5, position=np.zeros(3))])
        assert info.value.code == ErrorCodes.SCENE_INDEX_OUT_OF_RANGE

    def test_sample_reflectivity_sums_coincident_scatterers(self):
        grid = make_grid(0.0, 4.0, 1.0, 1.0)
        scene = make_scene(grid, 2, 1, [_make_scatterer(2, grid, 1.0), _make_scatterer(2, grid, 0.5j)])
        assert sample_reflectivity(scene, 2, 1, 1) == 1.0 + 0.5j
        assert sample_reflectivity(scene, 0, 2, 1) == 0.0

    def test_ground_truth_matrix(self, small_setup):
        grid, seg = small_setup.grid, small_setup.segmentation
        visible = _make_scatterer(3, grid, 2.0, direction=Profile(kind=ProfileKind.INDICATOR, indices=(2,)))
        scene = make_scene(grid, seg.n_apertures, seg.n_subbands, [visible, _make_scatterer(9, grid)])
        truth = ground_truth_matrix(scene, grid, seg)
        assert truth.values.shape == (grid.size, seg.n_columns)
        assert np.array_equal(truth.support, [3, 9])
        assert np.array_equal(truth.values[3], [0.0, 2.0])
        assert np.array_equal(truth.values[9], [1.0, 1.0])

    def test_ground_truth_checks_cell_counts(self, small_setup):
        grid, seg = small_setup.grid, small_setup.segmentation
        scene = make_scene(grid, 3, 1, [])
        with pytest.raises(ValidationError):
            ground_truth_matrix(scene, grid, seg)


class TestSceneFromConfig:
    """Config-driven scenes."""

    def test_position_and_grid_index(self):
        grid = make_grid(4.0, 4.0, 2.0, 1.0)
        config = SceneConfig.model_validate(
            {
                "scatterers": [
                    {"position_m": [-2.0, 1.0], "amplitude": 0.5, "phase_rad": np.pi / 2},
                    {"grid_index": 4},
                ]
            }
        )
        scene = scene_from_config(config, grid, 2, 1)
        first, second = scene.scatterers
        assert first.grid_index == grid.index(0, 3)
        assert first.amplitude == pytest.approx(0.5j)
        assert np.allclose(second.position, grid.points[4])

    def test_off_grid_rejected_by_default(self):
        grid = make_grid(4.0, 4.0, 2.0, 1.0)
        config = SceneConfig.model_validate({"scatterers": [{"position_m": [0.5, 0.0]}]})
        with pytest.raises(ValidationError):
            scene_from_config(config, grid, 2, 1)

    def test_off_grid_allowed_with_warning(self, caplog):
        grid = make_grid(4.0, 4.0, 2.0, 1.0)
        config = SceneConfig.model_validate(
            {"scatterers": [{"position_m": [0.5, 0.0]}], "allow_off_grid": True}
        )
        with caplog.at_level(logging.WARNING, logger="sarmmv"):
            scene = scene_from_config(config, grid, 2, 1)
        assert np.allclose(scene.scatterers[0].position, [0.5, 0.0, 0.0])
        assert scene.scatterers[0].grid_index == grid.index(1, 2)
        assert "off-grid" in caplog.text

    def test_complex_table(self):
        grid = make_grid(0.0, 2.0, 1.0, 1.0)
        config = SceneConfig.model_validate(
            {"scatterers": [{"grid_index": 0, "table_real": [[1.0], [0.0]], "table_imag": [[0.0], [1.0]]}]}
        )
        scatterer = scene_from_config(config, grid, 2, 1).scatterers[0]
        assert np.array_equal(scatterer.table[:, 0], [1.0, 1.0j])
