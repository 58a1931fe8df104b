"""
Simulator Tests
===============

Start-stop and Doppler data on the segmentation lattice, and noise.
"""

import math

import numpy as np
import pytest

from sarmmv.core.errors import ErrorCodes, ValidationError
from sarmmv.models.data import DataModelKind
from sarmmv.models.scene import Scatterer
from sarmmv.services.geometry import circular_trajectory
from sarmmv.services.scene import make_scene
from sarmmv.services.simulator import (
    DOWNRAMP_START_STOP,
    NOISE_PER_SAMPLE,
    add_noise,
    simulate,
    simulate_doppler,
    simulate_start_stop,
)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _make_scene(setup, entries):
    """Scene from (pixel, amplitude) pairs on the setup's grid."""
    grid = setup.grid
    scatterers = [Scatterer(grid_index=q, position=grid.points[q], amplitude=a) for q, a in entries]
    seg = setup.segmentation
    return make_scene(grid, seg.n_apertures, seg.n_subbands, scatterers)


def _run(setup, scene, traj=None, **kwargs):
    return simulate(scene, setup.grid, traj or setup.trajectory, setup.pulse, setup.segmentation, **kwargs)


class TestSimulate:
    """Single-scattering data."""

    def test_reference_point_echo(self, point_setup):
        data = _run(point_setup, point_setup.scene)
        pulse = point_setup.pulse
        k = point_setup.segmentation.frequencies / pulse.wave_speed
        L = math.hypot(7100.0, 7300.0)
        expected = np.broadcast_to(k**2 / (4 * math.pi * L) ** 2, data.shape)
        assert data.model_kind == DataModelKind.START_STOP
        assert np.allclose(data.values, expected, rtol=1e-9, atol=0)

    def test_lattice_matches_segmentation(self, point_setup):
        data = _run(point_setup, point_setup.scene)
        seg = point_setup.segmentation
        assert data.shape == (82, 5)
        assert np.array_equal(data.frequencies, seg.frequencies)

    def test_superposition(self, small_setup):
        both = _run(small_setup, _make_scene(small_setup, [(2, 1.0), (11, 0.5j)]))
        first = _run(small_setup, _make_scene(small_setup, [(2, 1.0)]))
        second = _run(small_setup, _make_scene(small_setup, [(11, 0.5j)]))
        assert np.allclose(both.values, first.values + second.values, rtol=1e-12)

    def test_worker_count_does_not_change_data(self, small_setup):
        scene = _make_scene(small_setup, [(4, 1.0), (12, 0.3)])
        one = _run(small_setup, scene, workers=1)
        three = _run(small_setup, scene, workers=3)
        assert np.array_equal(one.values, three.values)

    def test_empty_scene_is_zero(self, small_setup):
        data = _run(small_setup, small_setup.scene)
        assert not np.any(data.values)

    def test_direction_dependence_follows_cells(self, small_setup):
        grid, seg = small_setup.grid, small_setup.segmentation
        table = np.array([[1.0], [0.0]], dtype=complex)
        scene = make_scene(grid, 2, 1, [Scatterer(grid_index=7, position=grid.points[7], table=table)])
        data = _run(small_setup, scene)
        assert np.all(np.abs(data.values[seg.slow_indices(1)]) > 0)
        assert not np.any(data.values[seg.slow_indices(2)])

    def test_scatterer_outside_window(self, small_setup):
        outside = Scatterer(grid_index=0, position=np.array([50.0, 0.0, 0.0]))
        scene = make_scene(small_setup.grid, 2, 1, [outside])
        with pytest.raises(ValidationError) as info:
            _run(small_setup, scene)
        assert info.value.code == ErrorCodes.SCENE_OUTSIDE_WINDOW

    def test_unknown_downramp(self, point_setup):
        with pytest.raises(ValidationError):
            _run(point_setup, point_setup.scene, downramp="none")


class TestDoppler:
    """First-order Doppler model."""

    def test_stationary_platform_reproduces_start_stop(self, small_setup):
        scene = _make_scene(small_setup, [(3, 1.0), (13, 0.7)])
        parked = circular_trajectory(7300.0, 7100.0, 0.0, 0.015, small_setup.trajectory.n_slow)
        start_stop = _run(small_setup, scene, traj=parked, kind=DataModelKind.START_STOP)
        doppler = _run(small_setup, scene, traj=parked, kind=DataModelKind.DOPPLER)
        assert np.array_equal(start_stop.values, doppler.values)

    def test_doppler_differs_for_moving_platform(self, small_setup):
        s = small_setup
        scene = _make_scene(s, [(3, 1.0)])
        start_stop = simulate_start_stop(scene, s.grid, s.trajectory, s.pulse, s.segmentation)
        doppler = simulate_doppler(scene, s.grid, s.trajectory, s.pulse, s.segmentation)
        assert doppler.model_kind == DataModelKind.DOPPLER
        assert not np.allclose(start_stop.values, doppler.values, rtol=1e-12, atol=0)
        # Doppler phases are a small perturbation at these speeds
        rel = np.linalg.norm(doppler.values - start_stop.values) / np.linalg.norm(start_stop.values)
        assert rel < 0.1

    def test_start_stop_downramp(self, point_setup):
        s = point_setup
        data = simulate_doppler(s.scene, s.grid, s.trajectory, s.pulse, s.segmentation, downramp=DOWNRAMP_START_STOP)
        assert np.all(np.isfinite(data.values))

    def test_speed_must_be_below_wave_speed(self, point_setup):
        fast = circular_trajectory(7300.0, 7100.0, 4.0e8, 0.015, point_setup.trajectory.n_slow)
        with pytest.raises(ValidationError):
            _run(point_setup, point_setup.scene, traj=fast, kind=DataModelKind.DOPPLER)


class TestNoise:
    """Additive complex Gaussian noise."""

    def test_zero_level_is_identity(self, point_setup):
        data = _run(point_setup, point_setup.scene)
        noisy = add_noise(data, 0.0)
        assert np.array_equal(noisy.values, data.values)
        assert noisy.noise_level == 0.0

    def test_frobenius_level(self, point_setup):
        data = _run(point_setup, point_setup.scene)
        noisy = add_noise(data, 0.2, seed=3)
        ratio = np.linalg.norm(noisy.values - data.values) / np.linalg.norm(data.values)
        assert ratio == pytest.approx(0.2, rel=0.1)
        assert noisy.noise_level == 0.2

    def test_seed_is_deterministic(self, point_setup):
        data = _run(point_setup, point_setup.scene)
        assert np.array_equal(add_noise(data, 0.1, seed=5).values, add_noise(data, 0.1, seed=5).values)
        assert not np.array_equal(add_noise(data, 0.1, seed=5).values, add_noise(data, 0.1, seed=6).values)

    def test_per_sample_spares_zero_samples(self, small_setup):
        data = _run(small_setup, small_setup.scene)
        assert not np.any(add_noise(data, 0.5, mode=NOISE_PER_SAMPLE).values)

    @pytest.mark.parametrize("level, mode", [(-0.1, "frobenius"), (0.1, "pink")])
    def test_invalid_arguments(self, point_setup, level, mode):
        data = _run(point_setup, point_setup.scene)
        with pytest.raises(ValidationError):
            add_noise(data, level, mode=mode)
