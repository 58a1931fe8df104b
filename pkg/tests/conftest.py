"""
Pytest Configuration
====================

Shared fixtures: GOTCHA-like geometry on small windows so that every
matrix in the tests stays a few hundred rows by a few dozen columns.
"""

import copy
from typing import Any

import numpy as np
import pytest

from sarmmv.schemas.experiment import ExperimentConfig
from sarmmv.services.experiment import ExperimentSetup, build_setup, parse_config


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

# 3 x 5 window, two sub-apertures of 41 samples, one sub-band of 5 frequencies
SMALL_CONFIG: dict[str, Any] = {
    "name": "small",
    "grid": {
        "extent_range_m": 4.0,
        "extent_cross_m": 4.0,
        "step_range_m": 2.0,
        "step_cross_m": 1.0,
    },
    "segmentation": {"n_apertures": 2, "n_subbands": 1, "n_freq": 5},
    "solver": {"max_iters": 3000, "regularization": 0.5},
    "outputs": {"plots": False, "coherence_random_pairs": 20},
}


# 11-pixel cross-range line, 4 m apart against a 7.6 m resolution
LINE_SECTIONS: dict[str, Any] = {
    "grid": {"extent_range_m": 0.0, "extent_cross_m": 40.0, "step_cross_m": 4.0},
    "segmentation": {"n_apertures": 2, "n_subbands": 1, "n_freq": 1},
}


def _merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def make_config(**sections: Any) -> ExperimentConfig:
    """Small config with whole sections or single keys overridden."""
    return parse_config(_merge(SMALL_CONFIG, sections), source="tests")


def make_setup(**sections: Any) -> ExperimentSetup:
    return build_setup(make_config(**sections))


def centre_scatterer(amplitude: float = 1.0, **extra: Any) -> dict:
    """Scatterer table entry at the window centre."""
    return {"position_m": [0.0, 0.0], "amplitude": amplitude, **extra}


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def small_setup() -> ExperimentSetup:
    """Empty 3 x 5 window, N_alpha = 2, N_beta = 1, five frequencies."""
    return make_setup()


@pytest.fixture(scope="session")
def banded_setup() -> ExperimentSetup:
    """Same window with two sub-bands."""
    return make_setup(segmentation={"n_apertures": 2, "n_subbands": 2, "n_freq": 5})


@pytest.fixture(scope="session")
def point_setup() -> ExperimentSetup:
    """Unit isotropic scatterer at the reference point."""
    return make_setup(scene={"scatterers": [centre_scatterer()]})


@pytest.fixture(scope="session")
def line_setup() -> ExperimentSetup:
    """Cross-range line sampled at half the resolution, one frequency."""
    return make_setup(**LINE_SECTIONS)


@pytest.fixture(scope="session")
def gotcha_setup() -> ExperimentSetup:
    """Bundled GOTCHA defaults: 40 m window, N_alpha = 8, 15 frequencies."""
    from sarmmv.services.experiment import load_config

    return build_setup(load_config("gotcha"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
