"""
Waveform Models
===============

Pulse and frequency sampling containers.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Pulse:
    """Idealized compressed chirp with a flat spectrum over the band."""

    carrier_hz: float
    bandwidth_hz: float
    spectrum_level: float = 1.0
    wave_speed: float = 3.0e8

    @property
    def carrier(self) -> float:
        """Angular carrier frequency omega_o (rad/s)."""
        return 2.0 * math.pi * self.carrier_hz

    @property
    def half_band(self) -> float:
        """Half-width pi*B of the band in rad/s."""
        return math.pi * self.bandwidth_hz

    @property
    def central_wavenumber(self) -> float:
        return self.carrier / self.wave_speed

    @property
    def wavelength(self) -> float:
        return self.wave_speed / self.carrier_hz


@dataclass(frozen=True, eq=False)
class FrequencySampling:
    """Uniform angular-frequency samples."""

    omegas: np.ndarray
    step: float

    @property
    def size(self) -> int:
        return len(self.omegas)
