"""
Segmentation Models
===================

Sub-aperture / sub-band lattice.
"""

from dataclasses import dataclass

import numpy as np

from sarmmv.models.geometry import SubapertureFrame
from sarmmv.models.waveform import Pulse


@dataclass(frozen=True, eq=False)
class Segmentation:
    """
    Abutting sub-apertures and sub-bands over a shared sample lattice.

    Sub-aperture alpha (1-based) owns global slow-time indices
    (alpha-1)*n_s .. alpha*n_s-1; sub-band beta owns global frequency
    indices (beta-1)*n_omega .. beta*n_omega-1. Offsets are shared by all
    cells.
    """

    n_apertures: int
    n_subbands: int
    subaperture_m: float
    subband_hz: float
    n_s: int
    n_omega: int
    slow_step: float
    freq_step: float
    center_times: np.ndarray
    center_omegas: np.ndarray
    slow_offsets: np.ndarray
    freq_offsets: np.ndarray
    frames: tuple[SubapertureFrame, ...]
    slow_times: np.ndarray
    frequencies: np.ndarray
    reference_point: np.ndarray
    pulse: Pulse
    speed: float

    @property
    def n_columns(self) -> int:
        return self.n_apertures * self.n_subbands

    @property
    def n_rows(self) -> int:
        """Samples per subset."""
        return self.n_s * self.n_omega

    @property
    def wave_speed(self) -> float:
        return self.pulse.wave_speed

    @property
    def band_wavenumbers(self) -> np.ndarray:
        """k_beta = omega*_beta / c."""
        return self.center_omegas / self.pulse.wave_speed

    @property
    def offset_wavenumbers(self) -> np.ndarray:
        return self.freq_offsets / self.pulse.wave_speed

    @property
    def has_band(self) -> bool:
        """More than one frequency per sub-band."""
        return self.n_omega > 1

    def slow_indices(self, alpha: int) -> np.ndarray:
        start = (alpha - 1) * self.n_s
        return np.arange(start, start + self.n_s)

    def freq_indices(self, beta: int) -> np.ndarray:
        start = (beta - 1) * self.n_omega
        return np.arange(start, start + self.n_omega)

    def frame(self, alpha: int) -> SubapertureFrame:
        return self.frames[alpha - 1]
