"""
Waveform Service
================

Idealized compressed-chirp spectrum and frequency sampling. Only
|f_hat(omega)| enters the data models, so the pulse is represented by its
flat spectrum level over [omega_o - pi B, omega_o + pi B].
"""

import logging

import numpy as np

from sarmmv.core.errors import ErrorCodes, SamplingError, ValidationError
from sarmmv.models.waveform import FrequencySampling, Pulse
from sarmmv.utils.validators import validate_positive

logger = logging.getLogger(__name__)

# Narrowband requirement B / f_o
MAX_FRACTIONAL_BANDWIDTH = 0.2

# Relative slack on the band edges for lattice samples
_EDGE_TOLERANCE = 1e-12


def make_pulse(
    carrier_hz: float,
    bandwidth_hz: float,
    spectrum_level: float = 1.0,
    wave_speed: float = 3.0e8,
) -> Pulse:
    """
    Build a validated pulse.

    Raises:
        ValidationError: If a parameter is not positive or the band is not
            narrow compared to the carrier
    """
    validate_positive(carrier_hz, "carrier_hz")
    validate_positive(bandwidth_hz, "bandwidth_hz")
    validate_positive(spectrum_level, "spectrum_level")
    validate_positive(wave_speed, "wave_speed")
    if bandwidth_hz / carrier_hz >= MAX_FRACTIONAL_BANDWIDTH:
        raise ValidationError(
            message=f"Fractional bandwidth must be below {MAX_FRACTIONAL_BANDWIDTH}",
            field="bandwidth_hz",
        )
    return Pulse(
        carrier_hz=float(carrier_hz),
        bandwidth_hz=float(bandwidth_hz),
        spectrum_level=float(spectrum_level),
        wave_speed=float(wave_speed),
    )


def in_band(pulse: Pulse, omega) -> np.ndarray:
    """Mask of angular frequencies inside the closed band."""
    omega = np.asarray(omega, dtype=float)
    slack = _EDGE_TOLERANCE * pulse.carrier
    return np.abs(omega - pulse.carrier) <= pulse.half_band + slack


def spectrum(pulse: Pulse, omega) -> np.ndarray:
    """|f_hat(omega)|: the spectrum level inside the band, zero outside."""
    return np.where(in_band(pulse, omega), pulse.spectrum_level, 0.0)


def wavenumber(pulse: Pulse, omega) -> np.ndarray:
    """k = omega / c."""
    return np.asarray(omega, dtype=float) / pulse.wave_speed


def uniform_sampling(pulse: Pulse, n_freq: int, step: float) -> FrequencySampling:
    """
    ``n_freq`` samples spaced ``step`` rad/s, centred on the carrier.

    Raises:
        SamplingError: If the samples leave the band
    """
    if n_freq < 1:
        raise ValidationError(message="n_freq must be at least 1", field="n_freq")
    omegas = pulse.carrier + (np.arange(n_freq) - (n_freq - 1) / 2.0) * step
    if not np.all(in_band(pulse, omegas)):
        raise SamplingError(
            message=(
                f"{n_freq} frequencies spaced {step:.6g} rad/s span "
                f"{(n_freq - 1) * step:.6g} rad/s, wider than the band "
                f"{2 * pulse.half_band:.6g} rad/s"
            ),
            code=ErrorCodes.SEG_EXCEEDS_BAND,
        )
    logger.debug("Frequency lattice: %d samples, step %.6g rad/s", n_freq, step)
    return FrequencySampling(omegas=omegas, step=float(step))
