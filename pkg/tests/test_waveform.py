"""
Waveform Tests
==============
"""

import math

import numpy as np
import pytest
from scipy import integrate

from sarmmv.core.errors import ErrorCodes, SamplingError, ValidationError
from sarmmv.services.waveform import in_band, make_pulse, spectrum, uniform_sampling, wavenumber


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _make_pulse(**overrides):
    params = {"carrier_hz": 9.6e9, "bandwidth_hz": 622e6}
    params.update(overrides)
    return make_pulse(**params)


class TestPulse:
    """Validated pulse parameters and derived constants."""

    def test_derived_constants(self):
        pulse = _make_pulse()
        assert pulse.wavelength == pytest.approx(0.03125)
        assert pulse.carrier == pytest.approx(2 * math.pi * 9.6e9)
        assert pulse.central_wavenumber == pytest.approx(2 * math.pi / 0.03125)

    def test_wide_band_rejected(self):
        with pytest.raises(ValidationError) as info:
            _make_pulse(bandwidth_hz=2.0e9)
        assert info.value.field == "bandwidth_hz"

    def test_non_positive_level_rejected(self):
        with pytest.raises(ValidationError):
            _make_pulse(spectrum_level=0.0)


class TestSpectrum:
    """Flat spectrum over the closed band."""

    def test_flat_inside_zero_outside(self):
        pulse = _make_pulse(spectrum_level=2.0)
        omegas = pulse.carrier + np.array([-pulse.half_band, 0.0, pulse.half_band, 1.01 * pulse.half_band])
        assert np.array_equal(spectrum(pulse, omegas), [2.0, 2.0, 2.0, 0.0])

    def test_in_band_mask(self):
        pulse = _make_pulse()
        assert in_band(pulse, pulse.carrier)
        assert not in_band(pulse, 0.0)

    def test_energy_is_level_squared_times_band(self):
        pulse = _make_pulse(spectrum_level=1.5)
        half = pulse.half_band
        energy, _ = integrate.quad(
            lambda x: float(spectrum(pulse, pulse.carrier + x)) ** 2, -2 * half, 2 * half, points=[-half, half]
        )
        assert energy == pytest.approx(1.5**2 * 2 * math.pi * 622e6, rel=1e-6)

    def test_wavenumber(self):
        pulse = _make_pulse()
        assert float(wavenumber(pulse, pulse.carrier)) == pytest.approx(pulse.central_wavenumber)


class TestUniformSampling:
    """Frequency lattice centred on the carrier."""

    def test_centred_lattice(self):
        pulse = _make_pulse()
        lattice = uniform_sampling(pulse, 15, 1.0e6)
        assert lattice.size == 15
        assert lattice.omegas.mean() == pytest.approx(pulse.carrier)
        assert np.allclose(np.diff(lattice.omegas), 1.0e6)

    def test_full_band_fits(self):
        pulse = _make_pulse()
        lattice = uniform_sampling(pulse, 11, 2 * pulse.half_band / 10)
        assert np.all(in_band(pulse, lattice.omegas))

    def test_lattice_wider_than_band(self):
        pulse = _make_pulse()
        with pytest.raises(SamplingError) as info:
            uniform_sampling(pulse, 11, 2 * pulse.half_band / 9)
        assert info.value.code == ErrorCodes.SEG_EXCEEDS_BAND

    def test_empty_lattice_rejected(self):
        with pytest.raises(ValidationError):
            uniform_sampling(_make_pulse(), 0, 1.0)
