"""Core model: grids, pulses, soliton arithmetic, material response."""

import math

import numpy as np
import pytest

from polsqueeze import (
    ConfigurationError,
    FiberAssembly,
    FiberSegment,
    PulseSpec,
    TimeGrid,
    TwoModeField,
    default_fiber_fs_pm_7811,
    make_sech_pulse,
    photon_number,
    soliton_energy_per_mode,
    soliton_period,
)
from polsqueeze.core import (
    SECH_FWHM_FACTOR,
    photon_energy,
    raman_response_spectrum,
    raman_response_time,
)


class TestTimeGrid:
    def test_dt_is_exact_quotient(self):
        grid = TimeGrid(1024, 12.5e-12)
        assert grid.dt == 12.5e-12 / 1024

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ConfigurationError):
            TimeGrid(1000, 1e-11)
        with pytest.raises(ConfigurationError):
            TimeGrid(0, 1e-11)
        with pytest.raises(ConfigurationError):
            TimeGrid(-256, 1e-11)

    def test_rejects_bad_window(self):
        with pytest.raises(ConfigurationError):
            TimeGrid(256, 0.0)
        with pytest.raises(ConfigurationError):
            TimeGrid(256, -1e-12)

    def test_times_centred(self):
        grid = TimeGrid(256, 8e-12)
        t = grid.times
        assert t[128] == 0.0
        assert t[0] == -4e-12
        assert np.allclose(np.diff(t), grid.dt)

    def test_angular_frequencies_layout(self):
        grid = TimeGrid(256, 8e-12)
        om = grid.angular_frequencies
        assert om[0] == 0.0
        # fft bin layout: positive frequencies first, then negative
        assert om[1] == pytest.approx(2 * math.pi / grid.window)
        assert om[-1] == pytest.approx(-2 * math.pi / grid.window)


class TestSegmentsAndAssembly:
    def test_default_fiber_constants(self):
        seg = default_fiber_fs_pm_7811(5.2)
        assert seg.length == 5.2
        assert seg.beta2 == -1.05e-26
        assert seg.beta3 == 1.55e-40
        assert seg.gamma == 3.0e-3
        assert seg.walkoff == 1.5e-12
        assert seg.loss_per_m == 0.0
        assert seg.raman_fraction == 0.18
        assert seg.raman_tau1 == 12.2e-15
        assert seg.raman_tau2 == 32.0e-15

    def test_segment_validation(self):
        with pytest.raises(ConfigurationError):
            FiberSegment(length=0.0, beta2=-1e-26, beta3=0.0, gamma=1e-3, walkoff=0.0)
        with pytest.raises(ConfigurationError):
            FiberSegment(length=1.0, beta2=-1e-26, beta3=0.0, gamma=-1e-3, walkoff=0.0)
        with pytest.raises(ConfigurationError):
            FiberSegment(
                length=1.0, beta2=-1e-26, beta3=0.0, gamma=1e-3, walkoff=0.0,
                raman_fraction=1.0,
            )

    def test_assembly_lengths(self):
        asm = FiberAssembly(
            first=default_fiber_fs_pm_7811(2.615),
            second=default_fiber_fs_pm_7811(2.585),
        )
        assert asm.total_length == pytest.approx(5.2)
        assert asm.length_imbalance == pytest.approx(0.03)
        assert asm.splice_transmission == 0.96
        assert asm.axes_swapped_at_splice

    def test_assembly_rejects_bad_splice(self):
        seg = default_fiber_fs_pm_7811(1.0)
        with pytest.raises(ConfigurationError):
            FiberAssembly(first=seg, second=seg, splice_transmission=0.0)
        with pytest.raises(ConfigurationError):
            FiberAssembly(first=seg, second=seg, splice_transmission=1.2)


class TestSolitonArithmetic:
    # Frozen from E = 2|beta2|/(gamma T0) and z0 = (pi/2) T0^2/|beta2|
    # with T0 = fwhm/(2 ln(1+sqrt 2)), evaluated independently.

    def test_soliton_energy_235fs(self):
        seg = default_fiber_fs_pm_7811(1.0)
        energy = soliton_energy_per_mode(seg, 235e-15)
        assert energy == pytest.approx(52.507e-12, rel=1e-4)

    def test_soliton_energy_200fs(self):
        seg = default_fiber_fs_pm_7811(1.0)
        energy = soliton_energy_per_mode(seg, 200e-15)
        assert energy == pytest.approx(61.696e-12, rel=1e-4)

    def test_soliton_period_200fs(self):
        seg = default_fiber_fs_pm_7811(1.0)
        assert soliton_period(seg, 200e-15) == pytest.approx(1.9257, rel=1e-4)

    def test_soliton_period_235fs(self):
        seg = default_fiber_fs_pm_7811(1.0)
        assert soliton_period(seg, 235e-15) == pytest.approx(2.6588, rel=1e-4)

    def test_normal_dispersion_rejected(self):
        seg = FiberSegment(length=1.0, beta2=+1e-26, beta3=0.0, gamma=1e-3, walkoff=0.0)
        with pytest.raises(ConfigurationError):
            soliton_energy_per_mode(seg, 200e-15)
        with pytest.raises(ConfigurationError):
            soliton_period(seg, 200e-15)

    def test_fwhm_factor(self):
        assert SECH_FWHM_FACTOR == pytest.approx(1.762747, rel=1e-6)
        # width at half maximum of sech^2 really is the factor times T0
        t0 = 1.0
        t_half = SECH_FWHM_FACTOR / 2 * t0
        assert (1 / math.cosh(t_half / t0)) ** 2 == pytest.approx(0.5, abs=1e-12)


class TestSechPulse:
    def test_energy_integrates_to_total(self):
        grid = TimeGrid(1024, 12.5e-12)
        pulse = PulseSpec(fwhm=200e-15, energy_total=160e-12, center_wavelength=1.56e-6)
        field = make_sech_pulse(grid, pulse)
        measured = photon_number(field) * photon_energy(1.56e-6)
        assert measured == pytest.approx(160e-12, rel=1e-6)

    def test_photon_number_80pj_mode(self):
        # 80 pJ at 1560 nm: E lambda/(h c) = 6.28258e8 photons, frozen
        grid = TimeGrid(1024, 12.5e-12)
        pulse = PulseSpec(fwhm=200e-15, energy_total=160e-12, center_wavelength=1.56e-6)
        field = make_sech_pulse(grid, pulse)
        assert photon_number(field, "h") == pytest.approx(6.28258e8, rel=1e-5)
        assert photon_number(field, "v") == pytest.approx(6.28258e8, rel=1e-5)

    def test_split_ratio(self):
        grid = TimeGrid(1024, 12.5e-12)
        pulse = PulseSpec(
            fwhm=200e-15, energy_total=100e-12, center_wavelength=1.56e-6,
            split_ratio=0.25,
        )
        field = make_sech_pulse(grid, pulse)
        assert photon_number(field, "h") / photon_number(field) == pytest.approx(0.25)

    def test_grid_too_coarse(self):
        grid = TimeGrid(256, 12.5e-12)  # dt = 48.8 fs > 200/16 fs
        pulse = PulseSpec(fwhm=200e-15, energy_total=1e-12, center_wavelength=1.56e-6)
        with pytest.raises(ConfigurationError, match="too coarse"):
            make_sech_pulse(grid, pulse)

    def test_window_too_small(self):
        grid = TimeGrid(1024, 3e-12)  # < 20 fwhm
        pulse = PulseSpec(fwhm=200e-15, energy_total=1e-12, center_wavelength=1.56e-6)
        with pytest.raises(ConfigurationError, match="too small"):
            make_sech_pulse(grid, pulse)

    def test_parseval(self):
        grid = TimeGrid(1024, 12.5e-12)
        pulse = PulseSpec(fwhm=200e-15, energy_total=160e-12, center_wavelength=1.56e-6)
        field = make_sech_pulse(grid, pulse)
        # ifft analysis: spectral amplitudes scaled by N dt carry the same
        # photon number with d(Omega/2pi) = 1/window bin measure
        spec = np.fft.ifft(field.env_h) * grid.n_points * grid.dt
        n_time = np.sum(np.abs(field.env_h) ** 2) * grid.dt
        n_freq = np.sum(np.abs(spec) ** 2) / grid.window
        assert n_freq == pytest.approx(n_time, rel=1e-10)


class TestTwoModeField:
    def test_shape_validation(self):
        grid = TimeGrid(256, 8e-12)
        good = np.zeros(256, dtype=complex)
        with pytest.raises(ConfigurationError):
            TwoModeField(grid, np.zeros(128, dtype=complex), good)
        with pytest.raises(ConfigurationError):
            TwoModeField(grid, np.zeros(256), good)  # real dtype
        with pytest.raises(ConfigurationError):
            TwoModeField(grid, np.zeros((3, 256), dtype=complex), good)

    def test_batch_photon_number(self):
        grid = TimeGrid(256, 8e-12)
        env = np.ones((5, 256), dtype=complex)
        field = TwoModeField(grid, env, 2.0 * env)
        n = photon_number(field, "total")
        assert n.shape == (5,)
        assert np.allclose(n, (1.0 + 4.0) * 256 * grid.dt)

    def test_photon_number_bad_mode(self):
        grid = TimeGrid(256, 8e-12)
        field = TwoModeField(
            grid, np.zeros(256, dtype=complex), np.zeros(256, dtype=complex)
        )
        with pytest.raises(ConfigurationError):
            photon_number(field, "x")


class TestRamanResponse:
    def test_unit_integral(self):
        t = np.arange(0, 4e-12, 1e-16)
        h = raman_response_time(t, 12.2e-15, 32e-15)
        assert np.trapezoid(h, t) == pytest.approx(1.0, rel=1e-4)

    def test_causal(self):
        t = np.array([-1e-13, -1e-15, 0.0, 1e-15])
        h = raman_response_time(t, 12.2e-15, 32e-15)
        assert h[0] == 0.0 and h[1] == 0.0
        assert h[3] > 0.0

    def test_spectrum_dc_is_one(self):
        assert raman_response_spectrum(np.array([0.0]), 12.2e-15, 32e-15)[0] == (
            pytest.approx(1.0)
        )

    def test_spectrum_matches_sampled_transform(self):
        dt = 2e-15
        n = 8192
        t = np.arange(n) * dt
        h = raman_response_time(t, 12.2e-15, 32e-15)
        sampled = np.fft.rfft(h) * dt
        omega = 2 * math.pi * np.fft.rfftfreq(n, dt)
        analytic = raman_response_spectrum(omega, 12.2e-15, 32e-15)
        # the discretised kernel differs from the continuous transform at
        # O(dt/tau1); 2 fs sampling puts that near 2e-2 at the gain peak
        assert np.max(np.abs(sampled - analytic)) < 3e-2

    def test_gain_side_is_negative_imag_on_blue(self):
        # analysis convention exp(-i Omega t): Im is odd, negative for
        # Omega > 0, so |Im| peaks on both sides of the carrier
        omega = np.linspace(1e12, 2e14, 64)
        spectrum = raman_response_spectrum(omega, 12.2e-15, 32e-15)
        assert np.all(spectrum.imag < 0.0)
        mirrored = raman_response_spectrum(-omega, 12.2e-15, 32e-15)
        assert np.allclose(mirrored.imag, -spectrum.imag)
        assert np.allclose(mirrored.real, spectrum.real)
