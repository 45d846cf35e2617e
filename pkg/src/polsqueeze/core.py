"""Core model: time grid, fibre and pulse descriptions, field container.

Envelopes are stored in photon-flux units, sqrt(photons/s), so that
``sum(|A|^2) * dt`` is a photon number and vacuum fluctuations carry a
variance of half a photon per temporal mode independent of wavelength.
Conversion to watts happens only inside the nonlinear step, through the
photon energy at the carrier.

Spectral convention used throughout the package: the spectrum of an
envelope is ``ifft(A)`` (basis ``exp(-i*Omega*t)``), synthesis is ``fft``,
and ``Omega = 2*pi*fftfreq(n, dt)`` with positive Omega on the blue side
of the carrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c as _C_LIGHT
from scipy.constants import h as _PLANCK

from .errors import ConfigurationError

__all__ = [
    "SECH_FWHM_FACTOR",
    "TimeGrid",
    "FiberSegment",
    "FiberAssembly",
    "PulseSpec",
    "TwoModeField",
    "default_fiber_fs_pm_7811",
    "soliton_energy_per_mode",
    "soliton_period",
    "make_sech_pulse",
    "photon_number",
    "photon_energy",
    "raman_response_time",
    "raman_response_spectrum",
]

# FWHM of sech^2(t/T0) in units of T0.
SECH_FWHM_FACTOR = 2.0 * math.log(1.0 + math.sqrt(2.0))


def photon_energy(wavelength: float) -> float:
    """Energy of one photon at the given vacuum wavelength, in joules."""
    return _PLANCK * _C_LIGHT / wavelength


@dataclass(frozen=True)
class TimeGrid:
    """Uniform periodic time grid for split-step propagation.

    Parameters
    ----------
    n_points : int
        Number of samples. Must be a power of two; the propagator leans on
        radix-2 FFTs and the sampler assigns exactly one vacuum mode per
        sample.
    window : float
        Total span of the grid in seconds. ``dt = window / n_points``
        exactly, no rounding.
    """

    n_points: int
    window: float

    def __post_init__(self) -> None:
        n = self.n_points
        if n <= 0 or (n & (n - 1)) != 0:
            raise ConfigurationError(
                f"n_points must be a positive power of two, got {n}"
            )
        if not (self.window > 0.0 and math.isfinite(self.window)):
            raise ConfigurationError(f"window must be positive, got {self.window}")

    @property
    def dt(self) -> float:
        return self.window / self.n_points

    @property
    def times(self) -> np.ndarray:
        """Sample times in seconds, centred so t = 0 sits at index n/2."""
        return (np.arange(self.n_points) - self.n_points // 2) * self.dt

    @property
    def angular_frequencies(self) -> np.ndarray:
        """Angular frequency of each FFT bin, rad/s, fft layout."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, self.dt)


@dataclass(frozen=True)
class FiberSegment:
    """One birefringent fibre segment.

    All quantities SI: ``length`` m, ``beta2`` s^2/m, ``beta3`` s^3/m,
    ``gamma`` 1/(W m), ``walkoff`` s/m (group-delay difference between the
    slow and fast axes), ``loss_per_m`` 1/m (power attenuation
    coefficient), Raman response parameters in seconds.
    """

    length: float
    beta2: float
    beta3: float
    gamma: float
    walkoff: float
    loss_per_m: float = 0.0
    raman_fraction: float = 0.18
    raman_tau1: float = 12.2e-15
    raman_tau2: float = 32.0e-15

    def __post_init__(self) -> None:
        if not (self.length > 0.0):
            raise ConfigurationError(f"segment length must be positive, got {self.length}")
        if self.gamma < 0.0:
            raise ConfigurationError(f"gamma must be non-negative, got {self.gamma}")
        if self.loss_per_m < 0.0:
            raise ConfigurationError(f"loss_per_m must be non-negative, got {self.loss_per_m}")
        if not (0.0 <= self.raman_fraction < 1.0):
            raise ConfigurationError(
                f"raman_fraction must lie in [0, 1), got {self.raman_fraction}"
            )
        if self.raman_tau1 <= 0.0 or self.raman_tau2 <= 0.0:
            raise ConfigurationError("Raman time constants must be positive")


@dataclass(frozen=True)
class FiberAssembly:
    """Two segments spliced with the principal axes exchanged.

    The splice swaps which axis is slow, so first-segment walk-off is
    undone in the second segment; a length imbalance leaves a residual
    differential group delay of ``walkoff * (L1 - L2)``. Splice insertion
    loss is lumped into a single beamsplitter-style transmission applied
    at the joint.
    """

    first: FiberSegment
    second: FiberSegment
    splice_transmission: float = 0.96
    axes_swapped_at_splice: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.splice_transmission <= 1.0):
            raise ConfigurationError(
                f"splice_transmission must lie in (0, 1], got {self.splice_transmission}"
            )

    @property
    def total_length(self) -> float:
        return self.first.length + self.second.length

    @property
    def length_imbalance(self) -> float:
        return self.first.length - self.second.length


@dataclass(frozen=True)
class PulseSpec:
    """Sech pulse launched at 45 degrees to the fibre axes.

    ``fwhm`` is the intensity full width at half maximum in seconds,
    ``energy_total`` the pulse energy in joules summed over both modes,
    ``split_ratio`` the fraction of the energy in the H (slow-axis) mode.
    """

    fwhm: float
    energy_total: float
    center_wavelength: float
    split_ratio: float = 0.5

    def __post_init__(self) -> None:
        if not (self.fwhm > 0.0):
            raise ConfigurationError(f"fwhm must be positive, got {self.fwhm}")
        if self.energy_total < 0.0:
            raise ConfigurationError(
                f"energy_total must be non-negative, got {self.energy_total}"
            )
        if not (self.center_wavelength > 0.0):
            raise ConfigurationError(
                f"center_wavelength must be positive, got {self.center_wavelength}"
            )
        if not (0.0 <= self.split_ratio <= 1.0):
            raise ConfigurationError(
                f"split_ratio must lie in [0, 1], got {self.split_ratio}"
            )

    @property
    def t0(self) -> float:
        """Sech width parameter T0 = fwhm / (2 ln(1 + sqrt 2))."""
        return self.fwhm / SECH_FWHM_FACTOR


@dataclass
class TwoModeField:
    """Field envelopes of the two polarization modes on a common grid.

    ``env_h`` and ``env_v`` are complex arrays in sqrt(photons/s) whose
    last axis runs over ``grid`` samples; leading axes, when present,
    index ensemble trajectories. The container is mutable, propagation
    steps update the envelopes in place where they can.
    """

    grid: TimeGrid
    env_h: np.ndarray
    env_v: np.ndarray

    def __post_init__(self) -> None:
        for name, env in (("env_h", self.env_h), ("env_v", self.env_v)):
            if env.shape[-1] != self.grid.n_points:
                raise ConfigurationError(
                    f"{name} last axis has {env.shape[-1]} samples, "
                    f"grid has {self.grid.n_points}"
                )
            if not np.iscomplexobj(env):
                raise ConfigurationError(f"{name} must be complex")
        if self.env_h.shape != self.env_v.shape:
            raise ConfigurationError("env_h and env_v must have identical shapes")

    def copy(self) -> "TwoModeField":
        return TwoModeField(self.grid, self.env_h.copy(), self.env_v.copy())


def default_fiber_fs_pm_7811(length: float) -> FiberSegment:
    """FS-PM-7811 polarization-maintaining fibre at 1560 nm.

    Dispersion and nonlinearity from the manufacturer datasheet values in
    common use for this fibre; walk-off between the principal axes is
    1.5 ps/m (beat-length derived, configurable per segment when a
    different batch is characterised). In-fibre loss is negligible over
    metre-scale lengths and defaults to zero, with splice and exit losses
    modelled as lumped elements elsewhere.
    """
    return FiberSegment(
        length=length,
        beta2=-1.05e-26,
        beta3=1.55e-40,
        gamma=3.0e-3,
        walkoff=1.5e-12,
        loss_per_m=0.0,
    )


def soliton_energy_per_mode(segment: FiberSegment, fwhm: float) -> float:
    """Fundamental soliton energy for one mode, in joules.

    ``E = 2 |beta2| / (gamma T0)`` with T0 the sech width parameter.
    """
    _require_anomalous(segment)
    if segment.gamma <= 0.0:
        raise ConfigurationError("soliton energy undefined for gamma = 0")
    t0 = fwhm / SECH_FWHM_FACTOR
    return 2.0 * abs(segment.beta2) / (segment.gamma * t0)


def soliton_period(segment: FiberSegment, fwhm: float) -> float:
    """Soliton period ``z0 = (pi/2) T0^2 / |beta2|`` in metres."""
    _require_anomalous(segment)
    t0 = fwhm / SECH_FWHM_FACTOR
    return 0.5 * math.pi * t0 * t0 / abs(segment.beta2)


def _require_anomalous(segment: FiberSegment) -> None:
    if segment.beta2 >= 0.0:
        raise ConfigurationError(
            "soliton quantities require anomalous dispersion (beta2 < 0), "
            f"got beta2 = {segment.beta2}"
        )


def make_sech_pulse(grid: TimeGrid, pulse: PulseSpec) -> TwoModeField:
    """Mean-field sech pulse centred on the grid, no noise.

    The envelope of each mode is ``sqrt(N_m / (2 T0)) * sech(t / T0)``
    with N_m the mode's photon number, so the pulse energy integrates to
    ``energy_total`` exactly (up to grid truncation, which the window
    validation keeps below 1e-9 relative).
    """
    if grid.dt > pulse.fwhm / 16.0:
        raise ConfigurationError(
            f"grid too coarse: dt = {grid.dt:.3e} s exceeds fwhm/16 = "
            f"{pulse.fwhm / 16.0:.3e} s"
        )
    if grid.window < 20.0 * pulse.fwhm:
        raise ConfigurationError(
            f"window too small: {grid.window:.3e} s is below 20 fwhm = "
            f"{20.0 * pulse.fwhm:.3e} s"
        )
    t0 = pulse.t0
    n_total = pulse.energy_total / photon_energy(pulse.center_wavelength)
    shape = 1.0 / np.cosh(grid.times / t0)
    env_h = np.sqrt(pulse.split_ratio * n_total / (2.0 * t0)) * shape
    env_v = np.sqrt((1.0 - pulse.split_ratio) * n_total / (2.0 * t0)) * shape
    return TwoModeField(grid, env_h.astype(np.complex128), env_v.astype(np.complex128))


def photon_number(field: TwoModeField, mode: str = "total"):
    """Photon number ``sum |A|^2 dt`` of one mode or both.

    Returns a scalar for single-trajectory fields, an array over leading
    axes for batched ones.
    """
    dt = field.grid.dt
    if mode == "h":
        return np.sum(np.abs(field.env_h) ** 2, axis=-1) * dt
    if mode == "v":
        return np.sum(np.abs(field.env_v) ** 2, axis=-1) * dt
    if mode == "total":
        return (
            np.sum(np.abs(field.env_h) ** 2, axis=-1)
            + np.sum(np.abs(field.env_v) ** 2, axis=-1)
        ) * dt
    raise ConfigurationError(f"mode must be 'h', 'v' or 'total', got {mode!r}")


def raman_response_time(t: np.ndarray, tau1: float, tau2: float) -> np.ndarray:
    """Causal Raman response ``h_R(t)``, normalised to unit integral.

    The damped-oscillator form exp(-t/tau2) sin(t/tau1) with the standard
    prefactor (tau1^2 + tau2^2) / (tau1 tau2^2); zero for t < 0.
    """
    t = np.asarray(t, dtype=np.float64)
    amp = (tau1 * tau1 + tau2 * tau2) / (tau1 * tau2 * tau2)
    out = amp * np.exp(-t / tau2) * np.sin(t / tau1)
    return np.where(t >= 0.0, out, 0.0)


def raman_response_spectrum(omega: np.ndarray, tau1: float, tau2: float) -> np.ndarray:
    """Fourier transform of ``h_R`` in the package's analysis convention.

    Defined as ``integral h_R(t) exp(-i Omega t) dt`` so that it matches
    ``rfft`` of the sampled response times dt. Equals 1 at Omega = 0; the
    imaginary part is odd and negative on the blue side, its magnitude is
    the Raman gain profile entering the phase-noise spectral density.
    """
    omega = np.asarray(omega, dtype=np.float64)
    a = 1.0 / tau2
    b = 1.0 / tau1
    amp = (tau1 * tau1 + tau2 * tau2) / (tau1 * tau2 * tau2)
    return amp * b / ((a + 1j * omega) ** 2 + b * b)


def _segment_with_gamma_zero(segment: FiberSegment) -> FiberSegment:
    """Linear copy of a segment, used by shot-noise reference runs."""
    return replace(segment, gamma=0.0)
