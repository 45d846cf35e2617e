"""Stochastic inputs: initial vacuum, Raman phase noise, loss vacua.

Every random number in a simulation is drawn from a PCG64 generator keyed
by ``SeedSequence(master_seed, spawn_key=(cohort, purpose, trajectory,
...))``. Streams are therefore independent by construction and a
trajectory's noise depends only on its index, never on chunking or worker
count; that is what makes ensemble output byte-identical across worker
configurations.

Truncated-Wigner initial conditions add half a photon of symmetric-ordered
vacuum per temporal mode, ``<|delta A|^2> = 1/(2 dt)`` per sample. Raman
thermal phase noise is generated in the frequency domain with the
spectral density of the gain profile at the given temperature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar as _HBAR
from scipy.constants import k as _K_B

from .core import (
    FiberSegment,
    TimeGrid,
    TwoModeField,
    photon_energy,
    raman_response_spectrum,
)
from .errors import ConfigurationError

__all__ = [
    "SeedPlan",
    "vacuum_fluctuations",
    "seed_trajectory",
    "raman_noise_increment",
    "raman_phase_noise_std",
]

DEFAULT_WAVELENGTH = 1560e-9

# Purpose codes for stream spawn keys. Frozen: changing any of these
# changes every simulation result downstream of a given master seed.
_PURPOSE_VACUUM_H = 0
_PURPOSE_VACUUM_V = 1
_PURPOSE_RAMAN_H = 2
_PURPOSE_RAMAN_V = 3
_PURPOSE_LOSS = 4

# Cohort codes used by the estimator. 0 is the main ensemble and is the
# default for the public single-trajectory entry points.
COHORT_MAIN = 0
COHORT_PILOT = 1
COHORT_REFERENCE = 2
COHORT_REFERENCE_PILOT = 3


@dataclass(frozen=True)
class SeedPlan:
    """Addresses one trajectory's noise streams.

    ``cohort`` separates ensembles that must not share randomness (main,
    pilot, shot-noise reference); it defaults to the main ensemble.
    """

    master_seed: int
    trajectory_index: int
    cohort: int = COHORT_MAIN

    def __post_init__(self) -> None:
        if self.trajectory_index < 0:
            raise ConfigurationError("trajectory_index must be non-negative")


def _stream(master_seed: int, cohort: int, purpose: int, *extra: int) -> np.random.Generator:
    key = (cohort, purpose) + extra
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=key)))


def _mode_purpose(mode_tag: str, h_code: int, v_code: int) -> int:
    if mode_tag == "h":
        return h_code
    if mode_tag == "v":
        return v_code
    raise ConfigurationError(f"mode_tag must be 'h' or 'v', got {mode_tag!r}")


def _complex_normal(rng: np.random.Generator, shape: tuple, std: float | np.ndarray) -> np.ndarray:
    z = rng.standard_normal((2,) + shape)
    return (z[0] + 1j * z[1]) * std


def vacuum_fluctuations(grid: TimeGrid, plan: SeedPlan, mode_tag: str = "h") -> np.ndarray:
    """One trajectory's initial vacuum for one mode.

    Complex array over grid samples with ``<|delta|^2> = 1/(2 dt)`` per
    sample and independent real and imaginary parts. Deterministic in
    (master_seed, trajectory_index, cohort, mode_tag).
    """
    purpose = _mode_purpose(mode_tag, _PURPOSE_VACUUM_H, _PURPOSE_VACUUM_V)
    rng = _stream(plan.master_seed, plan.cohort, purpose, plan.trajectory_index)
    std = np.sqrt(1.0 / (4.0 * grid.dt))
    return _complex_normal(rng, (grid.n_points,), std)


def seed_trajectory(field: TwoModeField, plan: SeedPlan) -> TwoModeField:
    """Classical mean field plus one vacuum realisation in each mode."""
    return TwoModeField(
        field.grid,
        field.env_h + vacuum_fluctuations(field.grid, plan, "h"),
        field.env_v + vacuum_fluctuations(field.grid, plan, "v"),
    )


def raman_phase_noise_std(
    grid: TimeGrid,
    h: float,
    segment: FiberSegment,
    temperature: float,
    wavelength: float = DEFAULT_WAVELENGTH,
) -> np.ndarray:
    """Per-quadrature standard deviation of the spectral noise bins.

    The phase-noise increment over a step of length ``h`` has independent
    frequency bins with total variance ``S(Omega_k) / window`` where

        S = gamma_w f_R |Im h_R(Omega)| (n_th(|Omega|) + Theta(-Omega)) h

    and ``gamma_w = gamma * (photon energy)`` converts the photon-flux
    nonlinear coefficient to watts. ``Theta(-Omega)`` puts the spontaneous
    (zero-temperature) contribution on the red side only, where the Raman
    gain sits; the thermal occupation ``n_th`` is symmetric. The density
    vanishes at the carrier bin because Im h_R(0) = 0.

    The overall constant uses the field-gain coefficient gamma_w f_R
    Im h_R rather than the power-gain form twice that; the deterministic
    delayed-response term already amplifies the seeded vacuum, so only
    the residual reservoir part is injected here.

    Returned is ``sqrt(S / (2 window))``, the standard deviation of the
    real and imaginary parts of each bin separately.
    """
    if temperature < 0.0:
        raise ConfigurationError(f"temperature must be non-negative, got {temperature}")
    omega = grid.angular_frequencies
    gamma_w = segment.gamma * photon_energy(wavelength)
    gain = np.abs(raman_response_spectrum(omega, segment.raman_tau1, segment.raman_tau2).imag)
    occupation = np.zeros_like(omega)
    if temperature > 0.0:
        nonzero = omega != 0.0
        x = (_HBAR * np.abs(omega[nonzero])) / (_K_B * temperature)
        occupation[nonzero] = 1.0 / np.expm1(x)
    density = (
        gamma_w * segment.raman_fraction * gain * (occupation + (omega < 0.0)) * h
    )
    return np.sqrt(density / (2.0 * grid.window))


def raman_noise_increment(
    grid: TimeGrid,
    plan: SeedPlan,
    step_index: int,
    h: float,
    segment: FiberSegment,
    temperature: float = 300.0,
    *,
    mode_tag: str = "h",
    segment_id: int = 0,
    wavelength: float = DEFAULT_WAVELENGTH,
) -> np.ndarray:
    """Frequency-domain phase-noise increment for one step of one mode.

    Returns the complex spectral amplitudes ``z_k`` (fft bin layout) of
    the phase field added by the Raman reservoir over step ``step_index``;
    the time-domain phase is ``fft(z)``. Bins are independent complex
    Gaussians with ``<|z_k|^2> = S(Omega_k) / window``, zero exactly at
    the carrier, and increments of distinct steps are independent.

    The per-trajectory stream is consumed sequentially in step order, so
    reproducing step ``s`` in isolation costs O(s) draws; the propagator
    walks the stream once and never pays that.
    """
    if step_index < 0:
        raise ConfigurationError("step_index must be non-negative")
    purpose = _mode_purpose(mode_tag, _PURPOSE_RAMAN_H, _PURPOSE_RAMAN_V)
    rng = _stream(plan.master_seed, plan.cohort, purpose, plan.trajectory_index, segment_id)
    std = raman_phase_noise_std(grid, h, segment, temperature, wavelength)
    block = None
    for _ in range(step_index + 1):
        block = rng.standard_normal((2, grid.n_points))
    return (block[0] + 1j * block[1]) * std


# ---------------------------------------------------------------------------
# Batched internals used by the propagator and estimator. These reproduce
# the public per-trajectory streams row by row; they exist so ensemble code
# can amortise generator construction without touching the stream contract.


def _vacuum_batch(
    grid: TimeGrid, master_seed: int, cohort: int, trajectories: range, mode_tag: str
) -> np.ndarray:
    purpose = _mode_purpose(mode_tag, _PURPOSE_VACUUM_H, _PURPOSE_VACUUM_V)
    std = np.sqrt(1.0 / (4.0 * grid.dt))
    out = np.empty((len(trajectories), grid.n_points), dtype=np.complex128)
    for row, traj in enumerate(trajectories):
        rng = _stream(master_seed, cohort, purpose, traj)
        out[row] = _complex_normal(rng, (grid.n_points,), std)
    return out


def _loss_vacuum_batch(
    grid: TimeGrid,
    master_seed: int,
    cohort: int,
    trajectories: range,
    stage: int,
    variant: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Fresh vacuum pair (H, V) for one loss element, one array per mode."""
    std = np.sqrt(1.0 / (4.0 * grid.dt))
    n = grid.n_points
    out_h = np.empty((len(trajectories), n), dtype=np.complex128)
    out_v = np.empty((len(trajectories), n), dtype=np.complex128)
    for row, traj in enumerate(trajectories):
        rng = _stream(master_seed, cohort, _PURPOSE_LOSS, traj, stage, variant)
        out_h[row] = _complex_normal(rng, (n,), std)
        out_v[row] = _complex_normal(rng, (n,), std)
    return out_h, out_v


class _RamanStreams:
    """Sequential per-trajectory Raman noise streams for one segment.

    Holds one generator per (trajectory, mode) and draws one step's worth
    of spectral noise for the whole batch at a time, in step order, which
    matches ``raman_noise_increment`` bin for bin.
    """

    def __init__(
        self,
        master_seed: int,
        cohort: int,
        trajectories: range,
        segment_id: int,
    ) -> None:
        self._rngs_h = [
            _stream(master_seed, cohort, _PURPOSE_RAMAN_H, traj, segment_id)
            for traj in trajectories
        ]
        self._rngs_v = [
            _stream(master_seed, cohort, _PURPOSE_RAMAN_V, traj, segment_id)
            for traj in trajectories
        ]
        self._buf = None

    def next_step(self, std: np.ndarray, n_points: int) -> tuple[np.ndarray, np.ndarray]:
        k = len(self._rngs_h)
        if self._buf is None:
            self._buf = np.empty((2, n_points))
        out_h = np.empty((k, n_points), dtype=np.complex128)
        out_v = np.empty((k, n_points), dtype=np.complex128)
        buf = self._buf
        for row in range(k):
            self._rngs_h[row].standard_normal(out=buf)
            np.multiply(buf[0] + 1j * buf[1], std, out=out_h[row])
            self._rngs_v[row].standard_normal(out=buf)
            np.multiply(buf[0] + 1j * buf[1], std, out=out_v[row])
        return out_h, out_v
