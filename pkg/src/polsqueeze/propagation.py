"""Split-step propagation of the two polarization modes.

Fixed-step Strang splitting: half a linear step, a full nonlinear step,
half a linear step, with interior half-steps fused into full linear
multipliers (an exact regrouping of the same composition, it only saves
FFT round trips). The linear operator covers second- and third-order
dispersion, polarization walk-off and distributed loss; the nonlinear
operator is a pure phase built from self- and cross-phase modulation, the
delayed Raman response of the mode itself, and, when enabled, a thermal
Raman phase-noise increment per step.

Cross-mode Raman coupling and self-steepening are intentionally absent;
the nonlinear coefficient of the cross term is fixed at 2/3 as
appropriate for orthogonal linear polarizations far from any resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft
from numba import njit

from .core import (
    FiberAssembly,
    FiberSegment,
    TimeGrid,
    TwoModeField,
    photon_energy,
    raman_response_time,
)
from .errors import ConfigurationError, NonFiniteFieldError, WindowEscapeError
from .sampling import (
    DEFAULT_WAVELENGTH,
    SeedPlan,
    _RamanStreams,
    raman_phase_noise_std,
)

__all__ = [
    "StepperConfig",
    "linear_half_step",
    "nonlinear_step",
    "propagate_segment",
    "propagate_assembly",
]

# How often the in-flight sanity check runs, in steps. The check costs a
# few percent of a step, the failure modes it catches (walk-off carrying a
# pulse into the window edge, blow-up from a too-large step) develop over
# many steps.
_CHECK_INTERVAL = 32


@dataclass(frozen=True)
class StepperConfig:
    """Numerical parameters of the split-step integrator.

    ``step_size`` in metres; segment lengths must be integer multiples of
    it (the config loader adjusts the step to satisfy this, the
    propagator refuses to round silently). ``temperature`` in kelvin
    feeds the Raman phase-noise occupation when ``raman_noise_enabled``.
    """

    step_size: float = 2e-3
    raman_noise_enabled: bool = True
    temperature: float = 300.0

    def __post_init__(self) -> None:
        if not (self.step_size > 0.0):
            raise ConfigurationError(f"step_size must be positive, got {self.step_size}")
        if self.temperature < 0.0:
            raise ConfigurationError(
                f"temperature must be non-negative, got {self.temperature}"
            )


def _as_batch(env: np.ndarray) -> np.ndarray:
    """View an envelope as (trajectories, samples) without copying."""
    return env.reshape(-1, env.shape[-1])


def _linear_multiplier(
    grid: TimeGrid, segment: FiberSegment, h: float, walkoff_half_rate: float
) -> np.ndarray:
    """Spectral multiplier for duration h with a signed walk-off rate."""
    omega = grid.angular_frequencies
    phase = (
        0.5 * segment.beta2 * omega**2
        + segment.beta3 * omega**3 / 6.0
        + walkoff_half_rate * omega
    )
    return np.exp((1j * phase - 0.5 * segment.loss_per_m) * h)


def linear_half_step(
    field: TwoModeField,
    segment: FiberSegment,
    h: float,
    *,
    walkoff_sign: float = 1.0,
) -> TwoModeField:
    """Linear evolution over duration ``h``.

    The name reflects the role in the Strang loop, which calls this with
    half the split step; the multiplier itself is exact for any ``h``.
    ``walkoff_sign`` (+1 or -1) says whether ``env_h`` currently rides the
    slow axis; the slow mode is delayed by ``walkoff * h / 2`` relative to
    the frame, the fast mode advanced by the same amount.
    """
    w = 0.5 * walkoff_sign * segment.walkoff
    mult_h = _linear_multiplier(field.grid, segment, h, +w)
    mult_v = _linear_multiplier(field.grid, segment, h, -w)
    env_h = _fft.fft(_fft.ifft(field.env_h, axis=-1) * mult_h, axis=-1)
    env_v = _fft.fft(_fft.ifft(field.env_v, axis=-1) * mult_v, axis=-1)
    return TwoModeField(field.grid, env_h, env_v)


def _raman_kernel_rfft(grid: TimeGrid, segment: FiberSegment) -> np.ndarray:
    """rfft of the sampled causal Raman response, unit discrete integral.

    Sampling at the grid spacing and renormalising the discrete sum keeps
    the convolution exactly flux-preserving for a flat input, so the CW
    nonlinear phase is gamma P h independent of the Raman fraction.
    """
    t = np.arange(grid.n_points) * grid.dt
    samples = raman_response_time(t, segment.raman_tau1, segment.raman_tau2)
    total = samples.sum() * grid.dt
    if total <= 0.0:
        raise ConfigurationError("Raman response sampled to a non-positive integral")
    samples /= total
    return _fft.rfft(samples) * grid.dt


@njit(cache=True)
def _nl_phase_kernel(env_h, env_v, ram_h, ram_v, noise_h, noise_v, c_spm, c_xpm, c_ram, use_ram, use_noise):  # pragma: no cover - exercised via wrappers
    n_traj, n = env_h.shape
    for i in range(n_traj):
        for j in range(n):
            zh = env_h[i, j]
            zv = env_v[i, j]
            ph = zh.real * zh.real + zh.imag * zh.imag
            pv = zv.real * zv.real + zv.imag * zv.imag
            phase_h = c_spm * ph + c_xpm * pv
            phase_v = c_spm * pv + c_xpm * ph
            if use_ram:
                phase_h += c_ram * ram_h[i, j]
                phase_v += c_ram * ram_v[i, j]
            if use_noise:
                env_h[i, j] = zh * np.exp(1j * (phase_h + noise_h[i, j]))
                env_v[i, j] = zv * np.exp(1j * (phase_v + noise_v[i, j]))
            else:
                env_h[i, j] = zh * complex(math.cos(phase_h), math.sin(phase_h))
                env_v[i, j] = zv * complex(math.cos(phase_v), math.sin(phase_v))


_DUMMY_RAM = np.zeros((1, 1))
_DUMMY_NOISE = np.zeros((1, 1), dtype=np.complex128)


def _apply_nonlinear(
    env_h: np.ndarray,
    env_v: np.ndarray,
    grid: TimeGrid,
    segment: FiberSegment,
    h: float,
    wavelength: float,
    kernel_rfft: np.ndarray | None,
    noise_h: np.ndarray | None,
    noise_v: np.ndarray | None,
) -> None:
    """Phase-only nonlinear step applied in place to (K, n) envelopes."""
    gamma_w = segment.gamma * photon_energy(wavelength)
    f_r = segment.raman_fraction
    c_spm = gamma_w * h * (1.0 - f_r)
    c_xpm = c_spm * (2.0 / 3.0)
    c_ram = gamma_w * h * f_r
    use_ram = kernel_rfft is not None and f_r > 0.0
    if use_ram:
        p_h = env_h.real**2 + env_h.imag**2
        p_v = env_v.real**2 + env_v.imag**2
        ram_h = _fft.irfft(_fft.rfft(p_h, axis=-1) * kernel_rfft, n=grid.n_points, axis=-1)
        ram_v = _fft.irfft(_fft.rfft(p_v, axis=-1) * kernel_rfft, n=grid.n_points, axis=-1)
    else:
        ram_h = ram_v = _DUMMY_RAM
    use_noise = noise_h is not None
    if not use_noise:
        noise_h = noise_v = _DUMMY_NOISE
    _nl_phase_kernel(
        env_h, env_v, ram_h, ram_v, noise_h, noise_v, c_spm, c_xpm, c_ram, use_ram, use_noise
    )


def nonlinear_step(
    field: TwoModeField,
    segment: FiberSegment,
    h: float,
    *,
    wavelength: float = DEFAULT_WAVELENGTH,
) -> TwoModeField:
    """Deterministic nonlinear phase over one step of length ``h``.

    Each mode acquires ``gamma_w h [(1 - f_R)(|A_self|^2 + (2/3)
    |A_other|^2) + f_R (h_R * |A_self|^2)]`` where the convolution uses
    the sampled causal response and gamma_w converts photon flux to
    watts. Identity when gamma = 0; magnitudes are always preserved.
    """
    out = field.copy()
    env_h = _as_batch(out.env_h)
    env_v = _as_batch(out.env_v)
    kernel = _raman_kernel_rfft(field.grid, segment) if segment.raman_fraction > 0 else None
    _apply_nonlinear(env_h, env_v, field.grid, segment, h, wavelength, kernel, None, None)
    return out


def _check_envelopes(env_h: np.ndarray, env_v: np.ndarray, grid: TimeGrid, where: str) -> None:
    # Checked per mode: opposite walk-off drifts cancel in the combined
    # power, so a joint centroid would miss the most common escape.
    for tag, env in (("h", env_h), ("v", env_v)):
        power = env.real**2 + env.imag**2
        if not np.all(np.isfinite(power)):
            bad = int(np.argwhere(~np.isfinite(power).all(axis=-1)).ravel()[0])
            raise NonFiniteFieldError(f"non-finite {tag} field in trajectory {bad} {where}")
        total = power.sum(axis=-1)
        safe = np.where(total > 0.0, total, 1.0)
        centroid = (power @ grid.times) / safe
        escaped = np.abs(centroid) > 0.4 * grid.window
        if np.any(escaped):
            bad = int(np.argmax(escaped))
            raise WindowEscapeError(
                f"{tag} pulse centroid of trajectory {bad} is within 10% of the "
                f"window edge {where}; widen the window or shorten the fibre"
            )


def _n_steps(segment: FiberSegment, stepper: StepperConfig) -> int:
    ratio = segment.length / stepper.step_size
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-6 * max(1.0, ratio):
        raise ConfigurationError(
            f"segment length {segment.length} m is not an integer multiple of "
            f"step_size {stepper.step_size} m; adjust the step at config load"
        )
    return n


def _propagate_envs(
    env_h: np.ndarray,
    env_v: np.ndarray,
    grid: TimeGrid,
    segment: FiberSegment,
    stepper: StepperConfig,
    streams: _RamanStreams | None,
    wavelength: float,
    walkoff_sign: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Strang loop over one segment on (K, n) envelopes. Returns new arrays."""
    n_steps = _n_steps(segment, stepper)
    h = stepper.step_size
    w = 0.5 * walkoff_sign * segment.walkoff

    if segment.gamma == 0.0:
        # The nonlinear step is the identity, so the whole Strang loop
        # collapses to a single exact linear multiplier for the segment.
        mult_h = _linear_multiplier(grid, segment, segment.length, +w)
        mult_v = _linear_multiplier(grid, segment, segment.length, -w)
        env_h = _fft.fft(_fft.ifft(env_h, axis=-1) * mult_h, axis=-1)
        env_v = _fft.fft(_fft.ifft(env_v, axis=-1) * mult_v, axis=-1)
        _check_envelopes(env_h, env_v, grid, f"after linear segment of {segment.length} m")
        return env_h, env_v

    half_h = _linear_multiplier(grid, segment, 0.5 * h, +w)
    half_v = _linear_multiplier(grid, segment, 0.5 * h, -w)
    full_h = half_h * half_h
    full_v = half_v * half_v
    kernel = _raman_kernel_rfft(grid, segment) if segment.raman_fraction > 0 else None

    noise = streams is not None and stepper.raman_noise_enabled
    if noise:
        noise_std = raman_phase_noise_std(grid, h, segment, stepper.temperature, wavelength)
        if not np.any(noise_std > 0.0):
            noise = False

    spec_h = _fft.ifft(env_h, axis=-1)
    spec_v = _fft.ifft(env_v, axis=-1)
    spec_h *= half_h
    spec_v *= half_v
    env_h = _fft.fft(spec_h, axis=-1)
    env_v = _fft.fft(spec_v, axis=-1)

    for step in range(n_steps):
        if noise:
            zh, zv = streams.next_step(noise_std, grid.n_points)
            noise_t_h = _fft.fft(zh, axis=-1)
            noise_t_v = _fft.fft(zv, axis=-1)
        else:
            noise_t_h = noise_t_v = None
        _apply_nonlinear(
            env_h, env_v, grid, segment, h, wavelength, kernel, noise_t_h, noise_t_v
        )
        last = step == n_steps - 1
        mh = half_h if last else full_h
        mv = half_v if last else full_v
        spec_h = _fft.ifft(env_h, axis=-1)
        spec_v = _fft.ifft(env_v, axis=-1)
        spec_h *= mh
        spec_v *= mv
        env_h = _fft.fft(spec_h, axis=-1)
        env_v = _fft.fft(spec_v, axis=-1)
        if (step + 1) % _CHECK_INTERVAL == 0 or last:
            _check_envelopes(env_h, env_v, grid, f"at step {step + 1} of {n_steps}")
    return env_h, env_v


def propagate_segment(
    field: TwoModeField,
    segment: FiberSegment,
    stepper: StepperConfig,
    plan: SeedPlan | None = None,
    *,
    wavelength: float = DEFAULT_WAVELENGTH,
    walkoff_sign: float = 1.0,
    segment_id: int = 0,
) -> TwoModeField:
    """Propagate through one segment with the Strang split-step loop.

    With ``plan`` given and Raman noise enabled, each step adds a thermal
    phase-noise increment drawn from the trajectory's per-segment stream;
    without a plan the propagation is fully deterministic (classical
    mode). Raises if the pulse approaches the window edge or the field
    goes non-finite.
    """
    streams = None
    if plan is not None and stepper.raman_noise_enabled and segment.gamma > 0.0:
        streams = _RamanStreams(
            plan.master_seed,
            plan.cohort,
            range(plan.trajectory_index, plan.trajectory_index + 1),
            segment_id,
        )
    single = field.env_h.ndim == 1
    env_h = _as_batch(field.env_h.copy())
    env_v = _as_batch(field.env_v.copy())
    env_h, env_v = _propagate_envs(
        env_h, env_v, field.grid, segment, stepper, streams, wavelength, walkoff_sign
    )
    if single:
        env_h = env_h[0]
        env_v = env_v[0]
    return TwoModeField(field.grid, env_h, env_v)


def propagate_assembly(
    field: TwoModeField,
    assembly: FiberAssembly,
    stepper: StepperConfig,
    plan: SeedPlan | None = None,
    *,
    wavelength: float = DEFAULT_WAVELENGTH,
) -> TwoModeField:
    """Propagate through both segments and the axis-swapping splice.

    The splice exchanges which physical axis is slow, modelled by
    flipping the sign of the walk-off term for the second segment while
    the arrays keep their launch-basis meaning. Splice insertion loss is
    a beamsplitter: with a plan the reflected port admits fresh vacuum,
    without one the field is scaled deterministically.
    """
    out = propagate_segment(
        field,
        assembly.first,
        stepper,
        plan,
        wavelength=wavelength,
        walkoff_sign=1.0,
        segment_id=0,
    )
    if assembly.splice_transmission < 1.0:
        from .detection import STAGE_SPLICE, apply_loss

        out = apply_loss(out, assembly.splice_transmission, plan, stage=STAGE_SPLICE)
    sign = -1.0 if assembly.axes_swapped_at_splice else 1.0
    return propagate_segment(
        out,
        assembly.second,
        stepper,
        plan,
        wavelength=wavelength,
        walkoff_sign=sign,
        segment_id=1,
    )
