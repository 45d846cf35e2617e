"""Ensemble squeezing estimation.

The measured quantity is the variance of a pulse-integrated Stokes
projection over a trajectory ensemble, referenced to the shot noise of a
coherent ensemble (a gamma = 0 run through the identical detection
chain). Squeezing and antisqueezing come from the eigendecomposition of
the (S1, S2) sample covariance; scanning the measurement angle is a
presentation of the same covariance, not an independent estimate.

Calibration mirrors the experimental procedure: a pilot ensemble fixes
the unitary that circularizes the mean output polarization and the
half-wave-plate zero that aligns theta = 0 with the minimum-variance
axis; both are frozen before the main ensemble runs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import SimulationConfig
from .core import TwoModeField, make_sech_pulse
from .detection import (
    STAGE_DETECTION,
    STAGE_EXIT,
    STAGE_EXTRA,
    STAGE_SPLICE,
    StokesSample,
    _stokes_batch,
    circularize,
    hwp_jones,
)
from .errors import (
    ConfigurationError,
    CovarianceError,
    NumericalError,
    UnphysicalInputError,
)
from .propagation import _propagate_envs
from .sampling import (
    COHORT_MAIN,
    COHORT_PILOT,
    COHORT_REFERENCE,
    COHORT_REFERENCE_PILOT,
    _loss_vacuum_batch,
    _RamanStreams,
    _vacuum_batch,
)

__all__ = [
    "SqueezingResult",
    "EnsembleRecord",
    "ShotNoiseReference",
    "run_ensemble",
    "shot_noise_reference",
    "estimate_squeezing",
    "stokes_covariance",
    "squeezing_from_cov",
    "angle_sweep",
    "attenuation_sweep",
    "infer_lossless",
    "energy_duration_sweep",
    "bootstrap_stderr_db",
    "stderr_db_for",
]

# Trajectories per batch job. Fixed independent of worker count so that
# stream consumption, and therefore every sample, is identical however
# the work is distributed.
_CHUNK = 128


@dataclass(frozen=True)
class SqueezingResult:
    """Squeezing estimate from one ensemble.

    Variances are in photons^2; ``squeezing_db`` and ``antisqueezing_db``
    are relative to ``shot_noise``; ``theta_opt`` is the minimum-variance
    ellipse angle in the measured frame, in [-pi/2, pi/2). ``stderr_db``
    is the one-sigma upper log-width of the variance estimate,
    ``10 log10(1 + sqrt(2/(K-1)))``.
    """

    var_squeezed: float
    var_antisqueezed: float
    theta_opt: float
    shot_noise: float
    squeezing_db: float
    antisqueezing_db: float
    stderr_db: float
    n_trajectories: int


@dataclass(frozen=True)
class ShotNoiseReference:
    """Coherent-ensemble noise reference through the identical chain.

    ``var_s1`` is the reference used for normalisation; ``var_s0`` is the
    independent estimate from the total-intensity channel, computed from
    the same trajectories and checked for statistical agreement at run
    time.
    """

    var_s1: float
    var_s0: float
    mean_s0: float
    n_trajectories: int


@dataclass
class EnsembleRecord:
    """Per-trajectory Stokes samples plus provenance."""

    samples: list[StokesSample]
    config_digest: str
    master_seed: int

    def stokes_array(self) -> np.ndarray:
        """Samples as a (K, 4) float array, columns s0..s3."""
        return np.array([[s.s0, s.s1, s.s2, s.s3] for s in self.samples])


def stderr_db_for(n_trajectories: int) -> float:
    """One-sigma dB width of a variance estimate from K trajectories."""
    if n_trajectories < 2:
        raise ConfigurationError("need at least 2 trajectories for a variance")
    return 10.0 * math.log10(1.0 + math.sqrt(2.0 / (n_trajectories - 1)))


# --- pipeline internals ----------------------------------------------------


@dataclass
class _Pieces:
    config: SimulationConfig
    classical_h: np.ndarray
    classical_v: np.ndarray
    assembly: object
    wavelength: float


def _make_pieces(config: SimulationConfig, gamma_zero: bool = False) -> _Pieces:
    classical = make_sech_pulse(config.grid, config.pulse)
    assembly = config.assembly
    if gamma_zero:
        assembly = replace(
            assembly,
            first=replace(assembly.first, gamma=0.0),
            second=replace(assembly.second, gamma=0.0),
        )
    return _Pieces(
        config=config,
        classical_h=classical.env_h,
        classical_v=classical.env_v,
        assembly=assembly,
        wavelength=config.pulse.center_wavelength,
    )


def _map_chunks(total: int, fn, workers: int) -> list:
    ranges = [range(i, min(i + _CHUNK, total)) for i in range(0, total, _CHUNK)]
    if workers <= 1 or len(ranges) == 1:
        return [fn(r) for r in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, ranges))


def _loss_batch(env_h, env_v, grid, transmission, master, cohort, rows, stage, variant):
    if transmission == 1.0:
        return env_h, env_v
    vac_h, vac_v = _loss_vacuum_batch(grid, master, cohort, rows, stage, variant)
    root_t = math.sqrt(transmission)
    root_r = math.sqrt(1.0 - transmission)
    return root_t * env_h + root_r * vac_h, root_t * env_v + root_r * vac_v


def _chunk_fields(pieces: _Pieces, cohort: int, rows: range):
    """One chunk from launch through fibre, splice and exit loss."""
    config = pieces.config
    grid = config.grid
    stepper = config.stepper
    master = config.master_seed
    env_h = _vacuum_batch(grid, master, cohort, rows, "h")
    env_v = _vacuum_batch(grid, master, cohort, rows, "v")
    env_h += pieces.classical_h
    env_v += pieces.classical_v
    assembly = pieces.assembly
    noisy = stepper.raman_noise_enabled
    try:
        streams = (
            _RamanStreams(master, cohort, rows, 0)
            if noisy and assembly.first.gamma > 0.0
            else None
        )
        env_h, env_v = _propagate_envs(
            env_h, env_v, grid, assembly.first, stepper, streams, pieces.wavelength, 1.0
        )
        env_h, env_v = _loss_batch(
            env_h, env_v, grid, assembly.splice_transmission, master, cohort, rows,
            STAGE_SPLICE, 0,
        )
        sign = -1.0 if assembly.axes_swapped_at_splice else 1.0
        streams = (
            _RamanStreams(master, cohort, rows, 1)
            if noisy and assembly.second.gamma > 0.0
            else None
        )
        env_h, env_v = _propagate_envs(
            env_h, env_v, grid, assembly.second, stepper, streams, pieces.wavelength, sign
        )
    except NumericalError as exc:
        raise type(exc)(
            f"{exc} (in trajectory block {rows.start}..{rows.stop - 1})"
        ) from exc
    env_h, env_v = _loss_batch(
        env_h, env_v, grid, config.chain.exit_transmission, master, cohort, rows,
        STAGE_EXIT, 0,
    )
    return env_h, env_v


def _apply_jones_batch(env_h, env_v, jones):
    return (
        jones[0, 0] * env_h + jones[0, 1] * env_v,
        jones[1, 0] * env_h + jones[1, 1] * env_v,
    )


def _detect_batch(env_h, env_v, pieces, cohort, rows, *, extra_attenuation, variant):
    config = pieces.config
    grid = config.grid
    master = config.master_seed
    env_h, env_v = _loss_batch(
        env_h, env_v, grid, extra_attenuation, master, cohort, rows, STAGE_EXTRA, variant
    )
    env_h, env_v = _loss_batch(
        env_h, env_v, grid, config.chain.detection_transmission, master, cohort, rows,
        STAGE_DETECTION, variant,
    )
    return _stokes_batch(env_h, env_v, grid.dt)


def _min_variance_angle(cov: np.ndarray) -> float:
    half_diff = 0.5 * (cov[0, 0] - cov[1, 1])
    angle = 0.5 * (math.atan2(cov[0, 1], half_diff) + math.pi)
    return (angle + math.pi / 2.0) % math.pi - math.pi / 2.0


def _calibrate(pieces: _Pieces, cohort: int, workers: int):
    """Frozen circularizing unitary and plate zero from a pilot ensemble."""
    config = pieces.config
    if config.pulse.energy_total == 0.0:
        return np.eye(2, dtype=np.complex128), 0.0
    parts = _map_chunks(
        config.pilot_trajectories, lambda r: _chunk_fields(pieces, cohort, r), workers
    )
    env_h = np.concatenate([p[0] for p in parts], axis=0)
    env_v = np.concatenate([p[1] for p in parts], axis=0)
    mean_field = TwoModeField(config.grid, env_h.mean(axis=0), env_v.mean(axis=0))
    u_cal = circularize(mean_field)
    env_h, env_v = _apply_jones_batch(env_h, env_v, u_cal)
    stokes = _stokes_batch(env_h, env_v, config.grid.dt)
    cov = np.cov(stokes[:, 1], stokes[:, 2])
    theta_cal = _min_variance_angle(cov)
    return u_cal, theta_cal


def _measurement_jones(chain_angle: float, theta_cal: float, u_cal: np.ndarray) -> np.ndarray:
    return hwp_jones(chain_angle + theta_cal / 4.0) @ u_cal


def _ensemble_stokes(pieces, u_cal, theta_cal, cohort, count, workers):
    jones = _measurement_jones(pieces.config.chain.hwp_angle, theta_cal, u_cal)

    def job(rows: range) -> np.ndarray:
        env_h, env_v = _chunk_fields(pieces, cohort, rows)
        env_h, env_v = _apply_jones_batch(env_h, env_v, jones)
        return _detect_batch(
            env_h, env_v, pieces, cohort, rows,
            extra_attenuation=pieces.config.chain.extra_attenuation, variant=0,
        )

    return np.concatenate(_map_chunks(count, job, workers), axis=0)


# --- public estimation API -------------------------------------------------


def run_ensemble(config: SimulationConfig, *, workers: int = 1) -> EnsembleRecord:
    """Simulate the configured ensemble and record per-trajectory Stokes.

    Runs the pilot calibration, freezes it, then propagates
    ``config.n_trajectories`` trajectories through fibre and detection.
    Identical configs give identical records; worker count changes only
    wall time.
    """
    pieces = _make_pieces(config)
    u_cal, theta_cal = _calibrate(pieces, COHORT_PILOT, workers)
    stokes = _ensemble_stokes(pieces, u_cal, theta_cal, COHORT_MAIN, config.n_trajectories, workers)
    samples = [StokesSample(*map(float, row)) for row in stokes]
    return EnsembleRecord(samples, config.digest, config.master_seed)


def shot_noise_reference(
    config: SimulationConfig, *, workers: int = 1, n_trajectories: int | None = None
) -> ShotNoiseReference:
    """Shot-noise level from a gamma = 0 run through the identical chain.

    Both Var(S1) and Var(S0) estimate the same coherent noise level; they
    are computed from the same trajectories and a discrepancy beyond five
    standard errors of their difference raises, since it signals a broken
    detection chain rather than statistics.
    """
    count = config.n_trajectories if n_trajectories is None else int(n_trajectories)
    if count < 2:
        raise ConfigurationError("shot-noise reference needs at least 2 trajectories")
    pieces = _make_pieces(config, gamma_zero=True)
    u_cal, theta_cal = _calibrate(pieces, COHORT_REFERENCE_PILOT, workers)
    stokes = _ensemble_stokes(pieces, u_cal, theta_cal, COHORT_REFERENCE, count, workers)
    var_s1 = float(np.var(stokes[:, 1], ddof=1))
    var_s0 = float(np.var(stokes[:, 0], ddof=1))
    mean_s0 = float(np.mean(stokes[:, 0]))
    tolerance = 10.0 * max(mean_s0, 1.0) / math.sqrt(count - 1)
    if abs(var_s0 - var_s1) > tolerance:
        raise NumericalError(
            f"shot-noise cross-check failed: Var(S0) = {var_s0:.6g} and "
            f"Var(S1) = {var_s1:.6g} differ beyond statistics"
        )
    return ShotNoiseReference(var_s1, var_s0, mean_s0, count)


def stokes_covariance(record: EnsembleRecord) -> tuple[np.ndarray, np.ndarray]:
    """Unbiased 2x2 covariance of (S1, S2) and the means of S0..S3."""
    arr = record.stokes_array()
    if arr.shape[0] < 2:
        raise ConfigurationError("need at least 2 samples for a covariance")
    cov = np.cov(arr[:, 1], arr[:, 2], ddof=1)
    return cov, arr.mean(axis=0)


def squeezing_from_cov(
    cov: np.ndarray, shot_noise: float, n_trajectories: int
) -> SqueezingResult:
    """Squeezing numbers from an (S1, S2) covariance and a noise reference.

    Eigendecomposition of the 2x2 covariance gives the minimum and
    maximum projection variances and the optimum angle; dB values are
    relative to ``shot_noise``.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2):
        raise ConfigurationError(f"covariance must be 2x2, got shape {cov.shape}")
    if abs(cov[0, 1] - cov[1, 0]) > 1e-9 * (abs(cov[0, 1]) + abs(cov[1, 0]) + 1e-300):
        raise CovarianceError("covariance matrix is not symmetric")
    if shot_noise <= 0.0:
        raise ConfigurationError(f"shot_noise must be positive, got {shot_noise}")
    mean = 0.5 * (cov[0, 0] + cov[1, 1])
    half_diff = 0.5 * (cov[0, 0] - cov[1, 1])
    radius = math.hypot(half_diff, cov[0, 1])
    lo = mean - radius
    hi = mean + radius
    if lo < -1e-12 * max(hi, 1.0):
        raise CovarianceError(
            f"covariance matrix is not positive semidefinite (eigenvalue {lo:.3e})"
        )
    lo = max(lo, 0.0)
    return SqueezingResult(
        var_squeezed=lo,
        var_antisqueezed=hi,
        theta_opt=_min_variance_angle(cov),
        shot_noise=shot_noise,
        squeezing_db=10.0 * math.log10(lo / shot_noise) if lo > 0.0 else -math.inf,
        antisqueezing_db=10.0 * math.log10(hi / shot_noise),
        stderr_db=stderr_db_for(n_trajectories),
        n_trajectories=n_trajectories,
    )


def estimate_squeezing(
    config: SimulationConfig, *, workers: int = 1
) -> tuple[SqueezingResult, EnsembleRecord, ShotNoiseReference]:
    """Full pipeline: ensemble, shot-noise reference, covariance estimate."""
    record = run_ensemble(config, workers=workers)
    reference = shot_noise_reference(config, workers=workers)
    cov, _ = stokes_covariance(record)
    result = squeezing_from_cov(cov, reference.var_s1, config.n_trajectories)
    if config.bootstrap_resamples > 0:
        result = replace(
            result,
            stderr_db=bootstrap_stderr_db(
                record, reference.var_s1, n_resamples=config.bootstrap_resamples
            ),
        )
    return result, record, reference


def angle_sweep(record: EnsembleRecord, thetas) -> list[tuple[float, float, float]]:
    """Variance of the Stokes projection at each ellipse angle.

    Projections ``cos(theta) S1 + sin(theta) S2`` of the recorded
    samples; every angle reuses the same trajectories, so the sweep is a
    presentation of the covariance, not independent data. Returns
    (theta, variance, variance stderr) per angle.
    """
    arr = record.stokes_array()
    if arr.shape[0] < 2:
        raise ConfigurationError("need at least 2 samples for a variance")
    k = arr.shape[0]
    rel = math.sqrt(2.0 / (k - 1))
    out = []
    for theta in thetas:
        proj = math.cos(theta) * arr[:, 1] + math.sin(theta) * arr[:, 2]
        var = float(np.var(proj, ddof=1))
        out.append((float(theta), var, var * rel))
    return out


def attenuation_sweep(
    config: SimulationConfig, transmissions, *, workers: int = 1
) -> list[tuple[float, float]]:
    """Normalized squeezed variance versus detection-path transmission.

    The fibre is propagated once; each transmission point re-detects the
    cached post-calibration fields with its own attenuator and detector
    vacua, normalising by a coherent reference detected the same way
    (same-power shot noise). Holds the whole ensemble's fields in memory,
    about ``32 K n_points`` bytes.
    """
    transmissions = [float(t) for t in transmissions]
    for t in transmissions:
        if not (0.0 <= t <= 1.0):
            raise ConfigurationError(f"transmission must lie in [0, 1], got {t}")

    def cached_fields(gamma_zero, pilot_cohort, main_cohort):
        pieces = _make_pieces(config, gamma_zero=gamma_zero)
        u_cal, theta_cal = _calibrate(pieces, pilot_cohort, workers)
        jones = _measurement_jones(config.chain.hwp_angle, theta_cal, u_cal)

        def job(rows: range):
            env_h, env_v = _chunk_fields(pieces, main_cohort, rows)
            return _apply_jones_batch(env_h, env_v, jones)

        parts = _map_chunks(config.n_trajectories, job, workers)
        return (
            pieces,
            np.concatenate([p[0] for p in parts], axis=0),
            np.concatenate([p[1] for p in parts], axis=0),
        )

    sq_pieces, sq_h, sq_v = cached_fields(False, COHORT_PILOT, COHORT_MAIN)
    ref_pieces, ref_h, ref_v = cached_fields(True, COHORT_REFERENCE_PILOT, COHORT_REFERENCE)
    rows = range(config.n_trajectories)
    out = []
    for i, t in enumerate(transmissions):
        variant = i + 1  # variant 0 belongs to plain runs
        sq = _detect_batch(
            sq_h, sq_v, sq_pieces, COHORT_MAIN, rows, extra_attenuation=t, variant=variant
        )
        ref = _detect_batch(
            ref_h, ref_v, ref_pieces, COHORT_REFERENCE, rows, extra_attenuation=t,
            variant=variant,
        )
        var_sq = float(np.var(sq[:, 1], ddof=1))
        var_ref = float(np.var(ref[:, 1], ddof=1))
        out.append((t, var_sq / var_ref))
    return out


def infer_lossless(observed_db: float, transmission: float) -> float:
    """Invert the linear-loss law for the lossless squeezing level.

    ``V_obs = T V_in + (1 - T)`` in shot-noise units, so observations at
    or above the vacuum floor ``1 - T`` are required; anything at or
    below it cannot come from finite input squeezing.
    """
    if not (0.0 < transmission <= 1.0):
        raise ConfigurationError(f"transmission must lie in (0, 1], got {transmission}")
    v_obs = 10.0 ** (observed_db / 10.0)
    floor = 1.0 - transmission
    if v_obs <= floor:
        raise UnphysicalInputError(
            f"observed variance {v_obs:.4g} (shot-noise units) is at or below "
            f"the vacuum floor {floor:.4g} for transmission {transmission}"
        )
    return 10.0 * math.log10((v_obs - floor) / transmission)


def energy_duration_sweep(
    config: SimulationConfig, durations, energies, *, workers: int = 1
) -> list[tuple[float, float, SqueezingResult]]:
    """Squeezing across a grid of pulse durations and energies.

    Each cell reruns the full pipeline (own calibration, own shot-noise
    reference) at the given fwhm and total energy, on a window resized to
    the duration so all cells share the same point count; seeds are
    shared across cells, so comparisons benefit from common random
    numbers. Returns (fwhm, energy, result) rows in grid order.
    """
    durations = [float(d) for d in durations]
    energies = [float(e) for e in energies]
    if not durations or not energies:
        raise ConfigurationError("durations and energies must be non-empty")
    rows = []
    for fwhm in durations:
        cell_grid = _sweep_grid(config, fwhm)
        for energy in energies:
            cell = replace(
                config,
                pulse=replace(config.pulse, fwhm=fwhm, energy_total=energy),
                grid=cell_grid,
            )
            result, _, _ = estimate_squeezing(cell, workers=workers)
            rows.append((fwhm, energy, result))
    return rows


def _sweep_grid(config: SimulationConfig, fwhm: float):
    assembly = config.assembly
    max_delay = max(
        assembly.first.walkoff * assembly.first.length,
        assembly.second.walkoff * assembly.second.length,
    )
    window = 20.0 * fwhm + 2.0 * max_delay + 0.6e-12
    return type(config.grid)(config.grid.n_points, window)


def bootstrap_stderr_db(
    record: EnsembleRecord,
    shot_noise: float,
    *,
    n_resamples: int = 1000,
    seed: int | None = None,
) -> float:
    """Bootstrap standard error of squeezing_db over trajectories.

    Resamples trajectories with replacement and recomputes the minimum
    covariance eigenvalue each time; useful when the Gaussian
    variance-of-variance formula is in doubt. Seeded from the record's
    master seed by default.
    """
    if shot_noise <= 0.0:
        raise ConfigurationError(f"shot_noise must be positive, got {shot_noise}")
    if n_resamples < 2:
        raise ConfigurationError("n_resamples must be at least 2")
    arr = record.stokes_array()[:, 1:3]
    k = arr.shape[0]
    if k < 2:
        raise ConfigurationError("need at least 2 samples to bootstrap")
    base = record.master_seed if seed is None else seed
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(base, spawn_key=(99, 0)))
    )
    values = np.empty(n_resamples)
    for i in range(n_resamples):
        pick = arr[rng.integers(0, k, size=k)]
        cov = np.cov(pick[:, 0], pick[:, 1], ddof=1)
        mean = 0.5 * (cov[0, 0] + cov[1, 1])
        radius = math.hypot(0.5 * (cov[0, 0] - cov[1, 1]), cov[0, 1])
        lo = max(mean - radius, 1e-300)
        values[i] = 10.0 * math.log10(lo / shot_noise)
    return float(np.std(values, ddof=1))
