"""Polarization optics and Stokes detection.

The measured object is the pulse-integrated Stokes vector. Waveplates act
as Jones matrices on the two envelopes sample by sample (plates are
treated as achromatic over the pulse bandwidth); every lossy element is a
beamsplitter whose open port admits fresh vacuum, which is what keeps a
coherent field at the shot-noise level through an arbitrary chain.

A half-wave plate at angle phi maps (S1, S2) to (cos 4phi S1 + sin 4phi
S2, sin 4phi S1 - cos 4phi S2) and flips S3, so scanning phi scans the
measured ellipse angle theta = 4 phi of the S1 projection.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import TimeGrid, TwoModeField
from .errors import ConfigurationError, DegenerateMeanFieldError
from .sampling import SeedPlan, _loss_vacuum_batch

__all__ = [
    "StokesSample",
    "DetectionChain",
    "hwp_jones",
    "apply_jones",
    "circularize",
    "set_ellipse_angle",
    "apply_loss",
    "measure_stokes",
]

# Stage tags keying the vacuum streams of the lossy elements, in chain
# order. Distinct tags keep the vacua of distinct elements independent.
STAGE_SPLICE = 0
STAGE_EXIT = 1
STAGE_EXTRA = 2
STAGE_DETECTION = 3


@dataclass(frozen=True)
class StokesSample:
    """Pulse-integrated Stokes parameters of one trajectory, in photons.

    For a physical sample ``s1^2 + s2^2 + s3^2 <= (s0 + const)^2``; the
    Wigner samples satisfy this only on average (symmetric ordering puts
    half-photon noise on every component), so it is documented rather
    than asserted here.
    """

    s0: float
    s1: float
    s2: float
    s3: float


@dataclass(frozen=True)
class DetectionChain:
    """Losses and analysis optics between fibre exit and detectors.

    ``exit_transmission`` covers the fibre end face and the finite
    interference contrast at the exit (default 4 % loss);
    ``detection_transmission`` lumps collection optics and detector
    quantum efficiency (default 12 % loss). ``extra_attenuation`` is a
    variable attenuator in front of the detectors, used by attenuation
    sweeps. ``hwp_angle`` is the half-wave-plate angle in radians.
    """

    exit_transmission: float = 0.96
    detection_transmission: float = 0.88
    hwp_angle: float = 0.0
    extra_attenuation: float = 1.0

    def __post_init__(self) -> None:
        for name in ("exit_transmission", "detection_transmission", "extra_attenuation"):
            value = getattr(self, name)
            if not (0.0 < value <= 1.0):
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")

    @property
    def total_transmission(self) -> float:
        return self.exit_transmission * self.detection_transmission * self.extra_attenuation


def hwp_jones(angle: float) -> np.ndarray:
    """Jones matrix of a half-wave plate with fast axis at ``angle``."""
    c = np.cos(2.0 * angle)
    s = np.sin(2.0 * angle)
    return np.array([[c, s], [s, -c]], dtype=np.complex128)


def apply_jones(field: TwoModeField, jones: np.ndarray) -> TwoModeField:
    """Apply a 2x2 unitary Jones matrix to the mode pair, sample by sample.

    Lossless optics only; attenuating elements go through ``apply_loss``
    so their open port admits vacuum. Matrices further than 1e-12 from
    unitary are rejected rather than silently renormalised.
    """
    jones = np.asarray(jones, dtype=np.complex128)
    if jones.shape != (2, 2):
        raise ConfigurationError(f"jones must be 2x2, got shape {jones.shape}")
    defect = np.abs(jones @ jones.conj().T - np.eye(2)).max()
    if defect > 1e-12:
        raise ConfigurationError(
            f"jones matrix is not unitary (defect {defect:.2e}); "
            "lossy elements belong in apply_loss"
        )
    env_h = jones[0, 0] * field.env_h + jones[0, 1] * field.env_v
    env_v = jones[1, 0] * field.env_h + jones[1, 1] * field.env_v
    return TwoModeField(field.grid, env_h, env_v)


def circularize(field: TwoModeField) -> np.ndarray:
    """Unitary mapping the field's polarization to circular.

    Eigendecomposes the pulse-integrated coherency matrix of the given
    (mean) field and sends the dominant polarization mode to right
    circular and the minor mode to left circular, so the transformed
    mean Stokes vector has s1 = s2 = 0 and s3 > 0. Intended for the
    ensemble-mean field of a pilot run; the returned matrix is then
    frozen and applied to every trajectory.

    Raises DegenerateMeanFieldError when the field carries no light or
    is completely unpolarized, since the dominant mode is then undefined.
    """
    if field.env_h.ndim != 1:
        raise ConfigurationError("circularize expects a single mean field, not a batch")
    dt = field.grid.dt
    h = field.env_h
    v = field.env_v
    coherency = np.array(
        [
            [np.vdot(h, h), np.vdot(v, h)],
            [np.vdot(h, v), np.vdot(v, v)],
        ],
        dtype=np.complex128,
    ) * dt
    eigvals, eigvecs = np.linalg.eigh(coherency)
    total = float(eigvals.sum().real)
    if total <= 0.0 or (eigvals[1] - eigvals[0]) <= 1e-12 * total:
        raise DegenerateMeanFieldError(
            "mean field is unpolarized or empty; cannot define a circularizing unitary"
        )
    minor, dominant = eigvecs[:, 0], eigvecs[:, 1]
    right = np.array([1.0, 1.0j]) / np.sqrt(2.0)
    left = np.array([1.0, -1.0j]) / np.sqrt(2.0)
    return np.outer(right, dominant.conj()) + np.outer(left, minor.conj())


def set_ellipse_angle(chain: DetectionChain, theta: float) -> DetectionChain:
    """Chain variant whose S1 detector reads the ellipse angle ``theta``.

    The half-wave plate rotates the measured (S1, S2) projection by four
    times its physical angle, so the plate is set to ``theta / 4``.
    Angles theta and theta + pi address the same quadrature.
    """
    return replace(chain, hwp_angle=theta / 4.0)


def apply_loss(
    field: TwoModeField,
    transmission: float,
    plan: SeedPlan | None = None,
    *,
    stage: int = 0,
    variant: int = 0,
) -> TwoModeField:
    """Beamsplitter loss: ``sqrt(T) A + sqrt(1 - T)`` fresh vacuum.

    With ``plan`` the vacuum comes from the trajectory's loss stream for
    the given ``stage`` (chain position) and ``variant`` (sweep point);
    distinct positions must pass distinct stages or their vacua would be
    correlated. Without a plan the field is scaled classically.
    ``transmission`` = 1 returns the field unchanged and consumes no
    randomness.
    """
    if not (0.0 <= transmission <= 1.0):
        raise ConfigurationError(f"transmission must lie in [0, 1], got {transmission}")
    if transmission == 1.0:
        return field
    root_t = np.sqrt(transmission)
    if plan is None:
        return TwoModeField(field.grid, root_t * field.env_h, root_t * field.env_v)
    if field.env_h.ndim != 1:
        raise ConfigurationError(
            "apply_loss with a plan addresses one trajectory; batched ensembles "
            "route through the estimator"
        )
    vac_h, vac_v = _loss_vacuum_batch(
        field.grid,
        plan.master_seed,
        plan.cohort,
        range(plan.trajectory_index, plan.trajectory_index + 1),
        stage,
        variant,
    )
    root_r = np.sqrt(1.0 - transmission)
    return TwoModeField(
        field.grid,
        root_t * field.env_h + root_r * vac_h[0],
        root_t * field.env_v + root_r * vac_v[0],
    )


def _stokes_batch(env_h: np.ndarray, env_v: np.ndarray, dt: float) -> np.ndarray:
    """Stokes parameters of (K, n) envelopes, returned as (K, 4)."""
    p_h = np.sum(env_h.real**2 + env_h.imag**2, axis=-1) * dt
    p_v = np.sum(env_v.real**2 + env_v.imag**2, axis=-1) * dt
    cross = np.sum(np.conj(env_h) * env_v, axis=-1) * dt
    out = np.empty(p_h.shape + (4,))
    out[..., 0] = p_h + p_v
    out[..., 1] = p_h - p_v
    out[..., 2] = 2.0 * cross.real
    out[..., 3] = 2.0 * cross.imag
    return out


def measure_stokes(field: TwoModeField):
    """Pulse-integrated Stokes parameters.

    Returns a StokesSample for a single-trajectory field, a (K, 4) array
    (columns s0..s3) for a batched one.
    """
    env_h = field.env_h
    env_v = field.env_v
    if env_h.ndim == 1:
        values = _stokes_batch(env_h[None, :], env_v[None, :], field.grid.dt)[0]
        return StokesSample(*map(float, values))
    return _stokes_batch(env_h, env_v, field.grid.dt)
