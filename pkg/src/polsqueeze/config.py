"""Simulation configuration: schema, validation, presets, digest.

Configs are plain JSON with one object per subsystem. Canonical
serialization (sorted keys, no whitespace, shortest-roundtrip floats)
defines the config digest embedded in every result, so two runs agree on
identity iff their canonical forms are byte-equal.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .core import FiberAssembly, FiberSegment, PulseSpec, TimeGrid
from .detection import DetectionChain
from .errors import ConfigurationError
from .propagation import StepperConfig

__all__ = [
    "SimulationConfig",
    "load_config",
    "loads_config",
    "preset_config",
    "canonical_json",
    "config_digest",
]


@dataclass(frozen=True)
class SimulationConfig:
    """Everything a run needs, validated and with the step already adjusted."""

    pulse: PulseSpec
    assembly: FiberAssembly
    grid: TimeGrid
    stepper: StepperConfig
    chain: DetectionChain
    n_trajectories: int = 3000
    pilot_trajectories: int = 100
    master_seed: int = 1905
    bootstrap_resamples: int = 0

    def __post_init__(self) -> None:
        if self.n_trajectories < 2:
            raise ConfigurationError(
                f"n_trajectories must be at least 2, got {self.n_trajectories}"
            )
        if self.pilot_trajectories < 2:
            raise ConfigurationError(
                f"pilot_trajectories must be at least 2, got {self.pilot_trajectories}"
            )
        if self.bootstrap_resamples < 0:
            raise ConfigurationError("bootstrap_resamples must be non-negative")
        _validate_grid(self.grid, self.pulse, self.assembly)
        _require_commensurate(self.assembly, self.stepper)

    @property
    def digest(self) -> str:
        return config_digest(self)


def _validate_grid(grid: TimeGrid, pulse: PulseSpec, assembly: FiberAssembly) -> None:
    if pulse.fwhm > 0.0 and grid.dt > pulse.fwhm / 16.0:
        raise ConfigurationError(
            f"grid too coarse for the pulse: dt = {grid.dt:.3e} s must not "
            f"exceed fwhm/16 = {pulse.fwhm / 16.0:.3e} s"
        )
    max_delay = max(
        assembly.first.walkoff * assembly.first.length,
        assembly.second.walkoff * assembly.second.length,
    )
    required = 20.0 * pulse.fwhm + 2.0 * max_delay
    if grid.window < required:
        raise ConfigurationError(
            f"window too small: {grid.window:.3e} s, need at least 20 fwhm + "
            f"twice the worst-case walk-off delay = {required:.3e} s"
        )


def _require_commensurate(assembly: FiberAssembly, stepper: StepperConfig) -> None:
    for segment in (assembly.first, assembly.second):
        ratio = segment.length / stepper.step_size
        if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
            raise ConfigurationError(
                f"segment length {segment.length} m is not an integer multiple "
                f"of step_size {stepper.step_size} m"
            )


def adjusted_step_size(assembly: FiberAssembly, requested: float) -> float:
    """Largest step <= requested that divides both segment lengths.

    Lengths are rationalised (they are metre values with at most
    nanometre precision in practice) and the common measure is divided
    down until it fits under the requested step; a 2 mm request against
    2.615 m and 2.585 m segments lands on 5/3 mm.
    """
    if requested <= 0.0:
        raise ConfigurationError(f"step_size must be positive, got {requested}")
    f1 = Fraction(assembly.first.length).limit_denominator(10**9)
    f2 = Fraction(assembly.second.length).limit_denominator(10**9)
    if f1 <= 0 or f2 <= 0:
        raise ConfigurationError("segment lengths must be positive")
    common = Fraction(
        math.gcd(f1.numerator * f2.denominator, f2.numerator * f1.denominator),
        f1.denominator * f2.denominator,
    )
    k = max(1, math.ceil(common / Fraction(requested).limit_denominator(10**9) - Fraction(1, 10**9)))
    step = common / k
    # Guard against pathological float rounding pushing the step above the
    # request by more than a part in 1e9.
    while float(step) > requested * (1.0 + 1e-9):
        k += 1
        step = common / k
    return float(step)


# --- JSON schema -----------------------------------------------------------

_PRESETS = {
    "paper": {
        "pulse": {
            "fwhm_s": 200e-15,
            "energy_total_j": 160e-12,
            "center_wavelength_m": 1.56e-6,
            "split_ratio": 0.5,
        },
        "fiber": {
            "first_length_m": 2.615,
            "second_length_m": 2.585,
            "beta2_s2_per_m": -1.05e-26,
            "beta3_s3_per_m": 1.55e-40,
            "gamma_per_w_m": 3.0e-3,
            "walkoff_s_per_m": 1.5e-12,
            "loss_per_m": 0.0,
            "raman_fraction": 0.18,
            "raman_tau1_s": 12.2e-15,
            "raman_tau2_s": 32.0e-15,
            "splice_transmission": 0.96,
            "axes_swapped_at_splice": True,
        },
        "grid": {"n_points": 1024, "window_s": 12.5e-12},
        "stepper": {"step_size_m": 2.0e-3, "raman_noise": True, "temperature_k": 300.0},
        "detection": {
            "exit_transmission": 0.96,
            "detection_transmission": 0.88,
            "hwp_angle_rad": 0.0,
            "extra_attenuation": 1.0,
        },
        "ensemble": {
            "n_trajectories": 3000,
            "pilot_trajectories": 100,
            "master_seed": 1905,
            "bootstrap_resamples": 0,
        },
    }
}

_SECTION_KEYS = {
    "pulse": {"fwhm_s", "energy_total_j", "center_wavelength_m", "split_ratio"},
    "fiber": {
        "first_length_m",
        "second_length_m",
        "beta2_s2_per_m",
        "beta3_s3_per_m",
        "gamma_per_w_m",
        "walkoff_s_per_m",
        "loss_per_m",
        "raman_fraction",
        "raman_tau1_s",
        "raman_tau2_s",
        "splice_transmission",
        "axes_swapped_at_splice",
    },
    "grid": {"n_points", "window_s"},
    "stepper": {"step_size_m", "raman_noise", "temperature_k"},
    "detection": {
        "exit_transmission",
        "detection_transmission",
        "hwp_angle_rad",
        "extra_attenuation",
    },
    "ensemble": {
        "n_trajectories",
        "pilot_trajectories",
        "master_seed",
        "bootstrap_resamples",
    },
}


def _check_schema(data: dict) -> None:
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a JSON object")
    unknown_sections = set(data) - set(_SECTION_KEYS)
    if unknown_sections:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown_sections)}")
    for section, keys in _SECTION_KEYS.items():
        if section not in data:
            raise ConfigurationError(f"missing config section {section!r}")
        if not isinstance(data[section], dict):
            raise ConfigurationError(f"config section {section!r} must be an object")
        unknown = set(data[section]) - keys
        if unknown:
            raise ConfigurationError(
                f"unknown keys in section {section!r}: {sorted(unknown)}"
            )
        missing = keys - set(data[section])
        if missing:
            raise ConfigurationError(
                f"missing keys in section {section!r}: {sorted(missing)}"
            )


def _config_from_dict(data: dict) -> SimulationConfig:
    _check_schema(data)
    p = data["pulse"]
    f = data["fiber"]
    g = data["grid"]
    s = data["stepper"]
    d = data["detection"]
    e = data["ensemble"]
    try:
        pulse = PulseSpec(
            fwhm=float(p["fwhm_s"]),
            energy_total=float(p["energy_total_j"]),
            center_wavelength=float(p["center_wavelength_m"]),
            split_ratio=float(p["split_ratio"]),
        )
        common = dict(
            beta2=float(f["beta2_s2_per_m"]),
            beta3=float(f["beta3_s3_per_m"]),
            gamma=float(f["gamma_per_w_m"]),
            walkoff=float(f["walkoff_s_per_m"]),
            loss_per_m=float(f["loss_per_m"]),
            raman_fraction=float(f["raman_fraction"]),
            raman_tau1=float(f["raman_tau1_s"]),
            raman_tau2=float(f["raman_tau2_s"]),
        )
        assembly = FiberAssembly(
            first=FiberSegment(length=float(f["first_length_m"]), **common),
            second=FiberSegment(length=float(f["second_length_m"]), **common),
            splice_transmission=float(f["splice_transmission"]),
            axes_swapped_at_splice=bool(f["axes_swapped_at_splice"]),
        )
        grid = TimeGrid(n_points=int(g["n_points"]), window=float(g["window_s"]))
        stepper = StepperConfig(
            step_size=adjusted_step_size(assembly, float(s["step_size_m"])),
            raman_noise_enabled=bool(s["raman_noise"]),
            temperature=float(s["temperature_k"]),
        )
        chain = DetectionChain(
            exit_transmission=float(d["exit_transmission"]),
            detection_transmission=float(d["detection_transmission"]),
            hwp_angle=float(d["hwp_angle_rad"]),
            extra_attenuation=float(d["extra_attenuation"]),
        )
        return SimulationConfig(
            pulse=pulse,
            assembly=assembly,
            grid=grid,
            stepper=stepper,
            chain=chain,
            n_trajectories=int(e["n_trajectories"]),
            pilot_trajectories=int(e["pilot_trajectories"]),
            master_seed=int(e["master_seed"]),
            bootstrap_resamples=int(e["bootstrap_resamples"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid config value: {exc}") from exc


def _config_to_dict(config: SimulationConfig) -> dict:
    a = config.assembly
    seg = a.first
    return {
        "pulse": {
            "fwhm_s": config.pulse.fwhm,
            "energy_total_j": config.pulse.energy_total,
            "center_wavelength_m": config.pulse.center_wavelength,
            "split_ratio": config.pulse.split_ratio,
        },
        "fiber": {
            "first_length_m": a.first.length,
            "second_length_m": a.second.length,
            "beta2_s2_per_m": seg.beta2,
            "beta3_s3_per_m": seg.beta3,
            "gamma_per_w_m": seg.gamma,
            "walkoff_s_per_m": seg.walkoff,
            "loss_per_m": seg.loss_per_m,
            "raman_fraction": seg.raman_fraction,
            "raman_tau1_s": seg.raman_tau1,
            "raman_tau2_s": seg.raman_tau2,
            "splice_transmission": a.splice_transmission,
            "axes_swapped_at_splice": a.axes_swapped_at_splice,
        },
        "grid": {"n_points": config.grid.n_points, "window_s": config.grid.window},
        "stepper": {
            "step_size_m": config.stepper.step_size,
            "raman_noise": config.stepper.raman_noise_enabled,
            "temperature_k": config.stepper.temperature,
        },
        "detection": {
            "exit_transmission": config.chain.exit_transmission,
            "detection_transmission": config.chain.detection_transmission,
            "hwp_angle_rad": config.chain.hwp_angle,
            "extra_attenuation": config.chain.extra_attenuation,
        },
        "ensemble": {
            "n_trajectories": config.n_trajectories,
            "pilot_trajectories": config.pilot_trajectories,
            "master_seed": config.master_seed,
            "bootstrap_resamples": config.bootstrap_resamples,
        },
    }


def canonical_json(config: SimulationConfig) -> str:
    """Canonical serialization: sorted keys, compact, roundtrip floats."""
    return json.dumps(_config_to_dict(config), sort_keys=True, separators=(",", ":"))


def config_digest(config: SimulationConfig) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()[:16]


def loads_config(text: str) -> SimulationConfig:
    """Parse a config from a JSON string."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"could not parse config JSON: {exc}") from exc
    return _config_from_dict(data)


def load_config(path: str) -> SimulationConfig:
    """Load and validate a config file; the step size is adjusted here."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"could not read config file {path!r}: {exc}") from exc
    return loads_config(text)


def preset_config(
    name: str,
    *,
    master_seed: int | None = None,
    n_trajectories: int | None = None,
) -> SimulationConfig:
    """Built-in configuration by name (currently only ``paper``)."""
    if name not in _PRESETS:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {sorted(_PRESETS)}"
        )
    config = _config_from_dict(json.loads(json.dumps(_PRESETS[name])))
    if master_seed is not None:
        config = replace(config, master_seed=int(master_seed))
    if n_trajectories is not None:
        config = replace(config, n_trajectories=int(n_trajectories))
    return config


def dump_config(config: SimulationConfig) -> str:
    """Pretty JSON form of a config, suitable for editing and reloading."""
    return json.dumps(_config_to_dict(config), indent=2, sort_keys=True) + "\n"
