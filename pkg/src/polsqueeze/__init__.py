"""Truncated-Wigner simulation of polarization squeezing in PM fibre.

A sech pulse launched at 45 degrees to the axes of a two-segment
polarization-maintaining fibre (axes exchanged at the splice) builds up
Kerr squeezing in both modes; a Stokes measurement behind a calibrated
waveplate chain reads out the polarization-squeezed uncertainty ellipse.
Quantum noise enters as half a photon per temporal mode on the initial
envelopes, as fresh vacuum at every lossy element, and as thermal Raman
phase noise along the fibre; ensemble statistics of the trajectories
approximate symmetric-ordered quantum expectation values.
"""

from .core import (
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
from .detection import (
    DetectionChain,
    StokesSample,
    apply_jones,
    apply_loss,
    circularize,
    hwp_jones,
    measure_stokes,
    set_ellipse_angle,
)
from .errors import (
    ConfigurationError,
    CovarianceError,
    DegenerateMeanFieldError,
    NonFiniteFieldError,
    NumericalError,
    PolsqueezeError,
    UnphysicalInputError,
    WindowEscapeError,
)
from .estimator import (
    EnsembleRecord,
    ShotNoiseReference,
    SqueezingResult,
    angle_sweep,
    attenuation_sweep,
    bootstrap_stderr_db,
    energy_duration_sweep,
    estimate_squeezing,
    infer_lossless,
    run_ensemble,
    shot_noise_reference,
    squeezing_from_cov,
    stokes_covariance,
)
from .propagation import (
    StepperConfig,
    linear_half_step,
    nonlinear_step,
    propagate_assembly,
    propagate_segment,
)
from .sampling import (
    SeedPlan,
    raman_noise_increment,
    seed_trajectory,
    vacuum_fluctuations,
)
from .config import (
    SimulationConfig,
    canonical_json,
    config_digest,
    dump_config,
    load_config,
    loads_config,
    preset_config,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
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
    "SeedPlan",
    "vacuum_fluctuations",
    "seed_trajectory",
    "raman_noise_increment",
    "StepperConfig",
    "linear_half_step",
    "nonlinear_step",
    "propagate_segment",
    "propagate_assembly",
    "StokesSample",
    "DetectionChain",
    "hwp_jones",
    "apply_jones",
    "circularize",
    "set_ellipse_angle",
    "apply_loss",
    "measure_stokes",
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
    "SimulationConfig",
    "load_config",
    "loads_config",
    "preset_config",
    "dump_config",
    "canonical_json",
    "config_digest",
    "PolsqueezeError",
    "ConfigurationError",
    "NumericalError",
    "WindowEscapeError",
    "NonFiniteFieldError",
    "DegenerateMeanFieldError",
    "CovarianceError",
    "UnphysicalInputError",
]
