"""Command line interface.

Subcommands: ``simulate`` (one ensemble, writes result.json and
samples.csv), ``sweep`` (angle, attenuation, energy or duration grids,
writes CSV), ``info`` (derived quantities of a config, no simulation),
``shot-noise`` (coherent reference only). Exit codes: 0 success, 2
configuration problems, 3 numerical failures, 4 I/O failures.

All files are UTF-8 with LF line endings and '.' decimal separators;
floats are written in shortest-roundtrip form so reruns are
byte-comparable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace

from . import __version__
from .config import SimulationConfig, load_config, preset_config
from .core import (
    photon_energy,
    soliton_energy_per_mode,
    soliton_period,
)
from .errors import ConfigurationError, NumericalError, PolsqueezeError
from .estimator import (
    angle_sweep,
    attenuation_sweep,
    energy_duration_sweep,
    estimate_squeezing,
    shot_noise_reference,
)

_DEFAULT_TRANSMISSIONS = "1.0,0.9,0.8,0.7,0.6,0.5,0.4,0.3,0.2,0.1"
_DEFAULT_ENERGIES_PJ = "60,100,150,210,290,400"
_DEFAULT_DURATIONS_FS = "200,235,310,370"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polsqueeze",
        description="Truncated-Wigner simulation of polarization squeezing "
        "in a two-segment polarization-maintaining fibre",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", metavar="PATH", help="JSON configuration file")
        p.add_argument("--preset", metavar="NAME", help="built-in configuration (paper)")
        p.add_argument("--seed", type=int, metavar="N", help="override the master seed")
        p.add_argument(
            "--trajectories", type=int, metavar="N", help="override the ensemble size"
        )
        p.add_argument(
            "--workers", type=int, default=1, metavar="N",
            help="worker threads; never affects results",
        )
        p.add_argument("--out", default=".", metavar="DIR", help="output directory")

    p_sim = sub.add_parser("simulate", help="run one ensemble and estimate squeezing")
    add_common(p_sim)

    p_sweep = sub.add_parser("sweep", help="scan a parameter and write a CSV table")
    p_sweep.add_argument(
        "kind", choices=["angle", "attenuation", "energy", "duration"],
        help="which axis to sweep",
    )
    add_common(p_sweep)
    p_sweep.add_argument(
        "--points", type=int, default=24, metavar="N",
        help="angle sweep: number of angles across [0, pi]",
    )
    p_sweep.add_argument(
        "--transmissions", default=_DEFAULT_TRANSMISSIONS, metavar="LIST",
        help="attenuation sweep: comma-separated transmissions",
    )
    p_sweep.add_argument(
        "--energies", default=_DEFAULT_ENERGIES_PJ, metavar="LIST",
        help="energy/duration sweep: comma-separated total energies in pJ",
    )
    p_sweep.add_argument(
        "--durations", default=_DEFAULT_DURATIONS_FS, metavar="LIST",
        help="duration sweep: comma-separated pulse fwhm values in fs",
    )

    p_info = sub.add_parser("info", help="print derived quantities, run nothing")
    add_common(p_info)

    p_shot = sub.add_parser("shot-noise", help="run only the coherent noise reference")
    add_common(p_shot)

    return parser


def _resolve_config(args: argparse.Namespace) -> SimulationConfig:
    if args.config and args.preset:
        raise ConfigurationError("give either --config or --preset, not both")
    if args.config:
        config = load_config(args.config)
    elif args.preset:
        config = preset_config(args.preset)
    else:
        raise ConfigurationError("one of --config or --preset is required")
    if args.seed is not None:
        config = replace(config, master_seed=int(args.seed))
    if args.trajectories is not None:
        config = replace(config, n_trajectories=int(args.trajectories))
    return config


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv(rows: list[list], header: list[str]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
    return "\n".join(lines) + "\n"


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    started = time.perf_counter()
    result, record, reference = estimate_squeezing(config, workers=args.workers)
    wall = time.perf_counter() - started
    arr = record.stokes_array()
    means = arr.mean(axis=0)
    payload = {
        "version": __version__,
        "config_digest": config.digest,
        "master_seed": config.master_seed,
        "n_trajectories": result.n_trajectories,
        "var_squeezed": result.var_squeezed,
        "var_antisqueezed": result.var_antisqueezed,
        "theta_opt_rad": result.theta_opt,
        "shot_noise": result.shot_noise,
        "squeezing_db": result.squeezing_db,
        "antisqueezing_db": result.antisqueezing_db,
        "stderr_db": result.stderr_db,
        "shot_noise_var_s0": reference.var_s0,
        "shot_noise_mean_s0": reference.mean_s0,
        "mean_s0": float(means[0]),
        "mean_s1": float(means[1]),
        "mean_s2": float(means[2]),
        "mean_s3": float(means[3]),
        "wall_time_s": wall,
    }
    os.makedirs(args.out, exist_ok=True)
    _write_text(
        os.path.join(args.out, "result.json"),
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
    )
    sample_rows = [
        [i, s.s0, s.s1, s.s2, s.s3] for i, s in enumerate(record.samples)
    ]
    _write_text(
        os.path.join(args.out, "samples.csv"),
        _csv(sample_rows, ["trajectory", "s0", "s1", "s2", "s3"]),
    )
    print(
        f"squeezing {result.squeezing_db:+.3f} dB, antisqueezing "
        f"{result.antisqueezing_db:+.3f} dB (stderr {result.stderr_db:.3f} dB, "
        f"{result.n_trajectories} trajectories)"
    )
    print(f"theta_opt {result.theta_opt:+.4f} rad, shot noise {result.shot_noise:.6g}")
    print(f"wrote {os.path.join(args.out, 'result.json')} and samples.csv in {wall:.1f} s")
    return 0


def _parse_list(text: str, what: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ConfigurationError(f"could not parse {what} list {text!r}: {exc}") from exc
    if not values:
        raise ConfigurationError(f"{what} list is empty")
    return values


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    os.makedirs(args.out, exist_ok=True)
    if args.kind == "angle":
        if args.points < 2:
            raise ConfigurationError("angle sweep needs at least 2 points")
        result, record, reference = estimate_squeezing(config, workers=args.workers)
        thetas = [math.pi * i / (args.points - 1) for i in range(args.points)]
        rows = [
            [theta, var, err, 10.0 * math.log10(var / reference.var_s1)]
            for theta, var, err in angle_sweep(record, thetas)
        ]
        path = os.path.join(args.out, "sweep_angle.csv")
        _write_text(
            path, _csv(rows, ["theta_rad", "var_s1", "var_s1_stderr", "var_over_shot_db"])
        )
    elif args.kind == "attenuation":
        transmissions = _parse_list(args.transmissions, "transmission")
        rows = [
            [t, v, 10.0 * math.log10(v) if v > 0 else -math.inf]
            for t, v in attenuation_sweep(config, transmissions, workers=args.workers)
        ]
        path = os.path.join(args.out, "sweep_attenuation.csv")
        _write_text(path, _csv(rows, ["transmission", "normalized_var", "normalized_var_db"]))
    else:
        energies = [e * 1e-12 for e in _parse_list(args.energies, "energy")]
        if args.kind == "duration":
            durations = [d * 1e-15 for d in _parse_list(args.durations, "duration")]
        else:
            durations = [config.pulse.fwhm]
        table = energy_duration_sweep(config, durations, energies, workers=args.workers)
        rows = [
            [
                fwhm * 1e15,
                energy * 1e12,
                res.squeezing_db,
                res.antisqueezing_db,
                res.stderr_db,
                res.theta_opt,
            ]
            for fwhm, energy, res in table
        ]
        path = os.path.join(args.out, f"sweep_{args.kind}.csv")
        _write_text(
            path,
            _csv(
                rows,
                [
                    "fwhm_fs",
                    "energy_pj",
                    "squeezing_db",
                    "antisqueezing_db",
                    "stderr_db",
                    "theta_opt_rad",
                ],
            ),
        )
    print(f"wrote {path}")
    return 0


def _cmd_info(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    grid = config.grid
    pulse = config.pulse
    assembly = config.assembly
    lines = [f"configuration digest: {config.digest}"]
    lines.append(
        f"grid: {grid.n_points} points, window {grid.window * 1e12:.4g} ps, "
        f"dt {grid.dt * 1e15:.4g} fs"
    )
    energy_mode = 0.5 * pulse.energy_total
    lines.append(
        f"pulse: fwhm {pulse.fwhm * 1e15:.4g} fs, total energy "
        f"{pulse.energy_total * 1e12:.4g} pJ, {energy_mode * 1e12:.4g} pJ per mode"
    )
    photons = pulse.energy_total / photon_energy(pulse.center_wavelength)
    lines.append(f"photons per pulse: {photons:.4g}")
    peak_power = energy_mode / (2.0 * pulse.t0) if pulse.fwhm > 0 else 0.0
    lines.append(f"peak power per mode: {peak_power:.4g} W")
    segment = assembly.first
    try:
        e_sol = soliton_energy_per_mode(segment, pulse.fwhm)
        period = soliton_period(segment, pulse.fwhm)
        lines.append(f"soliton energy per mode: {e_sol * 1e12:.4g} pJ")
        lines.append(f"soliton energy total: {2.0 * e_sol * 1e12:.4g} pJ")
        lines.append(f"soliton number per mode: {math.sqrt(energy_mode / e_sol):.3g}")
        lines.append(f"soliton period: {period:.4g} m")
        lines.append(
            f"assembly length: {assembly.total_length:.4g} m, "
            f"{assembly.total_length / period:.3g} soliton periods"
        )
    except ConfigurationError:
        lines.append("soliton energy per mode: not applicable (normal dispersion)")
        lines.append("soliton energy total: not applicable (normal dispersion)")
        lines.append("soliton period: not applicable (normal dispersion)")
        lines.append(f"assembly length: {assembly.total_length:.4g} m")
    phase = segment.gamma * peak_power * assembly.total_length
    lines.append(f"nonlinear phase at peak: {phase:.4g} rad")
    lines.append(
        f"step size: {config.stepper.step_size * 1e3:.6g} mm "
        f"({round(assembly.first.length / config.stepper.step_size)} + "
        f"{round(assembly.second.length / config.stepper.step_size)} steps)"
    )
    lines.append(
        f"detection chain transmission: {config.chain.total_transmission:.4g} "
        f"(exit {config.chain.exit_transmission:g}, detection "
        f"{config.chain.detection_transmission:g})"
    )
    noise = "on" if config.stepper.raman_noise_enabled else "off"
    lines.append(f"raman noise: {noise}, {config.stepper.temperature:.4g} K")
    lines.append(
        f"ensemble: {config.n_trajectories} trajectories, "
        f"{config.pilot_trajectories} pilot, master seed {config.master_seed}"
    )
    print("\n".join(lines))
    return 0


def _cmd_shot_noise(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    reference = shot_noise_reference(config, workers=args.workers)
    ratio = reference.var_s1 / reference.mean_s0 if reference.mean_s0 else math.nan
    payload = {
        "version": __version__,
        "config_digest": config.digest,
        "master_seed": config.master_seed,
        "n_trajectories": reference.n_trajectories,
        "var_s1": reference.var_s1,
        "var_s0": reference.var_s0,
        "mean_s0": reference.mean_s0,
        "var_s1_over_mean_s0": ratio,
    }
    os.makedirs(args.out, exist_ok=True)
    _write_text(
        os.path.join(args.out, "shot_noise.json"),
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
    )
    print(f"shot noise Var(S1): {reference.var_s1:.6g}")
    print(f"cross-check Var(S0): {reference.var_s0:.6g}")
    print(f"mean S0: {reference.mean_s0:.6g} photons")
    print(f"Var(S1)/mean(S0): {ratio:.4f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "info": _cmd_info,
        "shot-noise": _cmd_shot_noise,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except PolsqueezeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
