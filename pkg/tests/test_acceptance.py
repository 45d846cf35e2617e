"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s``; the ensemble-heavy
criteria take most of an hour at the default reduced scale of 300
trajectories. ``POLSQUEEZE_FULL=1`` switches the main ensembles to the
full 3000-trajectory scale (hours). Criteria cover closed-form
arithmetic, physics oracles (CW Kerr squeezing, soliton invariance,
shot-noise calibration), statistical laws (analyzer-angle geometry,
attenuation mixing), the qualitative shape of the energy/duration map,
an uncertainty-product bound, byte-level worker determinism, and a
split-step convergence gate.
"""

import math
import os
from dataclasses import replace

import numpy as np
import pytest
from scipy.constants import c as _c, h as _h

import polsqueeze as pz
from polsqueeze.cli import main as cli_main

FULL = os.environ.get("POLSQUEEZE_FULL") == "1"
K_MAIN = 3000 if FULL else 300

# Reduced-scale preset squeezing, frozen after the first validated run.
# Deterministic for (config digest, seed, 300 trajectories); any drift
# means the sampling or propagation pipeline changed behaviour.
PRESET_CI_BASELINE_DB = -4.747608

DURATIONS_S = (200e-15, 235e-15, 310e-15, 370e-15)
ENERGIES_J = tuple(e * 1e-12 for e in (60, 100, 150, 210, 290, 400))


def _report(num, ok, detail):
    print(f"ACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    assert ok, detail


@pytest.fixture(scope="module")
def preset_run():
    config = replace(pz.preset_config("paper"), n_trajectories=K_MAIN)
    return pz.estimate_squeezing(config)


@pytest.fixture(scope="module")
def step_pair():
    """Preset at 5 mm and 2.5 mm steps, paired seeds, Raman noise off.

    With the stochastic increments disabled the two runs share every
    random draw (vacuum seeds and detection vacua key on trajectory, not
    on step count), so the difference isolates the integrator error.
    """
    preset = pz.preset_config("paper")
    base = replace(
        preset,
        n_trajectories=100,
        pilot_trajectories=40,
        stepper=replace(preset.stepper, raman_noise_enabled=False),
    )
    coarse = replace(base, stepper=replace(base.stepper, step_size=5e-3))
    fine = replace(base, stepper=replace(base.stepper, step_size=2.5e-3))
    res_c, rec_c, _ = pz.estimate_squeezing(coarse)
    res_f, rec_f, _ = pz.estimate_squeezing(fine)
    return res_c, rec_c, res_f, rec_f


def _ellipse_extrema(record):
    """(smallest variance, largest variance, |mean s3|) of a record."""
    stokes = record.stokes_array()
    cov = np.cov(stokes[:, 1:3], rowvar=False, ddof=1)
    mean = 0.5 * (cov[0, 0] + cov[1, 1])
    rad = math.hypot(0.5 * (cov[0, 0] - cov[1, 1]), cov[0, 1])
    return mean - rad, mean + rad, abs(float(stokes[:, 3].mean()))


def test_criterion_01_soliton_energy_arithmetic():
    fibre = pz.default_fiber_fs_pm_7811(2.615)
    total = 2.0 * pz.soliton_energy_per_mode(fibre, 235e-15)
    ok = abs(total - 105e-12) <= 0.01 * 105e-12
    _report(1, ok, f"two soliton energies at 235 fs = {total * 1e12:.2f} pJ "
                   "(target 105 pJ within 1%)")


def test_criterion_02_lossless_inference():
    ideal = pz.infer_lossless(-5.0, 0.88)
    bare = pz.infer_lossless(-5.0, 0.80)
    ok = abs(ideal - (-6.5)) <= 0.05 and abs(bare - (-8.4)) <= 0.05
    _report(2, ok, f"-5.0 dB unfolds to {ideal:.3f} dB (detection only) and "
                   f"{bare:.3f} dB (all losses); targets -6.5/-8.4 within 0.05")


def test_criterion_03_cw_kerr_oracle():
    """CW Kerr squeezing against the linearized single-mode result.

    A flat field plus vacuum on a 64-point grid, one dispersionless
    lossless segment, empty orthogonal mode. The minimum quadrature
    variance of the carrier mode must match 1 + 2r^2 - 2r sqrt(1 + r^2)
    at r = gamma_w flux L for r in {0.5, 1, 2}.
    """
    n, window = 64, 6.4e-12
    grid = pz.TimeGrid(n, window)
    flux = 1e22
    k_traj = 30000
    photon = _h * _c / 1.56e-6
    rng = np.random.default_rng(20260814)
    std = math.sqrt(1.0 / (4.0 * grid.dt))
    worst = 0.0
    for r in (0.5, 1.0, 2.0):
        seg = pz.FiberSegment(
            length=1.0, beta2=0.0, beta3=0.0, gamma=r / (photon * flux),
            walkoff=0.0, loss_per_m=0.0, raman_fraction=0.0,
            raman_tau1=12.2e-15, raman_tau2=32e-15,
        )
        stepper = pz.StepperConfig(1.0, raman_noise_enabled=False, temperature=300.0)
        noise = (rng.standard_normal((k_traj, n))
                 + 1j * rng.standard_normal((k_traj, n))) * std
        field = pz.TwoModeField(grid, math.sqrt(flux) + noise, np.zeros((k_traj, n), complex))
        out = pz.propagate_segment(field, seg, stepper)
        a = out.env_h.sum(axis=-1) * math.sqrt(grid.dt / n)
        cov = np.cov(a.real, a.imag, ddof=1)
        mean = 0.5 * (cov[0, 0] + cov[1, 1])
        rad = math.hypot(0.5 * (cov[0, 0] - cov[1, 1]), cov[0, 1])
        v_sim = (mean - rad) / 0.25
        v_ref = 1.0 + 2.0 * r * r - 2.0 * r * math.sqrt(1.0 + r * r)
        worst = max(worst, abs(10.0 * math.log10(v_sim / v_ref)))
    _report(3, worst <= 0.2,
            f"CW Kerr minimum variance within {worst:.3f} dB of the "
            "linearized result over r in {0.5, 1, 2} (budget 0.2 dB)")


def test_criterion_04_soliton_invariance():
    """A fundamental soliton must cross the full assembly unchanged."""
    seg = pz.FiberSegment(
        length=2.615, beta2=-1.05e-26, beta3=0.0, gamma=3.0e-3, walkoff=0.0,
        loss_per_m=0.0, raman_fraction=0.0, raman_tau1=12.2e-15, raman_tau2=32e-15,
    )
    assembly = pz.FiberAssembly(seg, replace(seg, length=2.585), 1.0, False)
    grid = pz.TimeGrid(1024, 8e-12)
    energy = pz.soliton_energy_per_mode(seg, 200e-15)
    field = pz.make_sech_pulse(grid, pz.PulseSpec(200e-15, energy, 1.56e-6, 1.0))
    stepper = pz.StepperConfig(5e-3, raman_noise_enabled=False, temperature=300.0)
    out = pz.propagate_assembly(field, assembly, stepper)
    drift = abs(np.abs(out.env_h).max() ** 2 / np.abs(field.env_h).max() ** 2 - 1.0)
    _report(4, drift < 0.01,
            f"soliton peak power changed {drift * 100:.4f}% over 5.2 m (budget 1%)")


def test_criterion_05_shot_noise_calibration():
    ref = pz.shot_noise_reference(pz.preset_config("paper"), n_trajectories=60000)
    ratio = ref.var_s1 / ref.mean_s0
    se = math.sqrt(2.0 / (ref.n_trajectories - 1))
    combined = math.hypot(ref.var_s0 * se, ref.var_s1 * se)
    ok = abs(ratio - 1.0) <= 0.02 and abs(ref.var_s0 - ref.var_s1) <= combined
    _report(5, ok,
            f"coherent reference Var(S1)/<S0> = {ratio:.4f} (1 within 0.02), "
            f"|Var(S0)-Var(S1)| = {abs(ref.var_s0 - ref.var_s1) / combined:.2f} "
            "combined stderr (limit 1)")


def test_criterion_06_angle_geometry(preset_run):
    """Projection variance versus analyzer angle is a two-term ellipse."""
    _, record, _ = preset_run
    thetas = np.linspace(0.0, math.pi, 24)
    v = np.array([row[1] for row in pz.angle_sweep(record, thetas)])
    basis = np.stack([np.cos(thetas) ** 2, np.sin(thetas) ** 2], axis=1)
    coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
    resid = v - basis @ coef
    r2 = 1.0 - float(resid @ resid) / float((v - v.mean()) @ (v - v.mean()))
    _report(6, r2 >= 0.999,
            f"angle sweep R^2 = {r2:.6f} against ds^2 cos^2 + da^2 sin^2 "
            f"(limit 0.999, K = {K_MAIN})")


def test_criterion_07_attenuation_law():
    """Noise versus attenuation mixes linearly toward shot noise.

    Residual consistency is judged in aggregate, RMS of residual over
    stderr across the ten transmission points: the per-point variance
    ratio carries sqrt(4/(K - 1)) relative noise, so the maximum of ten
    individual z-scores exceeds 2 by chance in roughly a third of runs,
    while the RMS concentrates near 1 when the law holds and blows past
    2 for any real violation (dropping the (1 - T) vacuum term alone
    pushes the low-T points beyond 6 stderr).
    """
    preset = pz.preset_config("paper")
    config = replace(
        preset, n_trajectories=K_MAIN,
        stepper=replace(preset.stepper, step_size=5e-3),
    )
    ts = np.array([1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1])
    rows = pz.attenuation_sweep(config, ts)
    v = np.array([val for _, val in rows])
    se = v * math.sqrt(2.0 / (K_MAIN - 1)) * math.sqrt(2.0)
    v_in = float(np.sum(ts * (v - 1.0 + ts)) / np.sum(ts * ts))
    rms_sq = float(np.sqrt(np.mean(((v - (ts * v_in + 1.0 - ts)) / se) ** 2)))

    coherent = replace(
        config,
        assembly=replace(
            config.assembly,
            first=replace(config.assembly.first, gamma=0.0),
            second=replace(config.assembly.second, gamma=0.0),
        ),
    )
    v_coh = np.array([val for _, val in pz.attenuation_sweep(coherent, ts)])
    se_coh = v_coh * math.sqrt(2.0 / (K_MAIN - 1)) * math.sqrt(2.0)
    rms_coh = float(np.sqrt(np.mean(((v_coh - 1.0) / se_coh) ** 2)))
    ok = rms_sq <= 2.0 and rms_coh <= 2.0
    _report(7, ok,
            f"squeezed ensemble fits T V + (1 - T) with V = {v_in:.3f}, "
            f"residual rms {rms_sq:.2f} stderr; coherent stays at 1 within "
            f"rms {rms_coh:.2f} stderr (limits 2)")


def test_criterion_08_statistical_precision(preset_run):
    result, _, _ = preset_run
    # The variance-of-variance floor is 10 log10(1 + sqrt(2/(K - 1))):
    # 0.1107 dB at K = 3000, so the 0.1 dB bound is not reachable at the
    # full scale and the line below reports FAIL there rather than
    # weakening the bound. At K = 300 the budget is 0.35 dB.
    bound = 0.1 if FULL else 0.35
    ok = result.stderr_db <= bound
    _report(8, ok,
            f"stderr at K = {result.n_trajectories} is {result.stderr_db:.4f} dB "
            f"(budget {bound} dB)")


def _column_optimum(energies, values):
    """Optimal energy as the parabola vertex around the grid argmin.

    The grid cannot place the optimum between its own points (an argmin
    at 100 pJ says only that the optimum lies between the neighbours),
    so the comparison against a threshold like 105 pJ needs sub-grid
    interpolation; the vertex through the argmin triple is the standard
    estimate and degrades gracefully to the argmin itself at an edge.
    """
    i = int(np.argmin(values))
    lo, hi = max(i - 1, 0), min(i + 1, len(energies) - 1)
    if lo == i or hi == i:
        return energies[i]
    x0, x1, x2 = energies[lo], energies[i], energies[hi]
    y0, y1, y2 = values[lo], values[i], values[hi]
    num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    if den == 0.0:
        return x1
    return x1 - 0.5 * num / den


def test_criterion_09_energy_duration_map():
    """Qualitative shape of squeezing over pulse energy and duration."""
    preset = pz.preset_config("paper")
    config = replace(
        preset, n_trajectories=300,
        stepper=replace(preset.stepper, step_size=5e-3),
    )
    rows = pz.energy_duration_sweep(config, DURATIONS_S, ENERGIES_J)
    best_db, optimum = {}, {}
    for d in DURATIONS_S:
        col = [(en, res.squeezing_db) for fw, en, res in rows if fw == d]
        energies = np.array([en for en, _ in col])
        values = np.array([val for _, val in col])
        best_db[d] = float(values.min())
        optimum[d] = float(_column_optimum(energies, values))
    shorter_better = best_db[200e-15] <= best_db[370e-15]
    optima = [optimum[d] for d in (235e-15, 310e-15, 370e-15)]
    optimum_grows = optima[0] <= optima[1] <= optima[2]
    above_soliton = optimum[235e-15] > 105e-12
    ok = shorter_better and optimum_grows and above_soliton
    summary = ", ".join(
        f"{d * 1e15:.0f} fs: {best_db[d]:+.2f} dB near {optimum[d] * 1e12:.0f} pJ"
        for d in DURATIONS_S
    )
    _report(9, ok,
            f"map bests ({summary}); shorter-is-better {shorter_better}, "
            f"optimum grows with duration {optimum_grows}, 235 fs optimum "
            f"above 105 pJ {above_soliton}")


def test_criterion_10_uncertainty_product(preset_run, step_pair):
    """Ellipse variance product bounded by the circular component.

    Checked on every squeezed ensemble record this suite produces; the
    lossy detection chain makes the states mixed, so the product sits
    well above the pure-state floor.
    """
    _, preset_record, _ = preset_run
    _, coarse_record, _, fine_record = step_pair
    margins = []
    for record in (preset_record, coarse_record, fine_record):
        lo, hi, s3 = _ellipse_extrema(record)
        margins.append(lo * hi / (0.99 * s3) ** 2)
    ok = all(m >= 1.0 for m in margins)
    _report(10, ok,
            "variance product over (0.99 |<S3>|)^2 = "
            + ", ".join(f"{m:.1f}" for m in margins) + " (limits 1)")


def test_criterion_11_worker_determinism(tmp_path):
    preset = pz.preset_config("paper")
    config = replace(
        preset, n_trajectories=30, pilot_trajectories=10,
        stepper=replace(preset.stepper, step_size=5e-3),
    )
    path = tmp_path / "config.json"
    path.write_text(pz.dump_config(config), encoding="utf-8")
    tables = []
    for workers in (1, 4, 8):
        out = tmp_path / f"w{workers}"
        code = cli_main([
            "simulate", "--config", str(path),
            "--out", str(out), "--workers", str(workers),
        ])
        assert code == 0
        tables.append((out / "samples.csv").read_bytes())
    ok = tables[0] == tables[1] == tables[2]
    _report(11, ok,
            f"samples.csv byte-identical across 1/4/8 workers "
            f"({len(tables[0])} bytes)")


def test_criterion_12_step_convergence(step_pair):
    res_coarse, _, res_fine, _ = step_pair
    delta = abs(res_coarse.squeezing_db - res_fine.squeezing_db)
    _report(12, delta < 0.02,
            f"halving the step 5 mm -> 2.5 mm moves squeezing by "
            f"{delta:.2e} dB (budget 0.02 dB, paired seeds)")


def test_regression_preset_squeezing(preset_run):
    result, _, _ = preset_run
    status = "PASS" if result.squeezing_db < -3.0 else "FAIL"
    print(f"REGRESSION {status}: preset squeezing {result.squeezing_db:+.6f} dB "
          f"at K = {result.n_trajectories} (must be < -3 dB)", flush=True)
    assert result.squeezing_db < -3.0
    if not FULL and PRESET_CI_BASELINE_DB is not None:
        assert result.squeezing_db == pytest.approx(PRESET_CI_BASELINE_DB, abs=1e-6)
