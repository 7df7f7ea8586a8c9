"""Acceptance suite: one test per release criterion, at stated tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to get one printed
pass/fail line per criterion in addition to the pytest verdicts.
"""

import time

import numpy as np
import pytest

from swaplight import (
    AcquisitionConfig,
    SwapParams,
    apply_map,
    closed_form_io_map,
    integrated_io_matrix,
    kl_decompose,
    output_mode_shape,
    shot_noise_reference,
    simulate_ensemble,
    swap_io_map,
    symplectic_form,
    vacuum_state,
)
from swaplight.modes import (
    CovarianceEstimate,
    attach_bootstrap,
    estimate_covariance,
    null_mode_spectrum,
    pooled_covariance,
    significant_squeezed_modes,
)
from swaplight.pipeline import run_scenario
from swaplight.scenarios import load_scenario

XI = 1.0 / np.sqrt(6.3)
GAMMA_SW = 1.0 / 5.7e-3        # mean-decay operating point
MODE_DECAY = 1.0 / 5.5e-3      # observed leading-mode decay


def report(criterion: int, message: str) -> None:
    print(f"[criterion {criterion:02d}] PASS: {message}")


@pytest.fixture(scope="module")
def coherent_run():
    params = SwapParams(gamma_sw_per_s=GAMMA_SW, xi=XI, pulse_T_s=0.015)
    acq = AcquisitionConfig(
        sample_rate_Hz=2500.0, pulse_T_s=0.015, n_cycles=10000, rng_seed=52005,
        detection_bandwidth_Hz=600.0, shot_noise_ref_cycles=10000,
    )
    t0 = time.perf_counter()
    records = simulate_ensemble(params, acq, quadrature="P")
    reference = shot_noise_reference(acq)
    return params, acq, records, reference, time.perf_counter() - t0


@pytest.fixture(scope="module")
def calibrated_report(tmp_path_factory):
    scenario = load_scenario("fig5_mode_spectrum")
    out = tmp_path_factory.mktemp("fig5_calibrated")
    return run_scenario(scenario, out), out


def test_c01_symplectic_suite():
    rng = np.random.default_rng(1)
    omega = symplectic_form(2)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        xi = rng.uniform(0.05, 0.95)
        s2 = rng.uniform(0.0, 1.0)
        S = swap_io_map(xi, np.sqrt(s2) / xi).matrix
        worst = max(worst, np.abs(S.T @ omega @ S - omega).max())
    elapsed = time.perf_counter() - start
    assert worst < 1e-10
    assert elapsed < 1.0
    report(1, f"1000 random swap maps, max symplectic defect {worst:.2e}, "
              f"{elapsed:.2f} s")


def test_c02_closed_form_variance():
    smap = swap_io_map(XI, 1.0 / XI)  # full swap
    out = apply_map(vacuum_state(2), smap)
    ratio = out.cov[3, 3] / 0.5
    assert abs(ratio - XI**2) < 1e-12
    ceiling_db = 10.0 * np.log10(ratio)
    assert abs(ceiling_db - (-7.9934)) < 1e-3
    report(2, f"full-swap variance ratio = xi^2 exactly; no-decoherence "
              f"ceiling {ceiling_db:.2f} dB")


def test_c03_dynamics_vs_closed_form():
    rng = np.random.default_rng(12)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        gamma = rng.uniform(40.0, 400.0)
        xi = rng.uniform(0.2, 0.9)
        T = rng.uniform(0.3, 4.0) / gamma
        params = SwapParams(gamma_sw_per_s=gamma, xi=xi, pulse_T_s=T)
        S_num = integrated_io_matrix(params)
        S = closed_form_io_map(params).matrix
        worst = max(worst, np.abs(S_num - S).max() / np.abs(S).max())
    elapsed = time.perf_counter() - start
    assert worst < 1e-8
    assert elapsed < 10.0
    report(3, f"20 random parameter sets, worst relative coefficient error "
              f"{worst:.2e}, {elapsed:.1f} s")


def test_c04_mean_decay_equivalent(tmp_path):
    start = time.perf_counter()
    scenario = load_scenario("fig3_mean_decay")
    rep = run_scenario(scenario, tmp_path / "fig3")
    elapsed = time.perf_counter() - start
    section = rep["mean_decay"]
    for fit in (section["fit_x"], section["fit_p"]):
        assert abs(fit["rate_per_s"] - GAMMA_SW) < 0.02 * GAMMA_SW
    ratio = section["amplitude_ratio_x_over_p"]
    assert abs(ratio - 6.3) < 0.05 * 6.3
    assert elapsed < 60.0
    report(4, f"mean decay rates {section['fit_x']['rate_per_s']:.1f} / "
              f"{section['fit_p']['rate_per_s']:.1f} per s (target {GAMMA_SW:.1f} "
              f"+-2%), amplitude ratio {ratio:.2f} (target 6.3 +-5%), "
              f"{elapsed:.1f} s")


def test_c05_coherent_mode_spectrum(coherent_run):
    params, acq, records, reference, sim_time = coherent_run
    start = time.perf_counter()
    est = pooled_covariance(
        estimate_covariance(records, reference, "cosine"),
        estimate_covariance(records, reference, "sine"),
    )
    spectrum = attach_bootstrap(kl_decompose(est, whitening=True), records, reference)
    null = null_mode_spectrum(reference, channel="pooled")
    significant = significant_squeezed_modes(spectrum, null)
    assert significant == [0], f"expected exactly one squeezed mode, got {significant}"

    g, T = params.gamma_sw_per_s, params.pulse_T_s
    lam_pred = 1.0 - (1.0 - XI**2) * (1.0 - np.exp(-2.0 * g * T))
    diff_db = spectrum.db[0] - 10.0 * np.log10(lam_pred)
    assert abs(diff_db) < 0.2

    u_exp = np.exp(-g * acq.times)
    u_exp /= np.sqrt(np.sum(u_exp**2) * acq.dt)
    fidelity = abs(np.sum(spectrum.modes[0].samples * u_exp) * acq.dt)
    assert fidelity > 0.999
    elapsed = sim_time + time.perf_counter() - start
    assert elapsed < 300.0
    report(5, f"one squeezed mode at {spectrum.db[0]:.2f} dB "
              f"(predicted {10 * np.log10(lam_pred):.2f}, diff {diff_db:+.3f} dB), "
              f"exponential fidelity {fidelity:.4f}, {elapsed:.0f} s")


def test_c06_calibrated_mode_spectrum(calibrated_report):
    rep, _ = calibrated_report
    section = rep["mode_spectrum"]
    lead_db = section["modes"][0]["db"]
    assert -4.0 <= lead_db <= -3.0

    secondary = [m["db"] for m in section["modes"][1:]]
    in_band = [db for db in secondary if -1.5 <= db <= -0.5]
    assert len(in_band) >= 2

    fit = section["leading_mode_fit"]
    assert abs(fit["rate_per_s"] - MODE_DECAY) < 0.1 * MODE_DECAY
    assert section["second_mode_fit"]["rising"]
    assert rep["calibration_note"], "calibration must be stated in the report"
    report(6, f"leading mode {lead_db:.2f} dB decaying at "
              f"{fit['rate_per_s']:.0f}/s (target {MODE_DECAY:.0f} +-10%), "
              f"{len(in_band)} secondary modes in [-1.5, -0.5] dB, second mode "
              f"rising; calibration documented")


def test_c07_spectrum_dip(tmp_path):
    scenario = load_scenario("fig4_spectrum")
    rep = run_scenario(scenario, tmp_path / "fig4")
    section = rep["spectrum"]
    assert section["oracle_dip_db"] is not None
    assert abs(section["dip_db"] - section["oracle_dip_db"]) < 0.3
    assert section["reference_flatness_max_abs_db"] < 0.1

    data = np.genfromtxt(tmp_path / "fig4/spectrum.csv", delimiter=",", names=True)
    db = data["power_db_rel_shot"]
    freq = data["freq_offset_Hz"]
    spacing = freq[1] - freq[0]
    # the squeezing bandwidth is comparable to the 1/T bin spacing, so the
    # dip support is resolution-limited: measure the contiguous significant
    # region (below -0.25 dB) and check the oracle marks the same bins
    dipped = db <= -0.25
    oracle_dipped = data["oracle_db"] <= -0.25
    assert np.array_equal(dipped, oracle_dipped)
    width = dipped.sum() * spacing
    assert 50.0 <= width <= 600.0
    report(7, f"dip {section['dip_db']:.2f} dB vs oracle "
              f"{section['oracle_dip_db']:.2f} dB, significant-dip width "
              f"{width:.0f} Hz, reference flat within "
              f"{section['reference_flatness_max_abs_db']:.3f} dB")


def test_c08_duan_certification(calibrated_report, tmp_path):
    rep, _ = calibrated_report
    duan = rep["duan"]
    assert abs(duan["value"] - 2.0 * 10 ** (-0.35)) < 0.05
    assert duan["certified"]
    assert duan["value"] + 3.0 * duan["sigma"] < 2.0

    vacuum = load_scenario("vacuum_reference")
    vrep = run_scenario(vacuum, tmp_path / "vacuum")
    vduan = vrep["duan"]
    assert not vduan["certified"]
    assert abs(vduan["value"] - 2.0) < 4.0 * vduan["sigma"]
    report(8, f"calibrated combination {duan['value']:.3f} +- {duan['sigma']:.3f} "
              f"(certified, 3-sigma bound below 2); vacuum control "
              f"{vduan['value']:.3f} +- {vduan['sigma']:.3f}, not certified")


def test_c09_kl_planted_oracle():
    n, dt = 64, 4e-4
    t = (np.arange(n) + 0.5) * dt
    u = np.exp(-170.0 * t)
    u /= np.sqrt(np.sum(u**2) * dt)
    q = u * np.sqrt(dt)
    lam1 = 0.21
    C = np.eye(n) + (lam1 - 1.0) * np.outer(q, q)
    est = CovarianceEstimate(
        C=C, dt=dt, n_cycles=10**6, channel="cosine",
        shot_floor=np.eye(n), n_reference_cycles=10**6, scale=1.0,
    )
    spectrum = kl_decompose(est, whitening=False)
    eig_err = abs(spectrum.variances[0] - lam1)
    overlap = abs(np.sum(spectrum.modes[0].samples * u) * dt)
    assert eig_err < 1e-6
    assert overlap > 0.9999
    report(9, f"planted rank-one recovery: eigenvalue error {eig_err:.2e}, "
              f"mode overlap {overlap:.6f}")


def test_c10_mode_shaping():
    g0, T, n = 50.0, 0.015, 4000
    t = np.linspace(0.0, T, n)
    dt = t[1] - t[0]
    profile = g0 / (1.0 - g0 * t)
    mode = output_mode_shape(profile, dt)
    central = mode.samples[int(0.1 * n):int(0.9 * n)]
    cv = float(np.std(central) / np.mean(central))
    assert cv < 0.02
    # the shaping formula predicts an exactly constant envelope here
    flat_err = float(np.abs(mode.samples / mode.samples.mean() - 1.0).max())
    assert flat_err < 1e-6
    report(10, f"flat-top drive: central coefficient of variation {cv:.2e}, "
               f"max deviation from the predicted constant envelope {flat_err:.2e}")
