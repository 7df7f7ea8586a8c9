"""Scenario runner: simulate, analyze, and emit machine-readable artifacts.

Every run writes a deterministic artifact set into the output directory:
binary record files with JSON sidecars, covariance dumps, a consolidated
`report.json`, one CSV per figure-equivalent product, rendered PNG figures,
and a `manifest.json` with the configuration hash and seed needed to
reproduce the run byte for byte.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from typing import Any

import numpy as np
from scipy.optimize import curve_fit

from . import __version__, figures
from .cascade import output_mode
from .couplings import ModeFunction, output_mode_shape
from .homodyne import (
    AcquisitionConfig,
    RecordEnsemble,
    analytic_record_covariance,
    expected_periodogram,
    power_spectrum,
    record_mean,
    shot_noise_reference,
    simulate_ensemble,
)
from .modes import (
    MismatchedModesError,
    attach_bootstrap,
    certify_entanglement,
    duan_from_records,
    estimate_covariance,
    fit_exponential_mode,
    kl_decompose,
    mode_measurement,
    null_mode_spectrum,
    pooled_covariance,
    significant_squeezed_modes,
)
from .recordio import write_records
from .scenarios import Scenario, scenario_fingerprint


class OutputExistsError(RuntimeError):
    """Output directory already holds a run and --force was not given."""


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])


def _fit_mean_decay(t: np.ndarray, mean: np.ndarray, edge: int) -> dict:
    """Exponential amplitude/rate fit of an ensemble-mean trace."""
    sl = slice(edge, len(t) - edge if edge else None)
    tt, yy = t[sl], mean[sl]
    sign = np.sign(yy[np.argmax(np.abs(yy))])
    yy = yy * sign

    def model(x, amplitude, rate):
        return amplitude * np.exp(-rate * x)

    good = yy > 0.05 * yy.max()
    slope, intercept = np.polyfit(tt[good], np.log(yy[good]), 1)
    popt, _ = curve_fit(model, tt, yy, p0=(np.exp(intercept), -slope), maxfev=20000)
    resid = float(np.sqrt(np.mean((yy - model(tt, *popt)) ** 2) / np.mean(yy**2)))
    return {
        "amplitude": float(popt[0]),
        "sign": float(sign),
        "rate_per_s": float(popt[1]),
        "relative_rms_residual": resid,
    }


def _filter_edge_samples(acq: AcquisitionConfig) -> int:
    from .homodyne import detection_kernel

    kernel = detection_kernel(acq)
    return 0 if kernel is None else (len(kernel) - 1) // 2


def run_scenario(
    scenario: Scenario,
    out_dir: str | Path,
    *,
    force: bool = False,
    whitening: bool | None = None,
    n_cycles: int | None = None,
    seed: int | None = None,
) -> dict:
    """Execute a scenario and write its artifact set; returns the report."""
    out = Path(out_dir)
    if (out / "manifest.json").exists() and not force:
        raise OutputExistsError(
            f"{out} already contains a run; pass --force to overwrite"
        )
    out.mkdir(parents=True, exist_ok=True)

    acq = scenario.acquisition
    if seed is not None or n_cycles is not None:
        acq = dataclasses.replace(
            acq,
            rng_seed=acq.rng_seed if seed is None else int(seed),
            n_cycles=acq.n_cycles if n_cycles is None else int(n_cycles),
        )
        scenario = dataclasses.replace(scenario, acquisition=acq, seed=acq.rng_seed)
    analysis = scenario.analysis
    if whitening is not None:
        analysis = dataclasses.replace(analysis, whitening=whitening)
        scenario = dataclasses.replace(scenario, analysis=analysis)

    artifacts: list[str] = []
    report: dict[str, Any] = {
        "scenario": scenario.name,
        "version": __version__,
        "seed": acq.rng_seed,
        "config_sha256": scenario_fingerprint(scenario),
        "whitening": analysis.whitening,
        "calibration_note": scenario.calibration_note,
    }

    def emit(name: str) -> Path:
        artifacts.append(name)
        return out / name

    products = set(scenario.products)

    if "mode_shape" in products:
        report["mode_shape"] = _run_mode_shape(scenario, emit)

    records = reference = None
    if products & {"records", "mean_decay", "spectrum", "mode_spectrum", "duan"}:
        records = simulate_ensemble(
            scenario.params,
            acq,
            quadrature=scenario.quadrature,  # type: ignore[arg-type]
            initial_atoms=scenario.displacement,
        )
        reference = shot_noise_reference(acq)
        write_records(emit("records.bin"), records)
        artifacts.append("records.bin.json")
        write_records(emit("reference.bin"), reference)
        artifacts.append("reference.bin.json")

    if "mean_decay" in products:
        report["mean_decay"] = _run_mean_decay(scenario, acq, records, emit)

    if "spectrum" in products:
        report["spectrum"] = _run_spectrum(scenario, acq, records, reference, emit)

    spectra = None
    if "mode_spectrum" in products:
        spectra, section = _run_mode_spectrum(scenario, records, reference, emit)
        report["mode_spectrum"] = section

    if "duan" in products:
        report["duan"] = _run_duan(scenario, records, reference, spectra)

    report_path = emit("report.json")
    report_path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")

    manifest = {
        "scenario": scenario.name,
        "version": __version__,
        "seed": acq.rng_seed,
        "config_sha256": report["config_sha256"],
        "whitening": analysis.whitening,
        "artifacts": sorted(set(artifacts) | {"manifest.json"}),
        "calibration_note": scenario.calibration_note,
    }
    (out / "manifest.json").write_text(
        json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n"
    )
    return report


def _run_mode_shape(scenario: Scenario, emit) -> dict:
    profile = scenario.drive_profile
    assert profile is not None
    n = profile.grid_points
    t = np.linspace(0.0, profile.duration_s, n)
    dt = t[1] - t[0]
    if profile.kind == "flat_top":
        gamma = profile.gamma0_per_s / (1.0 - profile.gamma0_per_s * t)
    else:
        gamma = np.full(n, profile.gamma0_per_s)
    mode = output_mode_shape(gamma, dt)
    central = slice(int(0.1 * n), int(0.9 * n))
    u_central = mode.samples[central]
    cv = float(np.std(u_central) / np.mean(u_central))
    _write_csv(
        emit("mode_shape.csv"),
        ["t_s", "gamma_per_s", "mode_amplitude"],
        [t, gamma, mode.samples],
    )
    figures.render_mode_shape(emit("mode_shape.png"), t, gamma, mode.samples)
    return {
        "kind": profile.kind,
        "gamma0_per_s": profile.gamma0_per_s,
        "central_coefficient_of_variation": cv,
        "l2_norm_deviation": float(abs(np.sum(mode.samples**2) * dt - 1.0)),
    }


def _run_mean_decay(scenario: Scenario, acq: AcquisitionConfig,
                    records_p: RecordEnsemble, emit) -> dict:
    # the conjugate quadrature series is a separate experimental run
    records_x = simulate_ensemble(
        scenario.params,
        acq,
        quadrature="X",
        initial_atoms=scenario.displacement,
        seed=acq.rng_seed + 1,
    )
    t = acq.times
    mean_p = records_p.pc.mean(axis=0)
    mean_x = records_x.pc.mean(axis=0)
    edge = _filter_edge_samples(acq)
    fit_p = _fit_mean_decay(t, mean_p, edge)
    fit_x = _fit_mean_decay(t, mean_x, edge)
    expected_x = expected_p = None
    if scenario.params is not None and scenario.displacement is not None:
        expected_p = record_mean(scenario.params, acq, scenario.displacement, "P")[0]
        expected_x = record_mean(scenario.params, acq, scenario.displacement, "X")[0]
    _write_csv(
        emit("mean_decay.csv"),
        ["t_s", "mean_x", "mean_p", "expected_x", "expected_p"],
        [
            t,
            mean_x,
            mean_p,
            expected_x if expected_x is not None else np.full_like(t, np.nan),
            expected_p if expected_p is not None else np.full_like(t, np.nan),
        ],
    )
    figures.render_mean_decay(emit("mean_decay.png"), t, mean_x, mean_p, fit_x, fit_p)
    ratio = abs(fit_x["amplitude"] / fit_p["amplitude"])
    return {
        "fit_x": fit_x,
        "fit_p": fit_p,
        "amplitude_ratio_x_over_p": ratio,
        "expected_ratio": None if scenario.params is None else scenario.params.xi**-2,
    }


def _run_spectrum(scenario: Scenario, acq: AcquisitionConfig,
                  records: RecordEnsemble, reference: RecordEnsemble, emit) -> dict:
    spec = power_spectrum(records, reference)
    oracle_db = np.full_like(spec.power_db, np.nan)
    if scenario.params is not None and scenario.displacement is None:
        from .homodyne import expected_power_spectrum

        oracle = expected_power_spectrum(
            scenario.params, acq, scenario.quadrature  # type: ignore[arg-type]
        )
        oracle_db = oracle.power_db
    ref_expected = 2.0 * expected_periodogram(
        analytic_record_covariance(None, acq), acq.dt
    )
    _write_csv(
        emit("spectrum.csv"),
        ["freq_offset_Hz", "power_db_rel_shot", "oracle_db", "signal_power",
         "reference_power", "reference_expected_power"],
        [spec.freq_offset_Hz, spec.power_db, oracle_db, spec.signal_power,
         spec.reference_power, ref_expected],
    )
    figures.render_spectrum(emit("spectrum.png"), spec, oracle_db)
    center = int(np.argmin(np.abs(spec.freq_offset_Hz)))
    in_band = np.abs(spec.freq_offset_Hz) <= (acq.detection_bandwidth_Hz or np.inf)
    ref_flatness = 10.0 * np.log10(spec.reference_power / ref_expected)
    return {
        "dip_db": float(spec.power_db[center]),
        "oracle_dip_db": None if np.isnan(oracle_db[center]) else float(oracle_db[center]),
        "reference_flatness_max_abs_db": float(np.abs(ref_flatness[in_band]).max()),
        "n_cycles": spec.n_cycles,
        "n_reference_cycles": spec.n_reference_cycles,
    }


def _run_mode_spectrum(scenario: Scenario, records: RecordEnsemble,
                       reference: RecordEnsemble, emit):
    analysis = scenario.analysis
    est_c = estimate_covariance(records, reference, "cosine")
    est_s = estimate_covariance(records, reference, "sine")
    est_pool = pooled_covariance(est_c, est_s)
    np.save(emit("covariance_cosine.npy"), est_c.C)
    np.save(emit("covariance_sine.npy"), est_s.C)
    np.save(emit("reference_covariance.npy"), est_pool.shot_floor)

    spec_pool = attach_bootstrap(
        kl_decompose(est_pool, whitening=analysis.whitening),
        records, reference, seed=records.seed,
        n_resamples=analysis.bootstrap_resamples,
    )
    spec_c = attach_bootstrap(
        kl_decompose(est_c, whitening=analysis.whitening),
        records, reference, "cosine", seed=records.seed + 2,
        n_resamples=analysis.bootstrap_resamples,
    )
    spec_s = attach_bootstrap(
        kl_decompose(est_s, whitening=analysis.whitening),
        records, reference, "sine", seed=records.seed + 3,
        n_resamples=analysis.bootstrap_resamples,
    )
    null = null_mode_spectrum(reference, whitening=analysis.whitening, channel="pooled")
    significant = significant_squeezed_modes(spec_pool, null)

    k = min(analysis.mode_count, spec_pool.n_modes)
    fit1 = fit_exponential_mode(spec_pool.modes[0])
    fit2 = fit_exponential_mode(spec_pool.modes[1]) if spec_pool.n_modes > 1 else None
    _write_csv(
        emit("mode_spectrum.csv"),
        ["mode_index", "variance_rel_shot", "db", "bootstrap_sd",
         "ci_lo", "ci_hi", "significant"],
        [
            np.arange(k),
            spec_pool.variances[:k],
            spec_pool.db[:k],
            spec_pool.bootstrap_sd[:k],
            spec_pool.bootstrap_ci[:k, 0],
            spec_pool.bootstrap_ci[:k, 1],
            np.isin(np.arange(k), significant).astype(int),
        ],
    )
    t = records.acq.times
    mode_cols = [spec_pool.modes[i].samples for i in range(min(3, k))]
    _write_csv(
        emit("mode_functions.csv"),
        ["t_s"] + [f"mode{i + 1}" for i in range(len(mode_cols))],
        [t] + mode_cols,
    )
    figures.render_mode_spectrum(emit("mode_spectrum.png"), spec_pool, significant, k)
    figures.render_mode_functions(emit("mode_functions.png"), t, mode_cols, fit1)

    section = {
        "channel": "pooled (cosine+sine)",
        "whitening": analysis.whitening,
        "kept_rank": spec_pool.kept_rank,
        "n_cycles": records.n_cycles,
        "significant_squeezed_modes": significant,
        "modes": [
            {
                "index": i,
                "variance_rel_shot": float(spec_pool.variances[i]),
                "db": float(spec_pool.db[i]),
                "bootstrap_sd": float(spec_pool.bootstrap_sd[i]),
                "bootstrap_ci": [float(spec_pool.bootstrap_ci[i, 0]),
                                 float(spec_pool.bootstrap_ci[i, 1])],
                "significant": i in significant,
            }
            for i in range(k)
        ],
        "leading_mode_fit": dataclasses.asdict(fit1),
        "second_mode_fit": dataclasses.asdict(fit2) if fit2 else None,
        "channel_comparison": {
            "leading_db_cosine": float(spec_c.db[0]),
            "leading_db_sine": float(spec_s.db[0]),
            "leading_mode_overlap": float(
                abs(spec_c.modes[0].overlap(spec_s.modes[0]))
            ),
        },
    }
    return (spec_pool, spec_c, spec_s), section


def _run_duan(scenario: Scenario, records: RecordEnsemble,
              reference: RecordEnsemble, spectra) -> dict:
    analysis = scenario.analysis
    if analysis.duan_mode == "exponential" or spectra is None:
        rate = analysis.duan_rate_per_s
        if rate is None and scenario.params is not None:
            rate = scenario.params.gamma_sw_per_s
        if rate is None:
            raise ValueError("duan_mode=exponential needs duan_rate_per_s")
        params_like = dataclasses.replace(
            scenario.params, gamma_sw_per_s=rate
        ) if scenario.params is not None else None
        if params_like is not None:
            mode = output_mode(params_like, records.dt, records.n_samples)
        else:
            u = np.exp(-rate * records.acq.times)
            u /= np.sqrt(np.sum(u**2) * records.dt)
            mode = ModeFunction(u, records.dt)
        measurement = mode_measurement(mode)
        method = f"fixed exponential mode at {rate:.6g}/s"
    else:
        spec_pool = spectra[0]
        measurement = spec_pool.measurements[0]
        method = "leading pooled temporal mode"
    cert = duan_from_records(
        records, reference, measurement,
        n_resamples=analysis.bootstrap_resamples, seed=records.seed + 5,
    )
    section = {
        "value": cert.value,
        "sigma": cert.sigma,
        "certified": cert.certified,
        "threshold": 2.0,
        "method": method,
    }
    if spectra is not None:
        _, spec_c, spec_s = spectra
        try:
            op = certify_entanglement(spec_c, spec_s, 0)
            section["matched_channel_certificate"] = {
                "value": op.value,
                "sigma": op.sigma,
                "certified": op.certified,
                "mode_overlap": op.mode_overlap,
            }
        except MismatchedModesError as exc:
            section["matched_channel_certificate"] = {"error": str(exc)}
    return section


def analyze_records(
    records_path: str | Path,
    *,
    reference_path: str | Path | None = None,
    out_dir: str | Path,
    force: bool = False,
    whitening: bool = True,
    mode_count: int = 10,
    bootstrap_resamples: int = 200,
) -> dict:
    """Analyze a pre-existing records file (mode spectrum plus Duan value)."""
    from .recordio import read_records
    from .scenarios import AnalysisOptions, Scenario

    records = read_records(records_path)
    if reference_path is not None:
        reference = read_records(reference_path)
    else:
        # regenerate the reference deterministically from the sidecar config
        reference = shot_noise_reference(records.acq)
    scenario = Scenario(
        name=f"analyze_{Path(records_path).stem}",
        seed=records.seed,
        quadrature=records.quadrature,
        acquisition=records.acq,
        params=records.params,
        atomic=None,
        displacement=None,
        analysis=AnalysisOptions(
            whitening=whitening,
            mode_count=mode_count,
            bootstrap_resamples=bootstrap_resamples,
        ),
        products=("mode_spectrum", "duan"),
        drive_profile=None,
        calibration_note=None,
        raw={},
    )
    out = Path(out_dir)
    if (out / "manifest.json").exists() and not force:
        raise OutputExistsError(f"{out} already contains a run; pass --force")
    out.mkdir(parents=True, exist_ok=True)
    artifacts: list[str] = []

    def emit(name: str) -> Path:
        artifacts.append(name)
        return out / name

    spectra, section = _run_mode_spectrum(scenario, records, reference, emit)
    report = {
        "scenario": scenario.name,
        "version": __version__,
        "seed": records.seed,
        "config_sha256": scenario_fingerprint(scenario),
        "whitening": whitening,
        "calibration_note": None,
        "mode_spectrum": section,
        "duan": _run_duan(scenario, records, reference, spectra),
    }
    emit("report.json").write_text(
        json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    )
    (out / "manifest.json").write_text(json.dumps(_jsonable({
        "scenario": scenario.name,
        "version": __version__,
        "seed": records.seed,
        "config_sha256": report["config_sha256"],
        "whitening": whitening,
        "artifacts": sorted(set(artifacts) | {"manifest.json"}),
        "calibration_note": None,
    }), indent=2, sort_keys=True) + "\n")
    return report
