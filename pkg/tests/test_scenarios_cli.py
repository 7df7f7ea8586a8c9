import json

import numpy as np
import pytest

from swaplight.cli import main
from swaplight.pipeline import OutputExistsError, analyze_records, run_scenario
from swaplight.scenarios import (
    ConfigError,
    bundled_scenario_names,
    load_scenario,
    validate_config,
)

SMALL_RUN = """\
name: tiny_run
seed: 77
quadrature: P
interaction:
  swap:
    gamma_sw_per_s: 175.43859649122805
    xi: 0.3984095364447979
acquisition:
  sample_rate_Hz: 2000.0
  pulse_T_s: 0.008
  n_cycles: 400
  detection_bandwidth_Hz: 600.0
  shot_noise_ref_cycles: 400
analysis:
  bootstrap_resamples: 50
products: [records, mode_spectrum, duan]
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(SMALL_RUN)
    return path


def severities(diags):
    return [d.severity for d in diags]


class TestValidateConfig:
    def test_bundled_scenarios_all_valid(self):
        for name in bundled_scenario_names():
            scenario = load_scenario(name)
            assert scenario.name == name

    def test_defaults_reported_as_info(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("name: x\nproducts: [records]\n")
        diags = validate_config(path)
        assert any(
            d.severity == "info" and "sample_rate" in d.field and "12500" in d.message
            for d in diags
        )
        assert not any(d.severity == "error" for d in diags)

    def test_regime_error_names_exclusion(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text(
            "name: x\nproducts: [records]\n"
            "interaction:\n  swap: {gamma_sw_per_s: 100.0, xi: 1.4}\n"
        )
        diags = validate_config(path)
        errors = [d for d in diags if d.severity == "error"]
        assert len(errors) == 1
        assert "xi" in errors[0].message

    def test_accuracy_guard_flagged(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text(
            "name: x\nproducts: [records]\n"
            "interaction:\n  swap: {gamma_sw_per_s: 2000.0, xi: 0.4}\n"
            "acquisition: {sample_rate_Hz: 2000.0, pulse_T_s: 0.008,\n"
            "  n_cycles: 10, shot_noise_ref_cycles: 10}\n"
        )
        diags = validate_config(path)
        assert any("accuracy guard" in d.message for d in diags)

    def test_unreadable_file(self, tmp_path):
        diags = validate_config(tmp_path / "missing.yaml")
        assert severities(diags) == ["error"]

    def test_unknown_product(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("name: x\nproducts: [nonsense]\n")
        assert any("unknown product" in d.message for d in validate_config(path))

    def test_load_rejects_errors(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("products: [records]\n")
        with pytest.raises(ConfigError, match="name"):
            load_scenario(path)


class TestRunScenario:
    def test_artifact_set(self, small_config, tmp_path):
        scenario = load_scenario(small_config)
        out = tmp_path / "out"
        report = run_scenario(scenario, out)
        manifest = json.loads((out / "manifest.json").read_text())
        for name in manifest["artifacts"]:
            assert (out / name).exists(), name
        assert manifest["config_sha256"] == report["config_sha256"]
        assert manifest["seed"] == 77
        assert (out / "records.bin").exists()
        assert (out / "report.json").exists()
        assert (out / "mode_spectrum.csv").exists()
        assert (out / "mode_spectrum.png").exists()

    def test_overwrite_refused_without_force(self, small_config, tmp_path):
        scenario = load_scenario(small_config)
        out = tmp_path / "out"
        run_scenario(scenario, out)
        with pytest.raises(OutputExistsError):
            run_scenario(scenario, out)
        run_scenario(scenario, out, force=True)

    def test_bit_identical_reruns(self, small_config, tmp_path):
        scenario = load_scenario(small_config)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_scenario(scenario, out_a)
        run_scenario(scenario, out_b)
        for name in ("records.bin", "reference.bin", "report.json",
                     "mode_spectrum.csv", "mode_functions.csv", "manifest.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    def test_seed_override_changes_records(self, small_config, tmp_path):
        scenario = load_scenario(small_config)
        run_scenario(scenario, tmp_path / "a")
        run_scenario(scenario, tmp_path / "b", seed=78)
        assert (tmp_path / "a/records.bin").read_bytes() != (
            tmp_path / "b/records.bin"
        ).read_bytes()

    def test_whitening_override_recorded(self, small_config, tmp_path):
        scenario = load_scenario(small_config)
        report = run_scenario(scenario, tmp_path / "o", whitening=False)
        assert report["whitening"] is False
        assert report["mode_spectrum"]["whitening"] is False


class TestAnalyze:
    def test_analyze_matches_run(self, small_config, tmp_path):
        scenario = load_scenario(small_config)
        out = tmp_path / "run"
        report = run_scenario(scenario, out)
        analysis = analyze_records(
            out / "records.bin",
            reference_path=out / "reference.bin",
            out_dir=tmp_path / "reanalysis",
        )
        a = report["mode_spectrum"]["modes"][0]["variance_rel_shot"]
        b = analysis["mode_spectrum"]["modes"][0]["variance_rel_shot"]
        assert a == pytest.approx(b, rel=1e-12)

    def test_analyze_regenerates_reference(self, small_config, tmp_path):
        scenario = load_scenario(small_config)
        out = tmp_path / "run"
        run_scenario(scenario, out)
        analysis = analyze_records(out / "records.bin", out_dir=tmp_path / "re2")
        assert "mode_spectrum" in analysis


class TestCli:
    def test_validate_ok(self, small_config, capsys):
        assert main(["validate", str(small_config)]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_bad_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("name: x\nproducts: [records]\n"
                        "interaction:\n  swap: {gamma_sw_per_s: 100.0, xi: 2.0}\n")
        assert main(["validate", str(path)]) == 1

    def test_missing_scenario_exit_code(self, capsys):
        assert main(["run", "no_such_scenario"]) == 1

    def test_run_and_overwrite_protection(self, small_config, tmp_path, capsys):
        out = str(tmp_path / "cli_out")
        assert main(["run", str(small_config), "--out", out]) == 0
        assert main(["run", str(small_config), "--out", out]) == 1
        assert main(["run", str(small_config), "--out", out, "--force"]) == 0

    def test_cycles_override(self, small_config, tmp_path):
        out = tmp_path / "cli_out"
        assert main(["run", str(small_config), "--out", str(out),
                     "--cycles", "120"]) == 0
        meta = json.loads((out / "records.bin.json").read_text())
        assert meta["acquisition"]["n_cycles"] == 120

    def test_analyze_cli(self, small_config, tmp_path):
        out = tmp_path / "cli_out"
        assert main(["run", str(small_config), "--out", str(out)]) == 0
        assert main([
            "analyze", str(out / "records.bin"),
            "--reference", str(out / "reference.bin"),
            "--out", str(tmp_path / "cli_analysis"),
        ]) == 0
        assert (tmp_path / "cli_analysis/report.json").exists()

    def test_analyze_missing_file(self, tmp_path):
        assert main(["analyze", str(tmp_path / "nope.bin"),
                     "--out", str(tmp_path / "x")]) == 1


class TestModeShapeScenario:
    def test_flat_top_products(self, tmp_path):
        scenario = load_scenario("flat_top_mode")
        out = tmp_path / "flat"
        report = run_scenario(scenario, out)
        assert report["mode_shape"]["central_coefficient_of_variation"] < 0.02
        data = np.genfromtxt(out / "mode_shape.csv", delimiter=",", names=True)
        assert data["mode_amplitude"].size == 2000
