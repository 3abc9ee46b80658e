"""End-to-end runs of the command line, in process via main()."""

import json
import pathlib
import subprocess
import sys

import pytest

from qndcert.cli import main


def _write_config(directory, name, **overrides):
    payload = {
        "n_pulses": 3,
        "coupling": {"kappa": 1.0},
        "atoms": {"n_atoms": 100.0},
        "light": {"n_photons": 100.0},
        "n_shots": 20000,
        "seed": 11,
    }
    payload.update(overrides)
    path = directory / name
    path.write_text(json.dumps(payload))
    return path


def _simulate(directory, config):
    prefix = directory / "run"
    assert main(["simulate", "--config", str(config),
                 "--out", str(prefix)]) == 0
    return {
        "records": str(directory / "run.with_atoms.csv"),
        "no_atoms": str(directory / "run.no_atoms.csv"),
        "meta": str(directory / "run.meta.json"),
    }


@pytest.fixture(scope="module")
def ideal_run(tmp_path_factory):
    directory = tmp_path_factory.mktemp("ideal")
    config = _write_config(directory, "cfg.json")
    return {"config": str(config), **_simulate(directory, config)}


@pytest.fixture(scope="module")
def lossy_run(tmp_path_factory):
    directory = tmp_path_factory.mktemp("lossy")
    config = _write_config(
        directory, "cfg.json", r_a=0.8, r_l=0.9, seed=13,
        noise={"33": 2.0, "35": 0.5, "55": 4.0})
    return {"config": str(config), **_simulate(directory, config)}


def _record_args(run):
    return ["--records", run["records"],
            "--no-atoms-records", run["no_atoms"]]


class TestSimulate:
    def test_writes_three_files(self, ideal_run):
        for key in ("records", "no_atoms", "meta"):
            assert pathlib.Path(ideal_run[key]).exists()
        meta = json.loads(pathlib.Path(ideal_run["meta"]).read_text())
        assert meta["n_shots"] == 20000
        assert meta["seed"] == 11

    def test_shot_and_seed_overrides(self, tmp_path, ideal_run):
        assert main(["simulate", "--config", ideal_run["config"],
                     "--out", str(tmp_path / "small"),
                     "--shots", "64", "--seed", "5"]) == 0
        meta = json.loads((tmp_path / "small.meta.json").read_text())
        assert meta["n_shots"] == 64
        assert meta["seed"] == 5

    def test_rerun_is_byte_identical(self, tmp_path, ideal_run):
        for sub in ("a", "b"):
            (tmp_path / sub).mkdir()
            assert main(["simulate", "--config", ideal_run["config"],
                         "--out", str(tmp_path / sub / "run"),
                         "--shots", "500"]) == 0
        for name in ("run.with_atoms.csv", "run.no_atoms.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes()

    def test_missing_config(self, tmp_path, capsys):
        code = main(["simulate", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "run")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_rejects_zero_shots(self, tmp_path, ideal_run):
        assert main(["simulate", "--config", ideal_run["config"],
                     "--out", str(tmp_path / "run"), "--shots", "0"]) == 2


class TestStats:
    def test_prints_moment_table(self, ideal_run, capsys):
        assert main(["stats", *_record_args(ideal_run)]) == 0
        out = capsys.readouterr().out
        assert "shots: 20000 per arm, 3 pulse(s)" in out
        assert "var_p" in out and "d_cov_pr" in out

    def test_json_output(self, ideal_run, tmp_path, capsys):
        out_path = tmp_path / "stats.json"
        assert main(["stats", *_record_args(ideal_run),
                     "--out", str(out_path)]) == 0
        payload = json.loads(out_path.read_text())
        assert payload["kind"] == "moment_stats"
        assert payload["r_l"] == 1.0
        # ideal arm: var(P_y) = 50, delta = kappa^2 var(J_z) = 25
        assert abs(payload["with_atoms"]["var_p"] - 50.0) < 2.5
        assert abs(payload["delta"]["d_var_p"] - 25.0) < 3.5

    def test_meta_not_required(self, ideal_run, tmp_path, capsys):
        # copy the CSVs under names the sidecar discovery cannot match
        for key, name in (("records", "x.csv"), ("no_atoms", "y.csv")):
            (tmp_path / name).write_bytes(
                pathlib.Path(ideal_run[key]).read_bytes())
        assert main(["stats",
                     "--records", str(tmp_path / "x.csv"),
                     "--no-atoms-records", str(tmp_path / "y.csv")]) == 0

    def test_missing_records_file(self, ideal_run, tmp_path, capsys):
        code = main(["stats",
                     "--records", str(tmp_path / "gone.with_atoms.csv"),
                     "--no-atoms-records", ideal_run["no_atoms"]])
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestEstimate:
    def test_recovers_losses_and_noise(self, lossy_run, tmp_path, capsys):
        out_path = tmp_path / "est.json"
        code = main(["estimate", *_record_args(lossy_run),
                     "--r-l", "0.9", "--kappa", "1.0", "--j33", "25.0",
                     "--out", str(out_path)])
        assert code == 0
        payload = json.loads(out_path.read_text())
        assert payload["kind"] == "model_estimates"
        estimates = payload["estimates"]
        assert abs(estimates["r_a"] - 0.8) < 0.1
        noise = estimates["noise"]
        assert abs(noise["n55"] - 4.0) < 2.0
        assert abs(noise["n33"] - 2.0) < 4.0
        out = capsys.readouterr().out
        assert "r_a (covariance ratio):" in out

    def test_ideal_data_has_no_loss_signal(self, ideal_run, capsys):
        # with r_a = 1 and no added noise the variance route degenerates
        assert main(["estimate", *_record_args(ideal_run),
                     "--kappa", "1.0", "--j33", "25.0"]) == 0
        out = capsys.readouterr().out
        assert "r_a (covariance ratio):" in out


class TestCertify:
    def test_ideal_certifies(self, ideal_run, capsys):
        code = main(["certify", "--config", ideal_run["config"],
                     *_record_args(ideal_run)])
        out = capsys.readouterr().out
        assert code == 0
        assert "certified: yes" in out
        assert "verdict full_qnd:    PASS" in out

    def test_report_file(self, ideal_run, tmp_path):
        out_path = tmp_path / "report.json"
        assert main(["certify", "--config", ideal_run["config"],
                     *_record_args(ideal_run), "--out", str(out_path)]) == 0
        payload = json.loads(out_path.read_text())
        assert payload["kind"] == "certification_report"
        assert payload["verdicts"]["full_qnd"] is True

    def test_calibration_flags_without_config(self, ideal_run, capsys):
        code = main(["certify", *_record_args(ideal_run),
                     "--kappa", "1.0", "--j33", "25.0", "--j0", "25.0"])
        assert code == 0
        assert "certified: yes" in capsys.readouterr().out

    def test_flag_overrides_config(self, ideal_run, capsys):
        # shrinking the projection-noise reference makes the same data fail
        code = main(["certify", "--config", ideal_run["config"],
                     *_record_args(ideal_run), "--j0", "5.0"])
        assert code == 10
        assert "certified: no" in capsys.readouterr().out

    def test_lossy_run_uses_config_r_l(self, lossy_run, tmp_path):
        out_path = tmp_path / "report.json"
        assert main(["certify", "--config", lossy_run["config"],
                     *_record_args(lossy_run), "--out", str(out_path)]) == 0
        payload = json.loads(out_path.read_text())
        assert payload["calibration"]["r_l"] == 0.9

    def test_damaging_noise_fails(self, tmp_path, capsys):
        config = _write_config(tmp_path, "bad.json", seed=12,
                               noise={"33": 400.0})
        run = _simulate(tmp_path, config)
        code = main(["certify", "--config", str(config), *_record_args(run)])
        out = capsys.readouterr().out
        assert code == 10
        assert "certified: no" in out
        assert "verdict state_prep:  FAIL" in out

    def test_weak_coupling_is_inconclusive(self, tmp_path, capsys):
        config = _write_config(tmp_path, "weak.json", seed=12,
                               coupling={"g_tau": 0.001},
                               noise={"33": 400.0})
        run = _simulate(tmp_path, config)
        code = main(["certify", "--config", str(config), *_record_args(run)])
        out = capsys.readouterr().out
        assert code == 2
        assert "certified: inconclusive" in out
        assert "note:" in out

    def test_missing_calibration_is_usage_error(self, ideal_run, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["certify", *_record_args(ideal_run), "--kappa", "1.0"])
        assert excinfo.value.code == 2
        assert "--j33 is required" in capsys.readouterr().err


class TestSelftest:
    def test_small_run_passes(self, capsys):
        assert main(["selftest", "--sets", "8", "--shots", "4000",
                     "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert "all 6 suites passed" in out

    def test_flipped_coupling_still_passes(self, capsys):
        assert main(["selftest", "--sets", "6", "--shots", "4000",
                     "--seed", "4", "--flip-coupling-sign"]) == 0

    def test_corrupted_subtraction_is_caught(self, capsys):
        assert main(["selftest", "--sets", "6", "--shots", "4000",
                     "--seed", "5", "--corrupt-delta"]) == 1
        out = capsys.readouterr().out
        assert "FAIL  delta-subtraction-identity" in out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qndcert", "--help"],
        capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert "simulate" in proc.stdout and "certify" in proc.stdout
