"""Experiment runner: validation, determinism, CSV contract, CLI.

Determinism is the load-bearing property here: every grid point draws
from streams keyed on (seed, index[, trial]), so the same config and
seed must produce byte-identical CSV files regardless of thread count.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from risestim.exceptions import ConfigValidationError
from risestim.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentRecord,
    max_workers,
    run,
    write_csv,
)


def _write_config(tmp_path, name="cfg.json", **body):
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return str(path)


class TestValidation:
    def test_unknown_experiment_rejected(self):
        with pytest.raises(ConfigValidationError, match="unknown experiment"):
            ExperimentConfig(experiment="nope").validate()

    def test_valid_default_configs_pass(self):
        for exp in ("narrowband-mse", "spectral-efficiency", "optimal-size",
                    "sparse", "ofdm", "multiuser", "opportunistic"):
            ExperimentConfig(experiment=exp).validate()

    def test_hadamard_needs_power_of_two(self):
        cfg = ExperimentConfig(experiment="narrowband-mse",
                               params={"n": 6, "families": ["hadamard"]})
        with pytest.raises(ConfigValidationError, match="power-of-2"):
            cfg.validate()

    def test_training_longer_than_block_rejected(self):
        cfg = ExperimentConfig(experiment="spectral-efficiency",
                               params={"n": 150, "t": 150})
        with pytest.raises(ConfigValidationError, match="n < t"):
            cfg.validate()

    def test_errors_are_aggregated(self):
        cfg = ExperimentConfig(experiment="narrowband-mse", seed=-1,
                               params={"n": 0, "snr_db": []})
        with pytest.raises(ConfigValidationError) as exc_info:
            cfg.validate()
        assert len(exc_info.value.errors) >= 3

    def test_unknown_parameter_rejected(self):
        cfg = ExperimentConfig(experiment="ofdm", params={"bandwidth": 20})
        with pytest.raises(ConfigValidationError, match="bandwidth"):
            cfg.validate()

    def test_sparse_paths_cannot_exceed_grid(self):
        cfg = ExperimentConfig(experiment="sparse", params={"l_paths": 9})
        with pytest.raises(ConfigValidationError, match="l_paths"):
            cfg.validate()

    def test_ofdm_pilot_spacing_must_divide(self):
        cfg = ExperimentConfig(experiment="ofdm", params={"pilot_spacing": 5})
        with pytest.raises(ConfigValidationError, match="divide"):
            cfg.validate()

    def test_ofdm_pilot_tones_must_cover_taps(self):
        cfg = ExperimentConfig(experiment="ofdm",
                               params={"pilot_spacing": 16, "taps": 4})
        with pytest.raises(ConfigValidationError, match="cannot identify"):
            cfg.validate()

    def test_invalid_trials_rejected(self):
        cfg = ExperimentConfig(experiment="multiuser", trials=0)
        with pytest.raises(ConfigValidationError, match="trials"):
            cfg.validate()

    def test_q_list_checked(self):
        cfg = ExperimentConfig(experiment="opportunistic",
                               params={"q_list": [1, 0]})
        with pytest.raises(ConfigValidationError, match="q_list"):
            cfg.validate()


class TestRecordFormatting:
    def test_nine_significant_digits_and_blanks(self):
        record = ExperimentRecord(
            experiment="x", scheme="s", snr_db=0.123456789012, n=None, t=3,
            j=None, metric_name="m", metric_value=1.0 / 3.0, std_error=None,
            trials=10, seed=7)
        row = record.as_row()
        assert row[2] == "0.123456789"
        assert row[3] == ""
        assert row[7] == "0.333333333"
        assert row[8] == ""
        assert row[9] == "10"

    def test_csv_layout(self, tmp_path):
        record = ExperimentRecord(
            experiment="x", scheme="s", snr_db=1.0, n=2, t=3, j=4,
            metric_name="m", metric_value=5.0, std_error=0.25, trials=6,
            seed=7)
        path = tmp_path / "rows.csv"
        write_csv([record], str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1] == "x,s,1,2,3,4,m,5,0.25,6,7"


class TestRunGrid:
    def test_spectral_efficiency_row_count(self):
        cfg = ExperimentConfig(experiment="spectral-efficiency", trials=3)
        records = run(cfg)
        assert len(records) == 2 * 7 * 2
        schemes = {r.scheme for r in records}
        metrics = {r.metric_name for r in records}
        assert schemes == {"canonical", "orthogonal"}
        assert metrics == {"rate_equal", "rate_optimal"}

    def test_mse_ratio_tracks_surface_size(self):
        # At 10 dB the canonical/DFT LS error-variance ratio approaches
        # the surface size (closed-form oracle from the estimator module).
        n = 8
        cfg = ExperimentConfig(
            experiment="narrowband-mse", trials=400, seed=3,
            params={"m_t": 1, "m_r": 1, "n": n, "snr_db": [10.0],
                    "families": ["canonical", "dft"], "estimators": ["ls"]})
        by_scheme = {r.scheme: r.metric_value for r in run(cfg)}
        ratio = by_scheme["ls-canonical"] / by_scheme["ls-dft"]
        assert ratio == pytest.approx(n, rel=0.10)

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="narrowband-mse", trials=40, seed=11,
            params={"m_t": 1, "m_r": 1, "n": 4, "snr_db": [0.0, 10.0]})
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(run(cfg), str(first))
        write_csv(run(cfg), str(second))
        assert first.read_bytes() == second.read_bytes()

    def test_thread_count_does_not_change_output(self, tmp_path, monkeypatch):
        cfg = ExperimentConfig(
            experiment="opportunistic", trials=60, seed=5,
            params={"n": 8, "snr_db": [10.0], "q_list": [1, 4]})
        monkeypatch.setenv("RISESTIM_THREADS", "1")
        serial = tmp_path / "serial.csv"
        write_csv(run(cfg), str(serial))
        monkeypatch.setenv("RISESTIM_THREADS", "4")
        threaded = tmp_path / "threaded.csv"
        write_csv(run(cfg), str(threaded))
        assert serial.read_bytes() == threaded.read_bytes()

    def test_worker_env_parsing(self, monkeypatch):
        monkeypatch.setenv("RISESTIM_THREADS", "3")
        assert max_workers() == 3
        monkeypatch.setenv("RISESTIM_THREADS", "zero")
        with pytest.raises(ValueError):
            max_workers()
        monkeypatch.setenv("RISESTIM_THREADS", "0")
        with pytest.raises(ValueError):
            max_workers()
        monkeypatch.delenv("RISESTIM_THREADS")
        assert max_workers() >= 1


def _run_cli(args, tmp_path):
    env = dict(os.environ, RISESTIM_THREADS="2")
    return subprocess.run(
        [sys.executable, "-m", "risestim.cli", *args],
        capture_output=True, text=True, cwd=str(tmp_path), env=env)


class TestCli:
    def test_successful_run_writes_csv(self, tmp_path):
        config = _write_config(
            tmp_path, experiment="opportunistic", seed=9, trials=20,
            params={"n": 4, "snr_db": [10.0], "q_list": [1, 2]})
        out_dir = tmp_path / "results"
        proc = _run_cli(["opportunistic", "--config", config,
                         "--out", str(out_dir)], tmp_path)
        assert proc.returncode == 0, proc.stderr
        csv_path = out_dir / "opportunistic.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 2

    def test_cli_reruns_are_byte_identical(self, tmp_path):
        config = _write_config(
            tmp_path, experiment="multiuser", seed=4, trials=10,
            params={"k_users": 2, "n": 4, "m_rx": 2, "snr_db": [20.0]})
        outs = []
        for sub in ("r1", "r2"):
            proc = _run_cli(["multiuser", "--config", config,
                             "--out", str(tmp_path / sub)], tmp_path)
            assert proc.returncode == 0, proc.stderr
            outs.append((tmp_path / sub / "multiuser.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_invalid_config_exits_two(self, tmp_path):
        config = _write_config(
            tmp_path, experiment="narrowband-mse",
            params={"n": 6, "families": ["hadamard"]})
        proc = _run_cli(["narrowband-mse", "--config", config], tmp_path)
        assert proc.returncode == 2
        assert "power-of-2" in proc.stderr

    def test_experiment_mismatch_exits_two(self, tmp_path):
        config = _write_config(tmp_path, experiment="ofdm")
        proc = _run_cli(["multiuser", "--config", config], tmp_path)
        assert proc.returncode == 2
        assert "command" in proc.stderr

    def test_unknown_config_key_exits_two(self, tmp_path):
        config = _write_config(tmp_path, experiment="ofdm", retries=3)
        proc = _run_cli(["ofdm", "--config", config], tmp_path)
        assert proc.returncode == 2
        assert "retries" in proc.stderr

    def test_missing_config_file_exits_two(self, tmp_path):
        proc = _run_cli(["ofdm", "--config", str(tmp_path / "absent.json")],
                        tmp_path)
        assert proc.returncode == 2

    def test_malformed_json_exits_two(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        proc = _run_cli(["ofdm", "--config", str(path)], tmp_path)
        assert proc.returncode == 2
        assert "JSON" in proc.stderr

    def test_seed_flag_overrides_config(self, tmp_path):
        config = _write_config(
            tmp_path, experiment="opportunistic", seed=1, trials=15,
            params={"n": 4, "snr_db": [10.0], "q_list": [2]})
        rows = []
        for sub, seed_args in (("s1", []), ("s2", ["--seed", "123"])):
            proc = _run_cli(["opportunistic", "--config", config,
                             "--out", str(tmp_path / sub), *seed_args],
                            tmp_path)
            assert proc.returncode == 0, proc.stderr
            rows.append((tmp_path / sub / "opportunistic.csv").read_text())
        assert rows[0] != rows[1]
        assert rows[1].splitlines()[1].endswith(",123")
