import json

import numpy as np
import pytest

from ssgauss.cli import main
from ssgauss.sampler import read_batch


def run_cli(args):
    return main(args)


def test_models_table(capsys):
    assert run_cli(["models"]) == 0
    out = capsys.readouterr().out
    assert "swanson" in out and "0.5" in out and "bifbm" in out


def test_models_json(capsys):
    assert run_cli(["models", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert {r["model"] for r in rows} == {"fbm", "subfbm", "bifbm", "swanson",
                                          "dw-z1", "dw-z2"}


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        run_cli(["models", "--nosuchflag"])
    assert exc.value.code == 2


def test_variance_brownian(tmp_path, capsys):
    rc = run_cli(["variance", "--model", "fbm", "--H", "0.5", "--f", "hermite:2",
                  "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads((tmp_path / "variance.json").read_text())
    assert payload["sigma_sq"] == pytest.approx(2.0)
    assert payload["per_chaos"]["2"] == pytest.approx(2.0)
    assert payload["version"]
    assert payload["config"]["model"] == "fbm"


def test_variance_arcsine_matches_series_value(tmp_path):
    rc = run_cli(["variance", "--model", "swanson", "--f", "hermite:2",
                  "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads((tmp_path / "variance.json").read_text())
    # frozen direct-summation value of the limit series at alpha = 1/2
    assert payload["sigma_sq"] == pytest.approx(2.35748744831344, abs=5e-10)
    assert payload["tails"]["2"] > 0.0


def test_variance_gate_exit_3(tmp_path, capsys):
    rc = run_cli(["variance", "--model", "fbm", "--H", "0.8", "--f", "hermite:2",
                  "--out", str(tmp_path)])
    assert rc == 3
    err = capsys.readouterr().err
    assert "2 - 1/d" in err
    assert not (tmp_path / "variance.json").exists()


def test_clt_gate_exit_3(tmp_path):
    rc = run_cli(["clt", "--model", "fbm", "--H", "0.8", "--f", "hermite:2",
                  "--n", "64", "--M", "200", "--out", str(tmp_path)])
    assert rc == 3
    assert not (tmp_path / "experiment.json").exists()


def test_clt_rank_gate_exit_3(tmp_path):
    rc = run_cli(["clt", "--model", "fbm", "--H", "0.5", "--f", "hermite:1",
                  "--n", "64", "--M", "200", "--out", str(tmp_path)])
    assert rc == 3


def test_clt_run_and_report_round_trip(tmp_path, capsys):
    rc = run_cli(["clt", "--model", "fbm", "--H", "0.5", "--f", "hermite:2",
                  "--n", "128", "--t-grid", "0.5,1.0", "--M", "400",
                  "--seed", "7", "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads((tmp_path / "experiment.json").read_text())
    assert payload["passed"] is True
    assert payload["config"]["n"] == 128
    assert payload["config"]["seed"] == 7
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == "t,exact_var,sample_var,se,kurtosis_ratio,ks_stat,ks_p"
    assert len(summary) == 3
    capsys.readouterr()
    rc = run_cli(["report", "--input", str(tmp_path / "experiment.json")])
    assert rc == 0
    assert "rederived verdict = pass" in capsys.readouterr().out


def test_clt_underreplication_exit_2(tmp_path):
    rc = run_cli(["clt", "--model", "fbm", "--H", "0.5", "--f", "hermite:2",
                  "--n", "64", "--M", "50", "--out", str(tmp_path)])
    assert rc == 2


def test_clt_bad_time_grid_exit_2(tmp_path):
    rc = run_cli(["clt", "--model", "fbm", "--H", "0.5", "--f", "hermite:2",
                  "--n", "64", "--M", "200", "--t-grid", "0", "--out", str(tmp_path)])
    assert rc == 2


def test_check_swanson_passes(tmp_path, capsys):
    rc = run_cli(["check", "--model", "swanson", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "far-covariance-decay" in out
    reports = json.loads((tmp_path / "reports" / "swanson_checks.json").read_text())
    assert all(rep["verdict"] for rep in reports["reports"].values())


def test_check_smooth_model_fails_exit_4(tmp_path):
    rc = run_cli(["check", "--model", "dw-z1", "--alpha", "0.5", "--out", str(tmp_path)])
    assert rc == 4


def test_check_gate_warning_still_runs(tmp_path, capsys):
    rc = run_cli(["check", "--model", "fbm", "--H", "0.9", "--f", "hermite:2",
                  "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert "warning" in out and "1.5" in out
    assert rc == 0  # audits themselves pass for fbm


def test_contraction_brownian_values(tmp_path, capsys):
    rc = run_cli(["contraction", "--model", "fbm", "--H", "0.5", "--q", "2",
                  "--n", "64,128,256", "--out", str(tmp_path)])
    assert rc == 0
    rows = json.loads((tmp_path / "contraction.json").read_text())["norms"]
    assert [r["norm"] for r in rows] == pytest.approx([1 / 64, 1 / 128, 1 / 256])


def test_simulate_threads_deterministic(tmp_path):
    base = ["simulate", "--model", "fbm", "--H", "0.7", "--n", "64", "--N", "64",
            "--M", "300", "--seed", "5"]
    d1, d8 = tmp_path / "a", tmp_path / "b"
    assert run_cli(base + ["--threads", "1", "--out", str(d1)]) == 0
    assert run_cli(base + ["--threads", "8", "--out", str(d8)]) == 0
    assert (d1 / "batch.bin").read_bytes() == (d8 / "batch.bin").read_bytes()
    header, data = read_batch(d1 / "batch.bin")
    assert header == {"n": 64, "N": 64, "M": 300, "seed": 5}
    assert data.shape == (300, 64)


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("SSGAUSS_SEED", "4242")
    rc = run_cli(["simulate", "--model", "fbm", "--H", "0.5", "--n", "8",
                  "--M", "2", "--out", str(tmp_path)])
    assert rc == 0
    meta = json.loads((tmp_path / "batch.json").read_text())
    assert meta["config"]["seed"] == 4242


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "fbm", "H": 0.5, "f": "hermite:2",
                               "n": 64, "M": 200, "seed": 1}))
    rc = run_cli(["clt", "--config", str(cfg), "--n", "128", "--print-config"])
    assert rc == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["n"] == 128  # flag wins
    assert shown["M"] == 200  # file value survives
    rc = run_cli(["clt", "--config", str(cfg), "--n", "128", "--M", "400",
                  "--out", str(tmp_path)])
    assert rc == 0
    echo = json.loads((tmp_path / "experiment.json").read_text())["config"]
    assert echo["n"] == 128 and echo["M"] == 400


def test_report_missing_file_exit_2(tmp_path):
    assert run_cli(["report", "--input", str(tmp_path / "none.json")]) == 2
