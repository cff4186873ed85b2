import json
import math

import numpy as np
import pytest

from nlsechan import ComplexField
from nlsechan.cli import main


def run_cli(tmp_path, *argv):
    out = tmp_path / "out.txt"
    code = main([*argv, "--out", str(out)])
    return code, out.read_text()


def rows_of(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "link.json"
    path.write_text(json.dumps({"channel": {
        "beta_ps2_per_km": 20.0, "gamma_per_w_km": 1.31, "length_km": 1000.0,
        "bandwidth_ghz": 100.0, "noise_power_w": 5.3e-7},
        "grid": {"m_meaning": 16, "oversampling": 4},
        "propagation": {"n_steps": 50}}))
    return str(path)


def test_gfun_single_zero(tmp_path):
    code, text = run_cli(tmp_path, "gfun", "--bt", "0",
                         "--methods", "series,cubature,asymptotic")
    assert code == 0
    header, rows = rows_of(text)
    row = dict(zip(header, rows[0]))
    assert float(row["g_series"]) == 1.0
    assert float(row["g_cubature"]) == pytest.approx(1.0, abs=1e-10)
    assert row["g_asymptotic"] == ""
    assert "asymptotic:DomainError" in row["status"]


def test_gfun_at_200(tmp_path):
    code, text = run_cli(tmp_path, "gfun", "--bt", "200",
                         "--methods", "exact,asymptotic")
    header, rows = rows_of(text)
    row = dict(zip(header, rows[0]))
    assert float(row["g_exact"]) == pytest.approx(0.42, abs=0.01)
    assert float(row["g_asymptotic"]) < float(row["g_exact"])


def test_gfun_grid_monotone(tmp_path):
    code, text = run_cli(tmp_path, "gfun", "--bt-min", "1", "--bt-max", "2000",
                         "--bt-points", "50", "--bt-spacing", "log",
                         "--methods", "exact")
    assert code == 0
    _, rows = rows_of(text)
    vals = [float(r[1]) for r in rows]
    assert len(vals) == 50
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_gfun_header_comment(tmp_path):
    _, text = run_cli(tmp_path, "gfun", "--bt", "1", "--seed", "7",
                      "--methods", "series")
    first = text.splitlines()[0]
    assert first.startswith("# config=") and "seed=7" in first


def test_sweep_standard_link(tmp_path, config_path):
    code, text = run_cli(tmp_path, "sweep", "--config", config_path,
                         "--snr-db-min", "0", "--snr-db-max", "45", "--points", "91")
    assert code == 0
    header, rows = rows_of(text)
    data = {h: np.array([float(r[i]) for r in rows])
            for i, h in enumerate(header) if h != "status"}
    # all nonlinear models within 0.1 nat of the linear bound at 25 dB
    at25 = int(np.argmin(np.abs(data["snr_db"] - 25.0)))
    for col in ("se_dispersive", "se_nondispersive_exact", "se_nondispersive_expansion"):
        assert data["se_shannon"][at25] - data[col][at25] < 0.1
    # quadratic-truncation column peaks near 32 dB
    peak_db = data["snr_db"][int(np.argmax(data["se_nondispersive_expansion"]))]
    assert peak_db == pytest.approx(32.0, abs=1.0)


def test_sweep_linear_config(tmp_path):
    path = tmp_path / "lin.json"
    path.write_text(json.dumps({"channel": {
        "beta_ps2_per_km": 20.0, "gamma_per_w_km": 0.0, "length_km": 1000.0,
        "bandwidth_ghz": 100.0, "noise_power_w": 5.3e-7}}))
    code, text = run_cli(tmp_path, "sweep", "--config", str(path),
                         "--snr-db-min", "10", "--snr-db-max", "20", "--points", "3")
    assert code == 0
    header, rows = rows_of(text)
    for r in rows:
        row = dict(zip(header, r))
        snr = float(row["snr"])
        assert float(row["se_shannon"]) == pytest.approx(math.log1p(snr), rel=1e-12)
        for col in ("se_dispersive", "se_nondispersive_exact", "se_nondispersive_expansion"):
            assert float(row[col]) == pytest.approx(math.log(snr), rel=1e-12)


def test_sweep_deterministic_bytes(tmp_path, config_path):
    _, a = run_cli(tmp_path, "sweep", "--config", config_path, "--points", "11")
    _, b = run_cli(tmp_path, "sweep", "--config", config_path, "--points", "11")
    assert a == b


def test_crossover_cmd(tmp_path, config_path):
    code, text = run_cli(tmp_path, "crossover", "--config", config_path,
                         "--beta-tilde", "200,800,0")
    assert code == 0
    header, rows = rows_of(text)
    assert float(rows[0][1]) == pytest.approx(33.0, abs=1.0)
    assert float(rows[1][1]) == pytest.approx(37.0, abs=1.0)
    assert rows[2][header.index("status")] == "NoBracketError"


def test_simulate_writes_fields(tmp_path, config_path):
    field_bin = tmp_path / "field.nlsf"
    field_csv = tmp_path / "field.csv"
    code, text = run_cli(tmp_path, "simulate", "--config", config_path,
                         "--snr-db", "20", "--seed", "3",
                         "--field-out", str(field_bin), "--field-csv", str(field_csv))
    assert code == 0
    back = ComplexField.read_binary(field_bin)
    assert back.grid.m_total == 64
    kv = dict(ln.split("=", 1) for ln in text.splitlines() if "=" in ln and not ln.startswith("#"))
    assert float(kv["output_power_w"]) > 0.0
    assert field_csv.read_text().startswith("index,coordinate,re,im")


def test_simulate_needs_power(tmp_path, config_path):
    code = main(["simulate", "--config", config_path, "--out", str(tmp_path / "o")])
    assert code == 2


def test_mi_mc_cmd(tmp_path):
    code, text = run_cli(tmp_path, "mi-mc", "--snr-db", "30", "--gamma-tilde", "0.5",
                         "--n-outer", "1000", "--n-inner", "1000", "--seed", "2")
    assert code == 0
    kv = dict(ln.split("=", 1) for ln in text.splitlines() if not ln.startswith("#"))
    pen_mc = float(kv["penalty_estimate"])
    pen = float(kv["penalty_analytic"])
    se = float(kv["std_error"])
    assert abs(pen_mc - pen) <= max(3.0 * se, 0.1 * pen)


def test_validate_fast_passes(tmp_path):
    code, text = run_cli(tmp_path, "validate", "--suite", "fast", "--seed", "123")
    assert code == 0
    assert "result=PASS" in text
    assert "status=FAIL" not in text


def test_validate_reports_are_reproducible(tmp_path):
    _, a = run_cli(tmp_path, "validate", "--suite", "fast", "--seed", "123")
    _, b = run_cli(tmp_path, "validate", "--suite", "fast", "--seed", "123")
    assert a == b


def test_validate_negative_control(tmp_path):
    code, text = run_cli(tmp_path, "validate", "--suite", "fast", "--seed", "123",
                         "--inject-fault", "g-dispatch")
    assert code == 1
    flagged = [ln for ln in text.splitlines()
               if ln.startswith("check=g_overlap_consistency")]
    assert flagged and "status=FAIL" in flagged[0]
    assert "result=FAIL" in text


def test_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"channel": {"length_km": 1000.0}}))
    code = main(["sweep", "--config", str(bad), "--out", str(tmp_path / "o.csv")])
    assert code == 2


def test_figure_presets(tmp_path, config_path):
    for which in ("fig1", "fig2", "fig3"):
        code, text = run_cli(tmp_path, "figure", "--which", which,
                             "--config", config_path)
        assert code == 0
        header, rows = rows_of(text)
        assert len(rows) >= 50
    # fig3 carries the stronger-dispersion column
    assert "se_dispersive_4x" in header


def test_threads_env_override(tmp_path, config_path, monkeypatch):
    monkeypatch.setenv("NLSECHAN_THREADS", "2")
    code, text = run_cli(tmp_path, "mi-mc", "--snr-db", "30", "--gamma-tilde", "0.3",
                         "--n-outer", "1000", "--n-inner", "1000", "--seed", "5")
    assert code == 0
    monkeypatch.delenv("NLSECHAN_THREADS")
    _, again = run_cli(tmp_path, "mi-mc", "--snr-db", "30", "--gamma-tilde", "0.3",
                       "--n-outer", "1000", "--n-inner", "1000", "--seed", "5")
    assert again == text  # thread count never changes results
