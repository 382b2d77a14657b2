import csv
import io
import json
import math
import subprocess
import sys

import pytest

from qlidar import (
    PRESETS,
    ConfigError,
    DecisionPolicy,
    DetectorModel,
    ScenarioConfig,
    build_bin_distributions,
    emit,
    mean_clicks,
    pmf_convolve,
    pmf_poisson,
    pmf_thermal,
    run_scenario,
)
from qlidar.cli import run
from qlidar.scenario import CSV_COLUMNS, parse_config

SPEC_COLUMNS = ["scenario", "sigma", "detector", "M", "eta", "pd", "rule", "compare",
                "S", "n_c", "N", "N_s", "P", "std_error", "exact_P"]


def test_presets():
    assert PRESETS == {"hsln": (10, 1), "lsln": (1, 1), "hshn": (10, 10), "lshn": (1, 10)}
    cfg = ScenarioConfig.from_preset("HSHN")
    assert (cfg.mu_s, cfg.mu_n, cfg.name) == (10, 10, "hshn")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_preset("mid")


def test_bin_means_ideal():
    good, bad = build_bin_distributions(ScenarioConfig.from_preset("hsln"))
    assert good.mean == pytest.approx(11.0, abs=1e-6)
    assert bad.mean == pytest.approx(1.0, abs=1e-6)


def test_bin_means_real_detector():
    det = DetectorModel.multiplexed(16, 0.1, 1e-4)
    good, bad = build_bin_distributions(ScenarioConfig.from_preset("hsln", detector=det))
    photons = pmf_convolve(pmf_poisson(10.0), pmf_thermal(1.0))
    assert good.mean == pytest.approx(mean_clicks(photons, det), abs=1e-9)
    assert bad.mean == pytest.approx(mean_clicks(pmf_thermal(1.0), det), abs=1e-9)


def test_bin_means_scintillated():
    good, _ = build_bin_distributions(ScenarioConfig.from_preset("hsln", sigma=1.5))
    assert abs(good.mean - 11.0) / 11.0 < 1e-3


def test_poisson_noise_model():
    _, bad = build_bin_distributions(ScenarioConfig.from_preset("lshn", noise_model="poisson"))
    assert bad.variance == pytest.approx(10.0, abs=1e-6)


@pytest.mark.parametrize(
    "kwargs",
    [dict(mu_s=0), dict(mu_n=-1), dict(noise_model="pink"), dict(sigma=-0.1), dict(thresholds=()),
     dict(nc_values=()), dict(nc_values=(0,)), dict(seed=2**64), dict(output_format="xml")],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        ScenarioConfig(**kwargs)


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_lsln_grid_csv():
    res = run_scenario(ScenarioConfig.from_preset("lsln", policy=DecisionPolicy(runs=200)))
    text = emit(res, "csv")
    rows = _rows(text)
    assert len(rows) == 33
    assert rows[0][: len(SPEC_COLUMNS)] == SPEC_COLUMNS
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert text.count("\r\n") == 33
    assert {(r[8], r[9]) for r in rows[1:]} == {(str(s), str(n)) for s in (1, 2, 5, 10) for n in (1, 2, 4, 8, 16, 32, 64, 128)}


def test_hsln_default_policy_cell():
    res = run_scenario(ScenarioConfig.from_preset("hsln"))
    assert res.cell(5, 8).P >= 0.95


def test_one_cell_csv_two_lines():
    cfg = ScenarioConfig.from_preset("hsln", thresholds=(5,), nc_values=(2,), policy=DecisionPolicy(runs=100))
    assert len(emit(run_scenario(cfg)).splitlines()) == 2


def test_nine_significant_digits():
    cfg = ScenarioConfig.from_preset("lsln", thresholds=(1,), nc_values=(3,), policy=DecisionPolicy(runs=7))
    row = _rows(emit(run_scenario(cfg)))[1]
    exact = float(row[CSV_COLUMNS.index("exact_P")])
    assert row[CSV_COLUMNS.index("exact_P")] == format(exact, ".9g")
    assert len(row[CSV_COLUMNS.index("P")].lstrip("0.").rstrip("0")) <= 9


def test_json_round_trip():
    cfg = ScenarioConfig.from_preset("hshn", thresholds=(1, 10), nc_values=(1, 8), policy=DecisionPolicy(runs=300), seed=17)
    res = run_scenario(cfg)
    doc = json.loads(emit(res, "json"))
    assert set(doc) == {"metadata", "rows"}
    assert doc["metadata"]["seed"] == 17 and doc["metadata"]["policy"]["rule"] == "plurality"
    assert len(doc["rows"]) == 4
    for parsed, row in zip(doc["rows"], res.rows):
        for col in CSV_COLUMNS:
            v = getattr(row, col)
            if isinstance(v, float):
                assert parsed[col] == float(format(v, ".9g"))
            else:
                assert parsed[col] == v


def test_rows_reproducible_in_isolation():
    cfg = ScenarioConfig.from_preset("lsln", policy=DecisionPolicy(runs=300), seed=5)
    full = run_scenario(cfg)
    row = full.cell(2, 16)
    solo = run_scenario(cfg.with_(thresholds=(row.S,), nc_values=(row.n_c,), seed=row.seed)).rows[0]
    assert solo == row


def test_byte_identical_reruns_any_worker_count():
    cfg = ScenarioConfig.from_preset("hshn", detector=DetectorModel.multiplexed(), policy=DecisionPolicy(runs=500))
    a = emit(run_scenario(cfg))
    b = emit(run_scenario(cfg, workers=4))
    assert a == b


# --- config files ----------------------------------------------------------

GOOD_INI = """
[scenario]
preset = lshn
sigma = 0, 1.5   ; two sigma values

[detector]
kind = mapd
M = 8
eta = 0.2
pd = 1e-3

[policy]
rule = joint
compare = gt
runs = 100

[sweep]
thresholds = 1, 3
nc = 1, 4
seed = 99
"""


def test_parse_config():
    cfg, sigmas = parse_config(GOOD_INI)
    assert sigmas == (0.0, 1.5)
    assert (cfg.name, cfg.mu_s, cfg.mu_n) == ("lshn", 1, 10)
    assert cfg.detector == DetectorModel.multiplexed(8, 0.2, 1e-3)
    assert (cfg.policy.rule, cfg.policy.compare, cfg.policy.runs) == ("joint", "gt", 100)
    assert (cfg.thresholds, cfg.nc_values, cfg.seed) == ((1, 3), (1, 4), 99)


@pytest.mark.parametrize(
    "text,line,field",
    [
        ("[scenario]\npreset = hsln\n[sweep]\nnc = 1, two\n", 4, "sweep.nc"),
        ("[scenario]\npreset = hsln\ncolour = red\n", 3, "scenario.colour"),
        ("[scenario]\nmu_s = abc\n", 2, "scenario.mu_s"),
        ("[weather]\nrain = 1\n", 1, None),
    ],
)
def test_config_errors_carry_location(text, line, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    if field:
        assert info.value.field == field
        assert f"line {line}" in str(info.value) and field in str(info.value)


def test_config_ideal_with_detector_params_rejected():
    with pytest.raises(ConfigError):
        parse_config("[detector]\nkind = ideal\nM = 4\n")


# --- command line ----------------------------------------------------------

def test_cli_simulate_preset(tmp_path, capsys):
    out = tmp_path / "lsln.csv"
    assert run(["simulate", "--preset", "lsln", "--runs", "100", "--out", str(out)]) == 0
    assert len(out.read_bytes().split(b"\r\n")) == 34  # 33 lines plus trailing empty


def test_cli_config_and_overrides(tmp_path, capsys):
    ini = tmp_path / "s.ini"
    ini.write_text(GOOD_INI)
    assert run(["simulate", "--config", str(ini), "--nc", "2", "--rule", "plurality", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["rows"]) == 4  # 2 sigmas x 2 thresholds x 1 n_c
    assert {r["sigma"] for r in doc["rows"]} == {0.0, 1.5}
    assert {r["rule"] for r in doc["rows"]} == {"plurality"}
    assert doc["rows"][0]["M"] == 8


def test_cli_oracle_has_no_sampling(capsys):
    assert run(["oracle", "--preset", "hsln", "--detector", "mapd", "--thresholds", "1", "--nc", "1,64"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[1][CSV_COLUMNS.index("P")] == "" and float(rows[2][CSV_COLUMNS.index("exact_P")]) > 0.99


def test_cli_seed_changes_output(capsys):
    args = ["simulate", "--preset", "hsln", "--thresholds", "5", "--nc", "2"]
    run(args + ["--seed", "1"])
    a = capsys.readouterr().out
    run(args + ["--seed", "0x2"])
    b = capsys.readouterr().out
    run(args + ["--seed", "1", "--jobs", "3"])
    c = capsys.readouterr().out
    assert a != b and a == c


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--preset", "hsln", "--M", "4"],
        ["simulate", "--preset", "hsln", "--detector", "mapd", "--eta", "1.5"],
        ["simulate", "--preset", "hsln", "--nc", "0"],
        ["simulate", "--preset", "hsln", "--thresholds", "a"],
        ["simulate", "--preset", "hsln", "--sigma", "-1"],
    ],
)
def test_cli_config_errors_exit_2(argv, capsys):
    assert run(argv) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_bad_config_file_exit_2(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[scenario]\npreset = hsln\nfoo = 1\n")
    assert run(["oracle", "--config", str(ini)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_cli_io_errors_exit_4(tmp_path, capsys):
    assert run(["oracle", "--config", str(tmp_path / "missing.ini")]) == 4
    assert run(["oracle", "--preset", "hsln", "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == 4


def test_cli_numerical_error_exit_3(monkeypatch, capsys):
    from qlidar import NumericalError, scenario

    def boom(*a, **k):
        raise NumericalError("quadrature failed")

    monkeypatch.setattr(scenario, "build_bin_distributions", boom)
    assert run(["oracle", "--preset", "hsln"]) == 3
    assert "numerical error" in capsys.readouterr().err


def test_cli_usage_error_nonzero():
    with pytest.raises(SystemExit) as info:
        run(["simulate"])
    assert info.value.code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qlidar", "oracle", "--preset", "lsln", "--thresholds", "1", "--nc", "16"],
        capture_output=True, text=True, check=True,
    )
    assert math.isclose(float(proc.stdout.splitlines()[1].split(",")[14]), 0.962, abs_tol=0.01)
