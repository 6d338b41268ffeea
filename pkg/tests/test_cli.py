import json
import re
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from virodyn.params import table1
from virodyn.scenarios import (
    ConfigError,
    format_number,
    load_config,
    run_scenario,
)

REPO = Path(__file__).resolve().parents[1]
PAPER_CONFIG = REPO / "configs" / "paper.yml"


def cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "virodyn", *args],
                          capture_output=True, text=True, cwd=cwd or REPO)


def write_config(tmp_path, body) -> Path:
    path = tmp_path / "cfg.yml"
    path.write_text(yaml.safe_dump(body))
    return path


# --- config parsing -------------------------------------------------------------

def test_shipped_catalogue_covers_all_figures():
    names = " ".join(s.name for s in load_config(PAPER_CONFIG))
    for fig in [f"fig{k}" for k in range(2, 12)] + ["figA"]:
        assert fig in names


def test_duplicate_names_rejected(tmp_path):
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": "a", "kind": "calibration_report"},
        {"name": "a", "kind": "calibration_report"},
    ]})
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(cfg)


def test_unknown_kind_rejected(tmp_path):
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": "a", "kind": "mystery"},
    ]})
    with pytest.raises(ConfigError, match="unknown kind"):
        load_config(cfg)


def test_unknown_parameter_key_rejected(tmp_path):
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": "a", "kind": "ode_run", "params": {"betta": 1.0}},
    ]})
    with pytest.raises(ConfigError, match="unknown parameter"):
        load_config(cfg)


def test_parse_failure_reports_location(tmp_path):
    path = tmp_path / "broken.yml"
    path.write_text("scenarios:\n  - name: a\n   kind: b\n")
    with pytest.raises(ConfigError, match=r"line \d+"):
        load_config(path)


def test_missing_file_is_config_error(tmp_path):
    missing = tmp_path / "nope.yml"
    with pytest.raises(ConfigError, match="nope.yml"):
        load_config(missing)


# --- number formatting ------------------------------------------------------------

def test_format_number_nine_significant_digits():
    assert format_number(0.57161) == "5.71610000e-01"
    assert format_number(1.0 / 3.0) == "3.33333333e-01"
    assert format_number(float("nan")) == "nan"
    assert format_number(3) == "3"
    assert format_number(True) == "1"


# --- scenario execution --------------------------------------------------------------

def test_calibration_report_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": "calib", "kind": "calibration_report"},
    ]})
    scenario = load_config(cfg)[0]
    run_scenario(scenario, tmp_path / "a")
    run_scenario(scenario, tmp_path / "b")
    first = (tmp_path / "a" / "calib" / "calibration_report.txt").read_bytes()
    second = (tmp_path / "b" / "calib" / "calibration_report.txt").read_bytes()
    assert first == second
    m1 = json.loads((tmp_path / "a" / "calib" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "b" / "calib" / "manifest.json").read_text())
    assert m1 == m2


def test_ode_scenario_outputs_and_manifest(tmp_path):
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": "short", "kind": "ode_run", "params": {"beta": 0.002},
         "t_end": 2.0, "stride": 0.5},
    ]})
    scenario = load_config(cfg)[0]
    out = run_scenario(scenario, tmp_path / "out")
    csv_path = out / "trajectory.csv"
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t_days,u,v,i"
    # every numeric cell in scientific notation with 9 significant digits
    cell = r"-?\d\.\d{8}e[+-]\d{2,3}|nan"
    for line in lines[1:]:
        assert re.fullmatch(rf"({cell})(,({cell}))*", line)

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"] == "short"
    # parameters round-trip: manifest params reconstruct the resolved set
    assert table1(**{k: v for k, v in manifest["params"].items()}) \
        == scenario.resolve_params()
    for name, digest in manifest["outputs"].items():
        assert (out / name).exists()
        assert len(digest) == 64


def test_rerun_of_numeric_scenario_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": "orbit", "kind": "ode_run", "params": {"beta": 0.002},
         "t_end": 3.0, "stride": 0.5},
    ]})
    scenario = load_config(cfg)[0]
    a = run_scenario(scenario, tmp_path / "a") / "trajectory.csv"
    b = run_scenario(scenario, tmp_path / "b") / "trajectory.csv"
    assert a.read_bytes() == b.read_bytes()


def test_branch_scenario_csv(tmp_path):
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": "tb", "kind": "branch", "parameter": "beta",
         "range": [0.0005, 0.002], "start": "trivial"},
    ]})
    out = run_scenario(load_config(cfg)[0], tmp_path / "out")
    header = (out / "branch.csv").read_text().splitlines()[0]
    assert header == "param,u,v,i,re_l1,im_l1,re_l2,im_l2,re_l3,im_l3,stable"
    events = (out / "events.csv").read_text().splitlines()
    assert events[0] == "kind,param,u,v,i"
    assert any(line.startswith("branch_point") for line in events[1:])


# --- CLI surface ------------------------------------------------------------------------

def test_cli_list_shipped_config():
    proc = cli("list", str(PAPER_CONFIG))
    assert proc.returncode == 0
    assert "fig5_beta_branch" in proc.stdout
    assert "calibration_report" in proc.stdout


def test_cli_list_missing_file_names_path():
    proc = cli("list", "does/not/exist.yml")
    assert proc.returncode == 2
    assert "exist.yml" in proc.stderr


def test_cli_run_unknown_scenario_is_config_error(tmp_path):
    proc = cli("run", str(PAPER_CONFIG), "not_a_scenario",
               "--out", str(tmp_path))
    assert proc.returncode == 2
    assert "unknown scenario" in proc.stderr


def test_cli_requires_scenario_or_all(tmp_path):
    proc = cli("run", str(PAPER_CONFIG), "--out", str(tmp_path))
    assert proc.returncode == 2


def test_cli_runs_scenario_end_to_end(tmp_path):
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": "quick", "kind": "ode_run", "params": {"beta": 0.002},
         "t_end": 1.0, "stride": 0.25},
    ]})
    proc = cli("run", str(cfg), "quick", "--out", str(tmp_path / "o"),
               "--seedless")
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "quick" / "trajectory.csv").exists()
    assert (tmp_path / "o" / "quick" / "trajectory.svg").exists()


def test_cli_threads_run_independent_scenarios(tmp_path):
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": f"s{k}", "kind": "ode_run", "params": {"beta": 0.002},
         "t_end": 1.0, "stride": 0.5} for k in range(3)
    ]})
    proc = cli("run", str(cfg), "--all", "--threads", "3",
               "--out", str(tmp_path / "o"))
    assert proc.returncode == 0, proc.stderr
    for k in range(3):
        assert (tmp_path / "o" / f"s{k}" / "trajectory.csv").exists()


def test_cli_numeric_failure_exit_code(tmp_path):
    # A divergent initial state blows up: exit code 3.
    cfg = write_config(tmp_path, {"scenarios": [
        {"name": "boom", "kind": "ode_run", "params": {"beta": 0.002},
         "t_end": 50.0, "initial": [-5.0, 0.0, 0.0]},
    ]})
    proc = cli("run", str(cfg), "boom", "--out", str(tmp_path / "o"))
    assert proc.returncode == 3
    assert "boom" in proc.stderr
