import csv
import json
import subprocess
import sys

import pytest

from cdoa_loc.cli import main

QUICK = ["--set", "trajectory.kinds=[\"diagonal\"]", "--set", "trajectory.step=0.5", "--noise-dbm", "2",
         "--trials", "1"]


def _estimates(path):
    with open(path, newline="") as fh:
        return [(r["method"], r["est_x"], r["est_y"]) for r in csv.DictReader(fh)]


def test_coverage_prints_formula_values(capsys):
    assert main(["coverage", "--range", "10"]) == 0
    assert capsys.readouterr().out.strip() == "square coverage: 50.0 m², min nodes for 1 unit: 4"


def test_simulate_writes_outputs_and_echoes_config(tmp_path, capsys):
    out = tmp_path / "run1"
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"workspace": {"x_max": 6.0, "y_max": 6.0}, "trials": 5}))
    code = main(["simulate", "--config", str(cfg), "--method", "cdoa-pf", "--seed", "7", "--out", str(out)] + QUICK)
    assert code == 0
    for name in ("results.csv", "summary.md", "summary.csv", "config.json"):
        assert (out / name).exists()
    text = capsys.readouterr().out
    assert "precedence: flags > config file > defaults" in text
    echoed = json.loads((out / "config.json").read_text())
    assert echoed["seed"] == 7 and echoed["trials"] == 1 and echoed["method"] == "cdoa-pf"
    assert '"seed": 7' in text


def test_echoed_config_reproduces_estimates(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--method", "all", "--seed", "3", "--out", str(a)] + QUICK) == 0
    assert main(["simulate", "--config", str(a / "config.json"), "--out", str(b)]) == 0
    assert _estimates(a / "results.csv") == _estimates(b / "results.csv")
    methods = {m for m, _, _ in _estimates(a / "results.csv")}
    assert len(methods) == 7


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("CDOA_LOC_SEED", "11")
    assert main(["simulate", "--method", "wcl", "--out", str(tmp_path / "e")] + QUICK) == 0
    assert json.loads((tmp_path / "e" / "config.json").read_text())["seed"] == 11
    assert main(["simulate", "--method", "wcl", "--seed", "4", "--out", str(tmp_path / "f")] + QUICK) == 0
    assert json.loads((tmp_path / "f" / "config.json").read_text())["seed"] == 4
    monkeypatch.setenv("CDOA_LOC_SEED", "abc")
    assert main(["simulate", "--method", "wcl", "--out", str(tmp_path / "g")] + QUICK) == 1


def test_missing_config_is_runtime_error(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    assert "file not found" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["simulate", "--bogus"], [], ["coverage"],
                                  ["ablate", "--counts", "a,b"]])
def test_usage_errors_exit_one(argv, tmp_path):
    if argv[:1] == ["ablate"]:
        argv = argv + ["--out", str(tmp_path)]
    assert main(argv) == 1


@pytest.mark.parametrize("argv", [["simulate", "--set", "hyperparams.nope=1"],
                                  ["simulate", "--method", "sbl-doa"],
                                  ["coverage", "--range", "-1"]])
def test_bad_values_are_runtime_errors(argv, tmp_path):
    if argv[0] == "simulate":
        argv = argv + ["--out", str(tmp_path)]
    assert main(argv) == 2


def test_dataset_export_then_evaluate(tmp_path, capsys):
    csv_path = tmp_path / "walk.csv"
    assert main(["dataset", "--export", str(csv_path), "--out", str(tmp_path / "x")] + QUICK) == 0
    assert main(["dataset", "--data", str(csv_path), "--method", "d-rssi", "--out", str(tmp_path / "y")]) == 0
    assert "0 diagnosed" in capsys.readouterr().out
    assert (tmp_path / "y" / "summary.md").exists()
    assert main(["dataset", "--out", str(tmp_path / "z")]) == 1


def test_report_rebuilds_tables(tmp_path):
    assert main(["simulate", "--method", "wcl", "--out", str(tmp_path / "r")] + QUICK) == 0
    (tmp_path / "r" / "summary.md").unlink()
    assert main(["report", "--results", str(tmp_path / "r" / "results.csv")]) == 0
    assert (tmp_path / "r" / "summary.md").exists()


def test_ablate_writes_curves(tmp_path):
    assert main(["ablate", "--counts", "20,40", "--out", str(tmp_path / "a")] + QUICK) == 0
    rows = list(csv.DictReader(open(tmp_path / "a" / "ablation.csv")))
    assert len(rows) == 4 and {r["odometry"] for r in rows} == {"0", "1"}


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "cdoa_loc.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "simulate" in proc.stdout
