from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from scmspec.cli import main
from scmspec.outlier_solver import single_scm_outliers

MOTIVATING = {"rho": 0.3, "segments": [{"k": 50, "h": 1, "eps": 0.2}]}


def _cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def _eigs(out):
    with open(out / "spectrum.csv") as fh:
        return np.array([float(r["eigenvalue"]) for r in csv.DictReader(fh)])


def test_simulate_null_and_determinism(tmp_path):
    cfg = _cfg(tmp_path, {"rho": 0.3, "n": 120})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--seed", "3", "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--seed", "3", "--out", str(b)]) == 0
    text = (a / "panel.csv").read_text().splitlines()
    assert text[0] == "j,t,y" and len(text) == 121
    assert (a / "panel.csv").read_bytes() == (b / "panel.csv").read_bytes()
    man = json.loads((a / "manifest.json").read_text())
    assert man["seed"] == 3 and man["command"] == "simulate" and man["parameters"]["n"] == 120
    main(["simulate", "--config", cfg, "--seed", "4", "--out", str(b)])
    assert (a / "panel.csv").read_bytes() != (b / "panel.csv").read_bytes()


def test_simulate_motivating_example_panel(tmp_path, capsys):
    cfg = _cfg(tmp_path, {**MOTIVATING, "n": 1000, "B": 3})
    assert main(["simulate", "--config", cfg, "--seed", "1", "--out", str(tmp_path)]) == 0
    assert "seed=1" in capsys.readouterr().out
    assert len((tmp_path / "panel.csv").read_text().splitlines()) == 1 + 3000


def test_spectrum_null_and_scm(tmp_path):
    null = tmp_path / "null"
    assert main(["spectrum", "--config", _cfg(tmp_path, {"rho": 0.3}), "--n", "1000", "--out", str(null)]) == 0
    w = _eigs(null)
    assert w.size == 1000 and w.min() >= 0.47 and w.max() <= 1.71
    assert (null / "histogram.csv").read_text().startswith("bin_left,bin_right,count")
    scm = tmp_path / "scm"
    assert main(["spectrum", "--config", _cfg(tmp_path, MOTIVATING), "--n", "1000", "--out", str(scm)]) == 0
    w = _eigs(scm)
    assert np.sum((w < 0.49) | (w > 1.69)) == 2


def test_spectrum_hetero(tmp_path):
    doc = {"rho": 0.3, "variance": {"sigma2": 1.0, "segments": [{"k": 50, "h": 1, "xi": -0.3}]}}
    assert main(["spectrum", "--config", _cfg(tmp_path, doc), "--n", "1000", "--out", str(tmp_path)]) == 0
    w = _eigs(tmp_path)
    assert np.sum(w < 0.49) == 1 and np.sum(w > 1.69) == 0


def test_outliers_closed_form_cross_check(tmp_path):
    assert main(["outliers", "--config", _cfg(tmp_path, MOTIVATING), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "outliers.json").read_text())
    ref = single_scm_outliers(0.3, 0.2)
    assert doc["method"] == "closed_form"
    assert doc["left"] == pytest.approx(list(ref.left)) and doc["right"] == pytest.approx(list(ref.right))


def test_outliers_dichotomy_message(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"rho": 0.3, "segments": [{"k": 50, "h": 1, "eps": -0.2}]})
    assert main(["outliers", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert "no outliers" in capsys.readouterr().out
    doc = json.loads((tmp_path / "outliers.json").read_text())
    assert doc["left"] == [] and doc["right"] == [] and doc["warnings"]


def test_outliers_union_with_multiplicity(tmp_path):
    doc = {"rho": 0.3, "segments": [{"k": 100, "h": 2, "eps": 0.2}, {"k": 900, "h": 2, "eps": 0.2}]}
    assert main(["outliers", "--config", _cfg(tmp_path, doc), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "outliers.json").read_text())
    assert rep["method"] == "determinantal"
    assert len(rep["left"]) == 2 and rep["left"][0] == pytest.approx(rep["left"][1])
    assert len(rep["brackets"]["segments"]) == 2


def test_estimate_from_config_and_panel(tmp_path):
    cfg = _cfg(tmp_path, {**MOTIVATING, "segments": [{"k": 15, "h": 1, "eps": 0.2}], "centering": "column"})
    a = tmp_path / "a"
    argv = ["estimate", "--config", cfg, "--n", "30", "--B", "500", "--seed", "2", "--mode", "known-count"]
    assert main(argv + ["--out", str(a)]) == 0
    rep = json.loads((a / "report.json").read_text())
    assert len(rep["outliers_hat"]["left"]) == 1 and rep["mae"] >= 0 and "truth" in rep
    b = tmp_path / "b"
    assert main(argv + ["--out", str(b)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    # estimate from a saved panel
    sim = tmp_path / "sim"
    main(["simulate", "--config", cfg, "--n", "30", "--B", "500", "--seed", "2", "--out", str(sim)])
    c = tmp_path / "c"
    assert main(["estimate", "--config", cfg, "--panel", str(sim / "panel.csv"), "--mode", "known-count", "--out", str(c)]) == 0
    assert json.loads((c / "report.json").read_text())["mae"] == pytest.approx(rep["mae"])


def test_table1_small_grid_and_resume(tmp_path):
    doc = {
        "rho_list": [0.3],
        "eps_ratio_list": [1.0],
        "B_list": [60],
        "n": 16,
        "k": 8,
        "centering": "column",
        "symmetrization": "magnitude",
    }
    cfg = _cfg(tmp_path, doc)
    out = tmp_path / "t"
    assert main(["table1", "--config", cfg, "--reps", "3", "--seed", "9", "--out", str(out)]) == 0
    first = (out / "table1.csv").read_bytes()
    assert main(["table1", "--config", cfg, "--reps", "3", "--seed", "9", "--out", str(out)]) == 0
    assert (out / "table1.csv").read_bytes() == first
    assert first.decode().splitlines()[0] == "rho,eps_ratio,B,mean_mae,sd_mae,reps,failures"
    # different parameters in the same directory are refused
    assert main(["table1", "--config", cfg, "--reps", "4", "--out", str(out)]) == 2


def test_exit_codes(tmp_path):
    assert main(["outliers", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 4
    assert main(["outliers", "--config", _cfg(tmp_path, {"rho": 1.5}), "--out", str(tmp_path)]) == 2
    assert main(["outliers", "--config", _cfg(tmp_path, {"eps": 0.2}), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    too_long = _cfg(tmp_path, {"rho": 0.3, "segments": [{"k": 50, "h": 1, "eps": 0.2}], "n": 20})
    assert main(["simulate", "--config", too_long, "--out", str(tmp_path)]) == 2
    infeasible = _cfg(tmp_path, {**MOTIVATING, "segments": [{"k": 5, "h": 1, "eps": 0.2}], "lambda": 0.001})
    assert main(["estimate", "--config", infeasible, "--n", "10", "--B", "50", "--out", str(tmp_path)]) == 3


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "scmspec.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for name in ("simulate", "spectrum", "outliers", "estimate", "table1"):
        assert name in r.stdout
