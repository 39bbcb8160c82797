from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from scmspec.errors import InvalidArgumentError
from scmspec.experiments import (
    BATCH_HEADER,
    SUMMARY_HEADER,
    CellResult,
    ExperimentGrid,
    Replication,
    cell_filename,
    cell_seed,
    run_cell,
    run_grid,
)

TINY = dict(
    rho_list=(0.3,),
    eps_ratio_list=(1.0, 2.0),
    B_list=(60, 200),
    n=16,
    k=8,
    replications=4,
    seed=5,
    centering="column",
    symmetrization="magnitude",
)


def _read(path):
    return path.read_bytes()


def test_grid_validation_and_roundtrip():
    g = ExperimentGrid(**TINY)
    assert ExperimentGrid.from_dict(json.loads(json.dumps(g.to_dict()))) == g
    assert len(g.cells()) == 4
    for bad in (dict(rho_list=()), dict(replications=0), dict(k=40), dict(B_list=(1,)), dict(mode="x")):
        with pytest.raises(InvalidArgumentError):
            ExperimentGrid(**{**TINY, **bad})
    with pytest.raises(InvalidArgumentError):
        ExperimentGrid.from_dict({"nonsense": 1})


def test_default_grid_is_the_study_design():
    g = ExperimentGrid()
    assert g.mode == "known_count" and g.n == 100 and g.k == 50 and g.replications == 200
    assert set(g.B_list) == {100, 1000}


def test_cell_seed_independent_of_other_cells():
    a = cell_seed(1, 0.3, 1.0, 100).generate_state(4)
    b = cell_seed(1, 0.3, 1.0, 100).generate_state(4)
    c = cell_seed(1, 0.3, 1.0, 1000).generate_state(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_cell_statistics():
    reps = [Replication(i, m, 0.0, 0.4, 1.8) for i, m in enumerate([0.1, 0.3, math.nan])]
    cell = CellResult(0.3, 1.0, 100, reps)
    assert cell.failures == 1
    assert cell.mean_mae == pytest.approx(0.2)
    assert cell.sd_mae == pytest.approx(np.std([0.1, 0.3], ddof=1))
    assert cell.summary_row()[-2:] == [3, 1]


def test_run_cell_threads_invariant():
    g = ExperimentGrid(**TINY)
    one = run_cell(g, 0.3, 1.0, 60, threads=1)
    two = run_cell(g, 0.3, 1.0, 60, threads=2)
    assert one.replications == two.replications
    assert all(math.isfinite(r.mae) for r in one.replications)


def test_run_grid_outputs_and_resume(tmp_path):
    g = ExperimentGrid(**TINY)
    fresh = tmp_path / "fresh"
    run_grid(g, fresh)
    with open(fresh / "table1.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == SUMMARY_HEADER and len(rows) == 5
    with open(fresh / cell_filename(0.3, 1.0, 60)) as fh:
        cell_rows = list(csv.reader(fh))
    assert cell_rows[0] == BATCH_HEADER and len(cell_rows) == 1 + g.replications
    manifest = json.loads((fresh / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["parameters"] == g.to_dict() and "version" in manifest

    # interrupted run: only part of the grid, plus a truncated checkpoint
    part = tmp_path / "part"
    run_grid(g, part, cells=g.cells()[:2])
    truncated = part / cell_filename(*g.cells()[1])
    lines = truncated.read_text().splitlines()
    truncated.write_text("\n".join(lines[:2]) + "\n")
    logs = []
    run_grid(g, part, log=logs.append)
    assert any("resumed" in m for m in logs)
    for name in [cell_filename(*c) for c in g.cells()] + ["table1.csv"]:
        assert _read(part / name) == _read(fresh / name)


def test_run_grid_rejects_mismatched_directory(tmp_path):
    run_grid(ExperimentGrid(**TINY), tmp_path, cells=[(0.3, 1.0, 60)])
    with pytest.raises(InvalidArgumentError):
        run_grid(ExperimentGrid(**{**TINY, "seed": 6}), tmp_path)


def test_estimation_failures_counted_not_fatal(tmp_path):
    # row centering with lambda below 1/n makes every column LP infeasible
    g = ExperimentGrid(**{**TINY, "centering": "row", "lam": 0.01, "B_list": (60,), "eps_ratio_list": (1.0,)})
    (cell,) = run_grid(g, tmp_path)
    assert cell.failures == g.replications and math.isnan(cell.mean_mae)
