"""Monte Carlo runner for the outlier-estimation study.

Each cell ``(rho, eps/rho, B)`` simulates single-change panels (break at
``k``), estimates the extreme eigenvalues and scores them against the
closed-form outliers. Cells are checkpointed to CSV so an interrupted run
resumes where it stopped with identical results.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from scmspec.coefficient_model import CoefficientSchedule, ExplosiveSegmentWarning, simulate_panel
from scmspec.errors import EstimationFailureError, InvalidArgumentError
from scmspec.outlier_solver import single_scm_outliers
from scmspec.panel_estimator import EstimationConfig, detect

BATCH_HEADER = ["rho", "eps_ratio", "B", "rep", "mae", "hausdorff", "lambda1_hat", "lambdan_hat"]
SUMMARY_HEADER = ["rho", "eps_ratio", "B", "mean_mae", "sd_mae", "reps", "failures"]


def package_version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:  # not installed as a distribution
        return "unknown"


@dataclass(frozen=True)
class ExperimentGrid:
    """Parameter grid and estimator settings of a study.

    Defaults follow the published study design: known-count extraction,
    covariance centred by each series' own mean and symmetrisation by the
    plain entrywise minimum. The constraint rule is
    ``lambda_c sqrt(log n) B^-lambda_exponent``.
    """

    rho_list: tuple[float, ...] = (0.1, 0.3, 0.5)
    eps_ratio_list: tuple[float, ...] = (0.5, 1.0, 2.0)
    B_list: tuple[int, ...] = (100, 1000)
    n: int = 100
    k: int = 50
    replications: int = 200
    seed: int = 20240611
    lambda_c: float = 4.0
    lambda_exponent: float = 0.8
    lam: float | None = None
    mode: str = "known_count"
    centering: str = "row"
    symmetrization: str = "min"

    def __post_init__(self) -> None:
        for name in ("rho_list", "eps_ratio_list", "B_list"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise InvalidArgumentError(f"{name} must be nonempty")
            object.__setattr__(self, name, vals)
        if self.replications < 1:
            raise InvalidArgumentError("replications must be >= 1")
        if not 1 <= self.k <= self.n:
            raise InvalidArgumentError(f"k must lie in 1..n, got k={self.k}, n={self.n}")
        if any(b < 2 for b in self.B_list):
            raise InvalidArgumentError("every B must be >= 2")
        self.config()  # validates estimator settings

    def config(self) -> EstimationConfig:
        return EstimationConfig(
            lam=self.lam,
            lambda_c=self.lambda_c,
            lambda_exponent=self.lambda_exponent,
            mode=self.mode,
            centering=self.centering,
            symmetrization=self.symmetrization,
        )

    def cells(self) -> list[tuple[float, float, int]]:
        return [(r, q, b) for r in self.rho_list for q in self.eps_ratio_list for b in self.B_list]

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentGrid:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise InvalidArgumentError(f"unknown grid keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        doc = asdict(self)
        for key in ("rho_list", "eps_ratio_list", "B_list"):
            doc[key] = list(doc[key])
        return doc


def cell_seed(seed: int, rho: float, eps_ratio: float, B: int) -> np.random.SeedSequence:
    """Seed sequence of one cell; independent of which other cells are run."""
    return np.random.SeedSequence(
        [int(seed), int(round(rho * 1e6)) % (1 << 32), int(round(eps_ratio * 1e6)) % (1 << 32), int(B)]
    )


@dataclass(frozen=True)
class Replication:
    rep: int
    mae: float
    hausdorff: float
    lambda1_hat: float
    lambdan_hat: float

    @property
    def failed(self) -> bool:
        return math.isnan(self.mae)


def run_replication(
    grid: ExperimentGrid, rho: float, eps_ratio: float, B: int, rep: int, seq: np.random.SeedSequence
) -> Replication:
    """One simulated panel scored against the closed-form outliers."""
    eps = rho * eps_ratio
    with warnings.catch_warnings():
        # a single explosive coefficient is part of the design (e.g. eps = 2 rho)
        warnings.simplefilter("ignore", ExplosiveSegmentWarning)
        schedule = CoefficientSchedule.single(rho, eps, grid.k)
    truth = single_scm_outliers(rho, eps)
    panel = simulate_panel(schedule, grid.n, B, 1.0, seed=seq)
    try:
        rep_ = detect(panel, grid.config(), truth)
    except EstimationFailureError:
        return Replication(rep, math.nan, math.nan, math.nan, math.nan)
    mae = rep_.mae if rep_.mae is not None else math.nan
    return Replication(rep, mae, rep_.hausdorff, *rep_.extremes)


def _run_one(args):
    return run_replication(*args)


@dataclass
class CellResult:
    rho: float
    eps_ratio: float
    B: int
    replications: list[Replication] = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(r.failed for r in self.replications)

    def maes(self) -> np.ndarray:
        return np.array([r.mae for r in self.replications if not r.failed])

    @property
    def mean_mae(self) -> float:
        m = self.maes()
        return float(m.mean()) if m.size else math.nan

    @property
    def sd_mae(self) -> float:
        m = self.maes()
        return float(m.std(ddof=1)) if m.size > 1 else math.nan

    def summary_row(self) -> list:
        return [self.rho, self.eps_ratio, self.B, self.mean_mae, self.sd_mae, len(self.replications), self.failures]


def run_cell(grid: ExperimentGrid, rho: float, eps_ratio: float, B: int, threads: int = 1) -> CellResult:
    """All replications of one cell; results do not depend on ``threads``."""
    seqs = cell_seed(grid.seed, rho, eps_ratio, B).spawn(grid.replications)
    jobs = [(grid, rho, eps_ratio, B, i, s) for i, s in enumerate(seqs)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        reps = [_run_one(j) for j in jobs]
    return CellResult(rho, eps_ratio, B, reps)


def _fmt(x: float) -> str:
    return repr(float(x))


def cell_filename(rho: float, eps_ratio: float, B: int) -> str:
    return f"cell_rho{rho:g}_ratio{eps_ratio:g}_B{B}.csv"


def write_cell(path: Path, cell: CellResult) -> None:
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BATCH_HEADER)
        for r in cell.replications:
            w.writerow([cell.rho, cell.eps_ratio, cell.B, r.rep, _fmt(r.mae), _fmt(r.hausdorff), _fmt(r.lambda1_hat), _fmt(r.lambdan_hat)])
    os.replace(tmp, path)


def read_cell(path: Path, rho: float, eps_ratio: float, B: int) -> CellResult:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    reps = [
        Replication(int(r["rep"]), float(r["mae"]), float(r["hausdorff"]), float(r["lambda1_hat"]), float(r["lambdan_hat"]))
        for r in rows
    ]
    return CellResult(rho, eps_ratio, B, reps)


def run_grid(
    grid: ExperimentGrid,
    out_dir: str | Path,
    threads: int = 1,
    cells: Sequence[tuple[float, float, int]] | None = None,
    log=None,
) -> list[CellResult]:
    """Run (or resume) every cell, writing per-cell CSVs, ``table1.csv`` and ``manifest.json``.

    A cell whose checkpoint holds the full replication count is read back
    instead of recomputed. A checkpoint written under different settings
    is rejected via the manifest.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    params = grid.to_dict()
    if manifest_path.exists():
        old = json.loads(manifest_path.read_text())
        if old.get("parameters") != params:
            raise InvalidArgumentError(f"{out} holds results for different parameters; use a fresh directory")
    manifest = {"command": "table1", "version": package_version(), "seed": grid.seed, "parameters": params}
    manifest_path.write_text(json.dumps(manifest, indent=2))
    results = []
    for rho, ratio, B in cells if cells is not None else grid.cells():
        path = out / cell_filename(rho, ratio, B)
        cell = None
        if path.exists():
            cell = read_cell(path, rho, ratio, B)
            if len(cell.replications) != grid.replications:
                cell = None
        if cell is None:
            cell = run_cell(grid, rho, ratio, B, threads)
            write_cell(path, cell)
            if log:
                log(f"cell rho={rho:g} eps/rho={ratio:g} B={B}: mean MAE {cell.mean_mae:.4f} ({cell.sd_mae:.4f})")
        elif log:
            log(f"cell rho={rho:g} eps/rho={ratio:g} B={B}: resumed from {path.name}")
        results.append(cell)
    with open(out / "table1.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for c in results:
            w.writerow(c.summary_row())
    return results
