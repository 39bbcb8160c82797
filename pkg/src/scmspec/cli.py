"""Command-line interface: ``scmspec {simulate,spectrum,outliers,estimate,table1}``.

Every subcommand reads an optional JSON config; command-line flags override
config keys. Outputs go to ``--out`` together with ``manifest.json``.
Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from scmspec.coefficient_model import CoefficientSchedule, PanelData, VarianceSchedule, simulate_panel
from scmspec.errors import InvalidArgumentError, NumericalFailureError
from scmspec.experiments import ExperimentGrid, package_version, run_grid
from scmspec.outlier_solver import (
    OutlierSet,
    general_scm_outliers,
    outlier_report,
    produces_outliers,
    single_scm_outliers,
    solve_interval_scm,
)
from scmspec.panel_estimator import EstimationConfig, detect
from scmspec.precision_kernel import hetero_precision, precision_matrix
from scmspec.spectral_engine import eigenvalues_symtridiag, support_bounds

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise InvalidArgumentError(f"{path}: top level must be an object")
    return doc


def _merge(cfg: dict, args: argparse.Namespace, keys: dict[str, str]) -> dict:
    out = dict(cfg)
    for attr, key in keys.items():
        val = getattr(args, attr, None)
        if val is not None:
            out[key] = val
    return out


def _write_manifest(out: Path, command: str, seed, params: dict) -> None:
    doc = {"command": command, "version": package_version(), "seed": seed, "parameters": params}
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str))


def _schedule(cfg: dict) -> tuple[CoefficientSchedule, float]:
    if "rho" not in cfg:
        raise InvalidArgumentError("config needs 'rho'")
    return CoefficientSchedule.from_dict(cfg)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo(doc) -> None:
    print(json.dumps(doc, indent=2, default=_json_default))


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return str(x)


def cmd_simulate(args) -> int:
    cfg = _merge(_load_config(args.config), args, {"seed": "seed", "n": "n", "B": "B"})
    sched, sigma2 = _schedule(cfg)
    n = int(cfg.get("n", 1000))
    B = int(cfg.get("B", 1))
    seed = int(cfg.get("seed", 0))
    sched.check_fits(n)
    panel = simulate_panel(sched, n, B, sigma2, seed=seed)
    out = _outdir(args)
    panel.to_csv(out / "panel.csv")
    _write_manifest(out, "simulate", seed, {**sched.to_dict(sigma2), "n": n, "B": B})
    print(f"wrote {out / 'panel.csv'} (B={B}, n={n}, seed={seed})")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = _merge(_load_config(args.config), args, {"seed": "seed", "n": "n"})
    n = int(cfg.get("n", 1000))
    if "variance" in cfg:
        vdoc = cfg["variance"]
        vs = VarianceSchedule(
            float(vdoc.get("sigma2", 1.0)),
            tuple((int(s["k"]), int(s.get("h", 1)), float(s["xi"])) for s in vdoc.get("segments", [])),
        )
        rho = float(cfg["rho"])
        T = hetero_precision(rho, vs, n, convention=cfg.get("convention", "display"))
        scale = 1.0
    else:
        sched, scale = _schedule(cfg)
        rho = sched.rho
        T = precision_matrix(sched, n, scale)
        scale = 1.0 / scale
    spec = eigenvalues_symtridiag(T)
    out = _outdir(args)
    spec.to_csv(out / "spectrum.csv")
    spec.histogram_to_csv(out / "histogram.csv", int(cfg.get("bins", 50)))
    a, b = support_bounds(rho)
    left, right = spec.outside(a * scale, b * scale)
    summary = {
        "n": n,
        "support": [a * scale, b * scale],
        "min": float(spec.eigenvalues[0]),
        "max": float(spec.eigenvalues[-1]),
        "left_outside": left.tolist(),
        "right_outside": right.tolist(),
    }
    _write_manifest(out, "spectrum", cfg.get("seed"), {k: v for k, v in cfg.items() if k != "seed"})
    _echo(summary)
    return EXIT_OK


def cmd_outliers(args) -> int:
    cfg = _merge(_load_config(args.config), args, {"seed": "seed"})
    sched, sigma2 = _schedule(cfg)
    out = _outdir(args)
    active = [s for s in sched.segments if produces_outliers(sched.rho, s.eps)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = general_scm_outliers(sched, sigma2)
    solved = [solve_interval_scm(sched.rho, s.eps, s.h) for s in active]
    if all(s.h == 1 for s in sched.segments):
        method = "closed_form"
        closed = OutlierSet()
        for s in active:
            closed = closed.union(single_scm_outliers(sched.rho, s.eps, sigma2))
        gap = max((abs(x - y) for x, y in zip(closed.values(), result.values())), default=0.0)
        if gap > 1e-8:
            raise NumericalFailureError(f"closed form and root finder disagree by {gap:.3g}")
        result = closed
    else:
        method = "determinantal"
    doc = outlier_report(sched.rho, result, method, [r.brackets for r in solved])
    doc["sigma2"] = sigma2
    doc["warnings"] = [str(w.message) for w in caught]
    (out / "outliers.json").write_text(json.dumps(doc, indent=2))
    _write_manifest(out, "outliers", cfg.get("seed"), sched.to_dict(sigma2))
    if result.is_empty:
        print("no outliers: every change satisfies |rho + eps| <= |rho|")
    _echo(doc)
    return EXIT_OK


def _estimation_config(cfg: dict) -> EstimationConfig:
    d = EstimationConfig()
    return EstimationConfig(
        lam=cfg.get("lambda"),
        lambda_c=float(cfg.get("lambda_c", d.lambda_c)),
        lambda_exponent=float(cfg.get("lambda_exponent", d.lambda_exponent)),
        mode=cfg.get("mode", d.mode).replace("-", "_"),
        count_left=int(cfg.get("count_left", d.count_left)),
        count_right=int(cfg.get("count_right", d.count_right)),
        centering=cfg.get("centering", d.centering),
        symmetrization=cfg.get("symmetrization", d.symmetrization),
    )


def cmd_estimate(args) -> int:
    cfg = _merge(
        _load_config(args.config),
        args,
        {"seed": "seed", "lambda_c": "lambda_c", "mode": "mode", "n": "n", "B": "B", "panel": "panel"},
    )
    seed = int(cfg.get("seed", 0))
    truth = None
    if "panel" in cfg:
        panel = PanelData.from_csv(cfg["panel"])
        if "rho" in cfg:
            sched, sigma2 = _schedule(cfg)
            truth = general_scm_outliers(sched, sigma2)
    else:
        sched, sigma2 = _schedule(cfg)
        n, B = int(cfg.get("n", 100)), int(cfg.get("B", 1000))
        sched.check_fits(n)
        panel = simulate_panel(sched, n, B, sigma2, seed=seed)
        truth = general_scm_outliers(sched, sigma2)
    config = _estimation_config(cfg)
    report = detect(panel, config, truth)
    out = _outdir(args)
    doc = report.to_dict()
    if truth is not None:
        doc["truth"] = truth.to_dict()
    (out / "report.json").write_text(json.dumps(doc, indent=2, default=_json_default))
    _write_manifest(out, "estimate", seed, {k: v for k, v in cfg.items() if k != "seed"})
    _echo(doc)
    return EXIT_OK


def cmd_table1(args) -> int:
    cfg = _merge(
        _load_config(args.config),
        args,
        {"seed": "seed", "reps": "replications", "lambda_c": "lambda_c", "mode": "mode"},
    )
    if args.full:
        cfg["replications"] = 1000
    if "mode" in cfg:
        cfg["mode"] = cfg["mode"].replace("-", "_")
    threads = int(cfg.pop("threads", 1))
    if args.threads is not None:
        threads = args.threads
    grid = ExperimentGrid.from_dict(cfg)
    results = run_grid(grid, args.out, threads=threads, log=lambda m: print(m, flush=True))
    failures = sum(c.failures for c in results)
    print(f"wrote {Path(args.out) / 'table1.csv'} ({len(results)} cells, {failures} failed replications)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its keys")
    common.add_argument("--seed", type=int, help="root RNG seed")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--reps", type=int, help="replications per cell")
    common.add_argument("--threads", type=int, help="worker processes for replications")
    common.add_argument("--lambda-c", dest="lambda_c", type=float, help="constant of the automatic lambda rule")
    common.add_argument("--mode", choices=["known-count", "threshold"], help="outlier extraction mode")

    p = argparse.ArgumentParser(prog="scmspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=package_version())
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate a path or panel to CSV")
    s.add_argument("--n", type=int)
    s.add_argument("--B", type=int)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("spectrum", parents=[common], help="eigenvalues and histogram of a precision matrix")
    s.add_argument("--n", type=int)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("outliers", parents=[common], help="theoretical outliers of a schedule")
    s.set_defaults(func=cmd_outliers)

    s = sub.add_parser("estimate", parents=[common], help="estimate outliers from a panel")
    s.add_argument("--panel", help="panel CSV (j,t,y); simulated from the config when omitted")
    s.add_argument("--n", type=int)
    s.add_argument("--B", type=int)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("table1", parents=[common], help="Monte Carlo study of outlier estimation")
    s.add_argument("--full", action="store_true", help="1000 replications per cell")
    s.set_defaults(func=cmd_table1)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid configuration ({exc})", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
