"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--n 2000] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from scmspec.coefficient_model import CoefficientSchedule, simulate_panel
from scmspec.kernels import get_backend
from scmspec.panel_estimator import sample_covariance


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n: int):
    rng = np.random.default_rng(0)
    d = 1.09 + 0.1 * rng.standard_normal(n)
    e = -0.3 + 0.05 * rng.standard_normal(n - 1)
    e2 = e * e
    g = float(np.abs(d).max() + 2 * np.abs(e).max())
    idx = np.arange(n, dtype=np.int64)
    shifts = np.linspace(0.5, 1.6, 32)
    rhs = rng.standard_normal((32, n))
    coef = np.full(n, 0.3)
    innov = rng.standard_normal((200, n))
    panel = simulate_panel(CoefficientSchedule.single(0.3, 0.3, 50), 100, 1000, seed=1)
    s = sample_covariance(panel)
    A = np.block([[s, -s], [-s, s]])
    lam = 0.034
    b = np.concatenate([lam + np.eye(100)[0], lam - np.eye(100)[0]])

    def simplex(K):
        T = np.ascontiguousarray(np.hstack([A, np.eye(200)]))
        dd = np.concatenate([np.ones(200), np.zeros(200)])
        beta = b.copy()
        basis = np.arange(200, 400, dtype=np.int64)
        K.dual_simplex_iterate(T, dd, beta, basis, 1e-10, 1e-10, 50, 10000)

    return {
        f"bisect all eigenvalues (n={n})": lambda K: K.bisect_eigenvalues(d, e2, idx, -g, g, 1e-13 * g, 1e-300),
        f"shifted solve x32 (n={n})": lambda K: K.shifted_solve(d, e, shifts, rhs, 1e-300),
        f"AR recursion 200 x {n}": lambda K: K.ar_recursion(coef, innov),
        "dual simplex, one CLIME column (n=100)": simplex,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    compiled, python = get_backend("compiled"), get_backend("python")
    print(f"{'kernel':45s} {'compiled [s]':>13s} {'numpy [s]':>11s} {'speedup':>8s}")
    for name, fn in cases(args.n).items():
        tc = _best(lambda: fn(compiled), args.repeat)
        tp = _best(lambda: fn(python), args.repeat)
        print(f"{name:45s} {tc:13.4f} {tp:11.4f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
