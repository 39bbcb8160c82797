"""Exact tridiagonal precision matrices of AR(1) models."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from scmspec.coefficient_model import CoefficientSchedule, VarianceSchedule, _check_rho
from scmspec.errors import InvalidArgumentError, NumericalFailureError


@dataclass(frozen=True, eq=False)
class SymTridiagonal:
    """Symmetric tridiagonal matrix stored as its diagonal and off-diagonal.

    ``diag[i]`` is the (i+1, i+1) entry in 1-based matrix notation and
    ``offdiag[i]`` the (i+1, i+2) entry. Arrays are read-only.
    """

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self) -> None:
        d = np.array(self.diag, dtype=float).ravel()
        e = np.array(self.offdiag, dtype=float).ravel()
        if d.size < 1:
            raise InvalidArgumentError("matrix dimension must be >= 1")
        if e.size != d.size - 1:
            raise InvalidArgumentError(f"offdiag must have length {d.size - 1}, got {e.size}")
        d.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def norm_inf(self) -> float:
        """Maximum absolute row sum."""
        r = np.abs(self.diag).copy()
        r[:-1] += np.abs(self.offdiag)
        r[1:] += np.abs(self.offdiag)
        return float(r.max())

    def gershgorin(self) -> tuple[float, float]:
        """Interval containing every eigenvalue."""
        rad = np.zeros(self.n)
        rad[:-1] += np.abs(self.offdiag)
        rad[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - rad)), float(np.max(self.diag + rad))

    def to_csv(self, path: str | Path) -> None:
        """Write the nonzero band as 1-based ``i,j,value`` triplets."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "value"])
            for i in range(self.n):
                if i > 0:
                    w.writerow([i + 1, i, repr(float(self.offdiag[i - 1]))])
                w.writerow([i + 1, i + 1, repr(float(self.diag[i]))])
                if i < self.n - 1:
                    w.writerow([i + 1, i + 2, repr(float(self.offdiag[i]))])


def precision_matrix(schedule: CoefficientSchedule, n: int, sigma2: float = 1.0) -> SymTridiagonal:
    """Inverse covariance of ``(y_1, ..., y_n)`` under ``schedule``.

    Entries are ``(1 + rho_{i+1}^2) / sigma2`` on the diagonal (the last one
    is ``1 / sigma2``) and ``-rho_{i+1} / sigma2`` off it.
    """
    if n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    if not sigma2 > 0:
        raise InvalidArgumentError(f"sigma2 must be positive, got {sigma2}")
    schedule.check_fits(n)
    r = schedule.coefficients(n)
    diag = np.empty(n)
    diag[:-1] = 1.0 + r[1:] ** 2
    diag[-1] = 1.0
    return SymTridiagonal(diag / sigma2, -r[1:] / sigma2)


def perturbed_null_precision(rho: float, n: int) -> SymTridiagonal:
    """Toeplitz tridiagonal with ``1 + rho^2`` on the whole diagonal."""
    rho = _check_rho(rho)
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    return SymTridiagonal(np.full(n, 1.0 + rho * rho), np.full(n - 1, -rho))


def hetero_precision(rho: float, vs: VarianceSchedule, n: int, convention: str = "display") -> SymTridiagonal:
    """Precision-type matrix of ``y_t = rho y_{t-1} + sigma_t z_t``.

    Parameters
    ----------
    convention : {"display", "exact"}
        ``"display"`` uses variances as multipliers: ``sigma_i^2 +
        sigma_{i+1}^2 rho^2`` on the diagonal (``sigma_n^2`` last) and
        ``-sigma_{i+1}^2 rho`` off it. This is not the inverse covariance
        once the variances vary, but it reproduces the published outlier
        pattern. ``"exact"`` returns the true inverse covariance,
        ``L^T diag(1/sigma^2) L``.
    """
    rho = float(rho)
    if not abs(rho) < 1:
        raise InvalidArgumentError(f"|rho| must be < 1, got {rho}")
    if n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    s2 = vs.variances(n)
    if np.any(s2 <= 0):
        raise InvalidArgumentError("all variances must be positive")
    if convention == "display":
        w = s2
    elif convention == "exact":
        w = 1.0 / s2
    else:
        raise InvalidArgumentError(f"unknown convention {convention!r}")
    diag = np.empty(n)
    diag[:-1] = w[:-1] + rho * rho * w[1:]
    diag[-1] = w[-1]
    return SymTridiagonal(diag, -rho * w[1:])


def covariance_from_precision(T: SymTridiagonal) -> np.ndarray:
    """Dense inverse of a positive definite tridiagonal matrix.

    Uses the ``L D L^T`` factorisation; a non-positive pivot means the
    input is not positive definite.
    """
    n = T.n
    d = np.empty(n)
    l = np.empty(max(n - 1, 0))
    d[0] = T.diag[0]
    for i in range(1, n):
        if not d[i - 1] > 0:
            raise NumericalFailureError("matrix is not positive definite")
        l[i - 1] = T.offdiag[i - 1] / d[i - 1]
        d[i] = T.diag[i] - l[i - 1] * T.offdiag[i - 1]
    if not d[-1] > 0:
        raise NumericalFailureError("matrix is not positive definite")
    # inv(L)^T D^-1 inv(L); inv(L) is dense lower triangular, built column by column
    linv = np.eye(n)
    for i in range(1, n):
        linv[i, :i] = -l[i - 1] * linv[i - 1, :i]
    cov = (linv.T / d) @ linv
    cov = 0.5 * (cov + cov.T)
    # one step of iterative refinement
    resid = np.eye(n) - T.to_dense() @ cov
    cov += cov @ resid
    return 0.5 * (cov + cov.T)
