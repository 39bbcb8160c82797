"""Tridiagonal eigensolver and the limiting spectral law of AR(1) precisions.

Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
iteration; both run on the kernels in :mod:`scmspec.kernels`. The law
``mu_rho`` is the distribution of ``1 + rho^2 - 2 rho cos X`` with ``X``
uniform on ``[0, 2 pi]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from scmspec import kernels
from scmspec.coefficient_model import _check_rho
from scmspec.errors import DomainError, InvalidArgumentError, NumericalFailureError
from scmspec.precision_kernel import SymTridiagonal

DEFAULT_TOL = 1e-14


def _pivmin(e2: np.ndarray) -> float:
    return np.finfo(float).tiny * max(1.0, float(e2.max(initial=0.0)))


def _prepare(T: SymTridiagonal):
    d = np.ascontiguousarray(T.diag, dtype=float)
    e = np.ascontiguousarray(T.offdiag, dtype=float)
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise InvalidArgumentError("matrix entries must be finite")
    return d, e, e * e


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues, optionally with eigenvectors keyed by 0-based index."""

    eigenvalues: np.ndarray
    eigenvectors: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        w = np.array(self.eigenvalues, dtype=float)
        if np.any(np.diff(w) < 0):
            raise InvalidArgumentError("eigenvalues must be ascending")
        w.flags.writeable = False
        object.__setattr__(self, "eigenvalues", w)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def outside(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues strictly below ``a`` and strictly above ``b``."""
        w = self.eigenvalues
        return w[w < a], w[w > b]

    def to_csv(self, path: str | Path) -> None:
        """Write ``index,eigenvalue`` rows with 1-based indices."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue"])
            for i, lam in enumerate(self.eigenvalues, start=1):
                w.writerow([i, repr(float(lam))])

    def histogram(self, bins: int | Sequence[float] = 50) -> tuple[np.ndarray, np.ndarray]:
        counts, edges = np.histogram(self.eigenvalues, bins=bins)
        return counts, edges

    def histogram_to_csv(self, path: str | Path, bins: int | Sequence[float] = 50) -> None:
        """Write ``bin_left,bin_right,count`` rows."""
        counts, edges = self.histogram(bins)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "count"])
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                w.writerow([repr(float(lo)), repr(float(hi)), int(c)])


def eigenvalues_by_index(T: SymTridiagonal, index: Sequence[int], tol: float = DEFAULT_TOL) -> np.ndarray:
    """Eigenvalues with the given 0-based ascending ranks.

    Each value is within ``tol * max(|lo|, |hi|)`` of the truth, where
    ``[lo, hi]`` is the Gershgorin interval.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    d, e, e2 = _prepare(T)
    idx = np.ascontiguousarray(np.asarray(index, dtype=np.int64).ravel())
    if idx.size and (idx.min() < 0 or idx.max() >= T.n):
        raise InvalidArgumentError(f"eigenvalue index out of range for n={T.n}")
    lo, hi = T.gershgorin()
    scale = max(abs(lo), abs(hi), np.finfo(float).tiny)
    atol = max(tol * scale, 4 * np.finfo(float).eps * scale)
    # widen slightly so the endpoints are strict bounds
    lo -= atol
    hi += atol
    if T.n == 1:
        return np.full(idx.size, float(d[0]))
    return np.asarray(kernels.bisect_eigenvalues(d, e2, idx, lo, hi, atol, _pivmin(e2)))


def eigenvalues_symtridiag(T: SymTridiagonal, tol: float = DEFAULT_TOL) -> Spectrum:
    """All eigenvalues of ``T`` in ascending order."""
    w = eigenvalues_by_index(T, np.arange(T.n), tol)
    return Spectrum(np.maximum.accumulate(w))


def sturm_count(T: SymTridiagonal, x: float) -> int:
    """Number of eigenvalues of ``T`` strictly below ``x``."""
    d, e, e2 = _prepare(T)
    return int(kernels.sturm_count(d, e2, float(x), _pivmin(e2)))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(v)))
    return -v if v[j] < 0 else v


def eigenvectors_symtridiag(
    T: SymTridiagonal,
    lambdas: Sequence[float],
    seed: int = 0,
    max_iter: int = 25,
    rtol: float = 1e-12,
) -> np.ndarray:
    """Unit eigenvectors for the given eigenvalues, one per row.

    Inverse iteration from a seeded random start. A vector is accepted once
    ``||T v - lambda v||_inf <= rtol * ||T||_inf``; the sign makes the
    largest-magnitude entry positive.

    Raises
    ------
    NumericalFailureError
        If some vector misses the residual target ``1e-8 * ||T||`` after
        ``max_iter`` iterations.
    """
    d, e, _ = _prepare(T)
    lam = np.ascontiguousarray(np.asarray(lambdas, dtype=float).ravel())
    n, m = T.n, lam.size
    if m == 0:
        return np.empty((0, n))
    if n == 1:
        return np.ones((m, 1))
    tnorm = T.norm_inf() or 1.0
    pivmin = np.finfo(float).eps * tnorm
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(m, n)) + 1.0 / math.sqrt(n)
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    out = x.copy()
    todo = np.arange(m)
    resid = np.full(m, np.inf)
    for it in range(max_iter):
        y = np.asarray(kernels.shifted_solve(d, e, lam[todo], np.ascontiguousarray(x[todo]), pivmin))
        nrm = np.linalg.norm(y, axis=1, keepdims=True)
        if not np.all(np.isfinite(nrm)) or np.any(nrm == 0):
            raise NumericalFailureError("inverse iteration produced a non-finite vector")
        y /= nrm
        r = np.array([np.abs(T.matvec(v) - l * v).max() for v, l in zip(y, lam[todo])])
        out[todo] = y
        resid[todo] = r
        x[todo] = y
        done = r <= rtol * tnorm
        if it >= 1:
            todo = todo[~done]
        if todo.size == 0:
            break
    if np.any(resid > 1e-8 * tnorm):
        raise NumericalFailureError(
            f"inverse iteration did not converge (worst residual {resid.max():.3g})"
        )
    return np.array([_fix_sign(v) for v in out])


def eigenvector_symtridiag(T: SymTridiagonal, lam: float, seed: int = 0) -> np.ndarray:
    """Unit eigenvector of ``T`` for the eigenvalue ``lam``."""
    return eigenvectors_symtridiag(T, [lam], seed=seed)[0]


def perturbed_eigenpair_closed_form(rho: float, n: int, k: int) -> tuple[float, np.ndarray]:
    """``k``-th smallest eigenpair (1-based) of the Toeplitz matrix with ``1 + rho^2`` diagonal.

    The pair is ``1 - 2 |rho| cos(j pi/(n+1)) + rho^2`` with eigenvector entries
    ``sqrt(2/(n+1)) sin(i j pi/(n+1))``, where ``j = k`` for positive ``rho``.
    Negative ``rho`` gives the same eigenvalues in reverse order, so ``j =
    n + 1 - k`` and the vector picks up the alternating sign ``(-1)^i``.
    """
    rho = _check_rho(rho)
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"k must lie in 1..{n}, got {k}")
    j = k if rho > 0 else n + 1 - k
    theta = j * math.pi / (n + 1)
    lam = 1.0 - 2.0 * rho * math.cos(theta) + rho * rho
    i = np.arange(1, n + 1)
    u = math.sqrt(2.0 / (n + 1)) * np.sin(i * theta)
    return lam, u


def support_bounds(rho: float) -> tuple[float, float]:
    """Support ``[(1 - |rho|)^2, (1 + |rho|)^2]`` of ``mu_rho``."""
    rho = _check_rho(rho)
    return (1.0 - abs(rho)) ** 2, (1.0 + abs(rho)) ** 2


@dataclass(frozen=True)
class SpectralLaw:
    """Limiting spectral distribution ``mu_rho`` of the null precision matrix."""

    rho: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", _check_rho(self.rho))

    @property
    def a(self) -> float:
        return (1.0 - abs(self.rho)) ** 2

    @property
    def b(self) -> float:
        return (1.0 + abs(self.rho)) ** 2

    def cdf(self, t: float) -> float:
        return asd_cdf(self, t)

    def stieltjes(self, z: float) -> float:
        return stieltjes(self, z)

    def moment(self, k: int) -> float:
        return asd_moment(self, k)


def _symbol(rho: float, x):
    return 1.0 + rho * rho - 2.0 * rho * np.cos(x)


def asd_cdf(law: SpectralLaw, t: float, method: str = "closed") -> float:
    """Distribution function of ``mu_rho`` at ``t``.

    ``method="closed"`` inverts the symbol with ``arccos``; ``"quadrature"``
    locates the level crossing numerically and integrates the indicator.
    """
    rho, t = law.rho, float(t)
    if t < law.a:
        return 0.0
    if t >= law.b:
        return 1.0
    if method == "closed":
        c = (1.0 + rho * rho - t) / (2.0 * rho)
        frac = math.acos(min(1.0, max(-1.0, c))) / math.pi
        val = frac if rho > 0 else 1.0 - frac
    elif method == "quadrature":
        # the symbol is monotone on [0, pi] and symmetric about pi
        g = lambda x: _symbol(rho, x) - t
        x0 = optimize.brentq(g, 0.0, math.pi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        ind = lambda x: 1.0 if _symbol(rho, x) <= t else 0.0
        left, _ = integrate.quad(ind, 0.0, x0, epsabs=1e-12)
        right, _ = integrate.quad(ind, x0, math.pi, epsabs=1e-12)
        val = (left + right) / math.pi
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    return min(1.0, max(0.0, val))


@dataclass(frozen=True)
class MixtureLaw:
    """Convex combination of spectral laws."""

    components: tuple[tuple[float, SpectralLaw], ...]

    def __post_init__(self) -> None:
        comps = tuple((float(w), law if isinstance(law, SpectralLaw) else SpectralLaw(law)) for w, law in self.components)
        if not comps:
            raise InvalidArgumentError("mixture needs at least one component")
        ws = np.array([w for w, _ in comps])
        if np.any(ws < 0) or np.any(ws > 1) or abs(ws.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError(f"weights must lie in [0, 1] and sum to 1, got {ws.tolist()}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_schedule(cls, schedule, n: int) -> MixtureLaw:
        """Mixture implied by a schedule at length ``n``: weight ``h_j / n`` on ``rho + eps_j``.

        Segments whose shifted coefficient leaves ``0 < |rho + eps| < 1`` are
        rejected, since ``mu`` is only defined there.
        """
        comps = []
        for s in schedule.segments:
            comps.append((s.h / n, SpectralLaw(schedule.rho + s.eps)))
        rest = 1.0 - sum(w for w, _ in comps)
        return cls(((rest, SpectralLaw(schedule.rho)),) + tuple(comps))


def mixture_cdf(mix: MixtureLaw, t: float) -> float:
    """Distribution function of a mixture law."""
    return float(min(1.0, sum(w * asd_cdf(law, t) for w, law in mix.components)))


def stieltjes(law: SpectralLaw, z: float) -> float:
    """Stieltjes transform ``int (z - x)^-1 dmu_rho(x)`` for real ``z`` outside the support."""
    z = float(z)
    a, b = law.a, law.b
    if a <= z <= b:
        raise DomainError(f"z={z} lies inside the support [{a}, {b}]")
    root = 1.0 / math.sqrt((z - a) * (z - b))
    return root if z > b else -root


def asd_moment(law: SpectralLaw, k: int, method: str = "closed") -> float:
    """``k``-th moment of ``mu_rho``.

    The closed form expands ``(1 + rho^2 - 2 rho cos x)^k`` binomially;
    odd cosine powers average to zero and even ones to ``C(j, j/2) / 2^j``.
    """
    if int(k) != k or k < 0:
        raise InvalidArgumentError(f"k must be a nonnegative integer, got {k}")
    k = int(k)
    rho = law.rho
    if method == "quadrature":
        val, _ = integrate.quad(lambda x: _symbol(rho, x) ** k, 0.0, 2.0 * math.pi, epsabs=1e-13, limit=200)
        return val / (2.0 * math.pi)
    if method != "closed":
        raise InvalidArgumentError(f"unknown method {method!r}")
    c0 = 1.0 + rho * rho
    total = 0.0
    for j in range(0, k + 1, 2):
        total += math.comb(k, j) * c0 ** (k - j) * (2.0 * rho) ** j * math.comb(j, j // 2) / 2.0**j
    return total


def sine_kernel_G(a: float, k1: int, k2: int) -> float:
    """Closed form of ``(1/pi) int_0^{2 pi} sin(k1 x) sin(k2 x) / (a + cos x) dx`` for ``|a| > 1``."""
    a = float(a)
    if not abs(a) > 1:
        raise DomainError(f"|a| must exceed 1, got {a}")
    if k1 < 1 or k2 < 1:
        raise InvalidArgumentError("k1 and k2 must be positive integers")
    r = math.sqrt(a * a - 1.0)
    z1, z2 = -a - r, -a + r
    d, s = abs(k1 - k2), k1 + k2
    if a > 1:
        return 2.0 / (z2 - z1) * (z2**d - z2**s)
    return 2.0 / (z1 - z2) * (z1**d - z1**s)


def sine_kernel_G_quadrature(a: float, k1: int, k2: int) -> float:
    """Adaptive-quadrature value of the same integral."""
    val, _ = integrate.quad(
        lambda x: math.sin(k1 * x) * math.sin(k2 * x) / (a + math.cos(x)),
        0.0,
        2.0 * math.pi,
        epsabs=1e-13,
        epsrel=1e-13,
        limit=400,
    )
    return val / math.pi


def chebyshev_U(nn: int, x: float) -> float:
    """Chebyshev polynomial of the second kind by three-term recurrence."""
    if int(nn) != nn or nn < 0:
        raise InvalidArgumentError(f"degree must be a nonnegative integer, got {nn}")
    u_prev, u = 1.0, 2.0 * x
    if nn == 0:
        return u_prev
    for _ in range(int(nn) - 1):
        u_prev, u = u, 2.0 * x * u - u_prev
    return u


def det_bordered_tridiag(x: float, f_val: float, g_val: float, nn: int) -> float:
    """Determinant of the ``nn``-by-``nn`` tridiagonal matrix with unit
    off-diagonal, ``2x`` inside the diagonal, ``2x + f`` first and ``2x + g`` last."""
    if nn < 2:
        raise InvalidArgumentError(f"nn must be >= 2, got {nn}")
    return (2.0 * x + f_val + g_val) * chebyshev_U(nn - 1, x) + (f_val * g_val - 1.0) * chebyshev_U(nn - 2, x)


def bordered_tridiag_dense(x: float, f_val: float, g_val: float, nn: int) -> np.ndarray:
    """Dense form of the matrix in :func:`det_bordered_tridiag`."""
    m = 2.0 * x * np.eye(nn) + np.eye(nn, k=1) + np.eye(nn, k=-1)
    m[0, 0] += f_val
    m[-1, -1] += g_val
    return m


def kolmogorov_distance(sample: np.ndarray, cdf) -> float:
    """Sup distance between the empirical CDF of ``sample`` and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    F = np.array([cdf(v) for v in x])
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))
