"""Outlier eigenvalues of precision matrices with structural changes.

An outlier is a limit point of the spectrum outside the support
``[a_rho, b_rho]`` of the limiting law. Single-time changes have closed
forms; changes lasting ``h`` steps are roots of an ``(h+1)``-dimensional
tridiagonal determinant, located inside explicit bracketing intervals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from scmspec.coefficient_model import CoefficientSchedule, _check_rho
from scmspec.errors import (
    DegenerateConfigurationError,
    DomainError,
    InconsistentInputError,
    InvalidArgumentError,
    NumericalFailureError,
    SingularParameterError,
)
from scmspec.precision_kernel import SymTridiagonal
from scmspec.spectral_engine import eigenvalues_by_index, eigenvectors_symtridiag, support_bounds


class NoOutlierSegmentWarning(UserWarning):
    """A segment's change is too small to produce outliers and was skipped."""


class SegmentProximityWarning(UserWarning):
    """Segments are close enough that the union of outliers is only approximate."""


@dataclass(frozen=True)
class OutlierSet:
    """Ascending multisets of left and right outliers."""

    left: tuple[float, ...] = ()
    right: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        left = tuple(sorted(float(v) for v in self.left))
        right = tuple(sorted(float(v) for v in self.right))
        if not all(math.isfinite(v) for v in left + right):
            raise InvalidArgumentError("outliers must be finite")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def is_empty(self) -> bool:
        return not self.left and not self.right

    def values(self) -> tuple[float, ...]:
        return self.left + self.right

    def __len__(self) -> int:
        return len(self.left) + len(self.right)

    def union(self, other: OutlierSet) -> OutlierSet:
        """Multiset union; repeated values keep their multiplicity."""
        return OutlierSet(self.left + other.left, self.right + other.right)

    def scaled(self, factor: float) -> OutlierSet:
        return OutlierSet(tuple(factor * v for v in self.left), tuple(factor * v for v in self.right))

    def check_against(self, rho: float, sigma2: float = 1.0) -> None:
        """Raise unless left values lie in ``(0, a)`` and right values above ``b`` (scaled by ``sigma2``)."""
        a, b = support_bounds(rho)
        a, b = a * sigma2, b * sigma2
        if any(not 0 < v < a for v in self.left) or any(not v > b for v in self.right):
            raise InconsistentInputError(f"outliers fall outside ({0}, {a}) and ({b}, inf)")

    def to_dict(self) -> dict:
        return {"left": list(self.left), "right": list(self.right)}


@dataclass(frozen=True)
class BracketReport:
    """Guaranteed outlier counts and the intervals that each hold at least one outlier."""

    p: int
    q: int
    left_intervals: tuple[tuple[float, float], ...]
    right_intervals: tuple[tuple[float, float], ...]
    upper_bound: float
    merged: int = 0

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "left_intervals": [list(iv) for iv in self.left_intervals],
            "right_intervals": [list(iv) for iv in self.right_intervals],
            "upper_bound": self.upper_bound,
            "merged": self.merged,
        }


def f_transform(rho: float, x: float) -> float:
    """``1 + rho^2 - rho (x + 1/x)`` for ``0 < |x| < 1``."""
    rho = _check_rho(rho)
    x = float(x)
    if not 0 < abs(x) < 1:
        raise DomainError(f"x must satisfy 0 < |x| < 1, got {x}")
    return 1.0 + rho * rho - rho * (x + 1.0 / x)


def _finv(rho: float, z):
    # interior root of x^2 - p x + 1 = 0; computed as the reciprocal of the
    # large root to avoid cancellation. Support endpoints map to |x| = 1.
    p = (1.0 + rho * rho - z) / rho
    disc = np.sqrt(np.maximum(p * p - 4.0, 0.0))
    return 2.0 / (p + np.copysign(disc, p))


def f_inverse(rho: float, z: float) -> float:
    """Root with ``|x| < 1`` of ``rho x^2 - (1 + rho^2 - z) x + rho = 0``."""
    rho = _check_rho(rho)
    z = float(z)
    a, b = support_bounds(rho)
    if not math.isfinite(z) or a <= z <= b:
        raise DomainError(f"z={z} must lie outside the support [{a}, {b}]")
    return float(_finv(rho, z))


def _st(rho: float, eps: float) -> tuple[float, float]:
    g = rho * eps * (eps + 2 * rho)
    root = math.sqrt(g * g + 4 * rho * rho * (eps + rho) ** 2)
    den = 2 * (eps + rho) ** 2
    return (g - root) / den, (g + root) / den


def _check_eps(rho: float, eps: float) -> tuple[float, float]:
    rho = _check_rho(rho)
    eps = float(eps)
    if not math.isfinite(eps) or eps == 0:
        raise InvalidArgumentError(f"eps must be finite and nonzero, got {eps}")
    return rho, eps


def produces_outliers(rho: float, eps: float) -> bool:
    """Whether a change of size ``eps`` creates outliers: ``|rho + eps| > |rho|``."""
    return abs(rho + eps) > abs(rho)


def single_scm_outliers(rho: float, eps: float, sigma2: float = 1.0) -> OutlierSet:
    """Closed-form outliers of a single-time change of size ``eps``.

    Empty when ``|rho| >= |rho + eps|``; otherwise one left value ``m`` and
    one right value ``M``, both multiplied by ``sigma2``.
    """
    rho, eps = _check_eps(rho, eps)
    if not sigma2 > 0:
        raise InvalidArgumentError(f"sigma2 must be positive, got {sigma2}")
    if not produces_outliers(rho, eps):
        return OutlierSet()
    s, t = _st(rho, eps)
    fs = 1 + rho * rho - rho * (s + 1 / s)
    ft = 1 + rho * rho - rho * (t + 1 / t)
    m, M = (ft, fs) if rho > 0 else (fs, ft)
    return OutlierSet((sigma2 * m,), (sigma2 * M,))


def _det_from_x(rho: float, eps: float, h: int, x):
    c = eps + rho
    k = eps * (eps + 2 * rho)
    alpha = (rho / x + k) / c
    beta = (rho * (x + 1 / x) + k) / c
    gamma = rho / (x * c)
    d_prev, d = np.ones_like(x), alpha
    for _ in range(h - 1):
        d_prev, d = d, beta * d - d_prev
    return gamma * d - d_prev


def determinant_value(rho: float, eps: float, h: int, z: float) -> float:
    """``det M_{h+1}(z)`` by the continuant recurrence; ``alpha * gamma - 1`` when ``h = 1``."""
    rho, eps = _check_eps(rho, eps)
    if rho + eps == 0:
        raise SingularParameterError("rho + eps = 0 makes the determinant undefined")
    if int(h) != h or h < 1:
        raise InvalidArgumentError(f"h must be an integer >= 1, got {h}")
    x = f_inverse(rho, z)
    return float(_det_from_x(rho, eps, int(h), np.float64(x)))


def determinant_matrix(rho: float, eps: float, h: int, z: float) -> np.ndarray:
    """Dense ``(h+1)``-square matrix whose determinant :func:`determinant_value` returns."""
    rho, eps = _check_eps(rho, eps)
    x = f_inverse(rho, z)
    c = eps + rho
    k = eps * (eps + 2 * rho)
    m = np.diag(np.full(h + 1, (rho * (x + 1 / x) + k) / c))
    m[0, 0] = (rho / x + k) / c
    m[-1, -1] = rho / (x * c)
    m += -np.eye(h + 1, k=1) - np.eye(h + 1, k=-1)
    return m


def bracket_points(rho: float, eps: float, h: int) -> np.ndarray:
    """``1 + (eps+rho)^2 - 2 (eps+rho) cos(j pi / h)`` for ``j = 1..h-1``."""
    c = rho + eps
    j = np.arange(1, h)
    return 1.0 + c * c - 2.0 * c * np.cos(j * np.pi / h)


def upper_eigen_bound(rho: float, eps: float, h: int) -> float:
    """Bound on the largest eigenvalue: ``b + sqrt(h) |eps| sqrt((eps + 2 rho)^2 + 2)``."""
    _, b = support_bounds(rho)
    return b + math.sqrt(h) * abs(eps) * math.sqrt((eps + 2 * rho) ** 2 + 2.0)


def bracket_intervals(rho: float, eps: float, h: int, collision_tol: float = 1e-12) -> BracketReport:
    """Intervals each guaranteed to contain an outlier of a length-``h`` change.

    The points ``x_j`` together with the sentinels ``-inf`` and ``+inf`` split
    the line; each gap reaching below ``a`` gives a left interval and each
    gap reaching above ``b`` a right one. Right intervals are capped at
    :func:`upper_eigen_bound`. Points closer than ``collision_tol`` are
    merged and counted in ``merged``.
    """
    rho, eps = _check_eps(rho, eps)
    if int(h) != h or h < 1:
        raise InvalidArgumentError(f"h must be an integer >= 1, got {h}")
    h = int(h)
    if not produces_outliers(rho, eps):
        raise InvalidArgumentError(f"|rho + eps| = {abs(rho + eps)} must exceed |rho| = {abs(rho)}")
    a, b = support_bounds(rho)
    pts = np.sort(bracket_points(rho, eps, h))
    scale = max(1.0, float(np.abs(pts).max(initial=1.0)))
    for x in pts:
        if abs(x - a) <= collision_tol * scale or abs(x - b) <= collision_tol * scale:
            raise DegenerateConfigurationError(
                f"bracket point {x} coincides with a support endpoint; perturb eps slightly"
            )
    merged = 0
    kept: list[float] = []
    for x in pts:
        if kept and x - kept[-1] <= collision_tol * scale:
            merged += 1
            continue
        kept.append(float(x))
    upper = upper_eigen_bound(rho, eps, h)
    full = [-math.inf] + kept + [math.inf]
    left, right = [], []
    for lo, hi in zip(full[:-1], full[1:]):
        if lo < a:
            left.append((max(lo, 0.0), min(hi, a)))
        if hi > b:
            top = min(hi, upper) if upper > max(lo, b) else hi
            right.append((max(lo, b), top))
    return BracketReport(len(left), len(right), tuple(left), tuple(right), upper, merged)


def _roots_in(fun, lo: float, hi: float, panels: int, tol: float) -> list[float]:
    grid = np.linspace(lo, hi, panels + 1)
    vals = fun(grid)
    roots = []
    for i in range(panels):
        v0, v1 = vals[i], vals[i + 1]
        if v0 == 0.0:
            if i == 0 or vals[i - 1] != 0.0:
                roots.append(float(grid[i]))
            continue
        if np.sign(v0) == np.sign(v1) or v1 == 0.0:
            continue
        x0, x1 = grid[i], grid[i + 1]
        while x1 - x0 > tol:
            mid = 0.5 * (x0 + x1)
            if mid <= x0 or mid >= x1:
                break
            vm = fun(np.array([mid]))[0]
            if vm == 0.0:
                x0 = x1 = mid
                break
            if np.sign(vm) == np.sign(v0):
                x0 = mid
            else:
                x1 = mid
        roots.append(float(0.5 * (x0 + x1)))
    if vals[-1] == 0.0 and (panels == 0 or vals[-2] != 0.0):
        roots.append(float(grid[-1]))
    return roots


@dataclass(frozen=True)
class IntervalSolution:
    """Roots of the determinant together with the brackets used to find them."""

    outliers: OutlierSet
    brackets: BracketReport
    left_hits: tuple[int, ...] = field(default=())
    right_hits: tuple[int, ...] = field(default=())


def solve_interval_scm(
    rho: float, eps: float, h: int, tol: float = 1e-12, panels: int = 512
) -> IntervalSolution:
    """Find every determinant root inside the bracketing intervals.

    Each interval is scanned on ``panels`` uniform panels and sign changes
    are refined by bisection to width ``tol``. ``left_hits`` and
    ``right_hits`` give the number of roots found in each interval.

    Raises
    ------
    NumericalFailureError
        If a guaranteed interval shows no sign change even after a scan
        sixteen times finer.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    rep = bracket_intervals(rho, eps, h)
    fun = lambda z: _det_from_x(rho, eps, int(h), _finv(rho, z))
    found = []
    for side in (rep.left_intervals, rep.right_intervals):
        per, hits = [], []
        for lo, hi in side:
            r = _roots_in(fun, lo, hi, panels, tol)
            if not r:
                r = _roots_in(fun, lo, hi, 16 * panels, tol)
            if not r:
                raise NumericalFailureError(f"no determinant root found in guaranteed interval ({lo}, {hi})")
            per.extend(r)
            hits.append(len(r))
        found.append((per, hits))
    (left, lh), (right, rh) = found
    return IntervalSolution(OutlierSet(tuple(left), tuple(right)), rep, tuple(lh), tuple(rh))


def interval_scm_outliers(rho: float, eps: float, h: int, tol: float = 1e-12, panels: int = 512) -> OutlierSet:
    """Outliers of a change of size ``eps`` lasting ``h`` steps, by root finding."""
    return solve_interval_scm(rho, eps, h, tol, panels).outliers


def general_scm_outliers(
    schedule: CoefficientSchedule, sigma2: float = 1.0, tol: float = 1e-12, gap_warn: float = 1e-6
) -> OutlierSet:
    """Multiset union of the per-segment outliers, scaled by ``sigma2``.

    Segments with ``|rho + eps| <= |rho|`` contribute nothing and trigger a
    :class:`NoOutlierSegmentWarning`. The union is exact only as segments
    separate; a :class:`SegmentProximityWarning` is issued when ``c^gap``
    exceeds ``gap_warn``, with ``c`` the largest ``|f^-1|`` over the roots.
    """
    rho = schedule.rho
    total = OutlierSet()
    for seg in schedule.segments:
        if not produces_outliers(rho, seg.eps):
            warnings.warn(
                f"segment at k={seg.k} has |rho+eps| <= |rho| and produces no outliers",
                NoOutlierSegmentWarning,
                stacklevel=2,
            )
            continue
        total = total.union(interval_scm_outliers(rho, seg.eps, seg.h, tol))
    segs = schedule.segments
    if len(segs) > 1 and not total.is_empty:
        gap = min(cur.k - prev.end for prev, cur in zip(segs, segs[1:]))
        c = max(abs(float(_finv(rho, z))) for z in total.values())
        if c**gap > gap_warn:
            warnings.warn(
                f"segments only {gap} apart (c^gap = {c ** gap:.2g}); union is approximate",
                SegmentProximityWarning,
                stacklevel=2,
            )
    return total.scaled(sigma2) if sigma2 != 1.0 else total


def identify_magnitudes(rho: float, pairs: Iterable[tuple[float, float]]) -> list[float]:
    """Recover single-time change magnitudes from outlier pairs.

    Left values are sorted ascending and right values descending, then
    paired by position. Each pair gives ``(eps + rho)^2 = -rho^2 /
    (f^-1(m) f^-1(M))``; the root is taken with the sign of ``rho``, so
    every returned ``eps`` shares that sign.
    """
    rho = _check_rho(rho)
    pairs = list(pairs)
    lefts = sorted(float(m) for m, _ in pairs)
    rights = sorted((float(M) for _, M in pairs), reverse=True)
    a, b = support_bounds(rho)
    out = []
    for m, M in zip(lefts, rights):
        if not 0 < m < a or not M > b:
            raise InconsistentInputError(f"pair ({m}, {M}) is not a left/right outlier pair for rho={rho}")
        prod = f_inverse(rho, m) * f_inverse(rho, M)
        if not prod < 0:
            raise InconsistentInputError(f"pair ({m}, {M}) gives a non-positive (eps+rho)^2")
        c = math.copysign(math.sqrt(-rho * rho / prod), rho)
        eps = c - rho
        if eps == 0 or math.copysign(1.0, eps) != math.copysign(1.0, rho):
            raise InconsistentInputError(f"pair ({m}, {M}) implies eps={eps} without the sign of rho")
        out.append(eps)
    return out


@dataclass(frozen=True)
class BreakPointEstimate:
    """1-based argmax locations of the extreme eigenvectors.

    ``localized`` is False when neither eigenvector has an entry of at
    least ``3 / sqrt(n)``, i.e. no spike stands out of the delocalised bulk.
    """

    k_from_min: int
    k_from_max: int
    peak_min: float
    peak_max: float
    localized: bool

    def __iter__(self):
        return iter((self.k_from_min, self.k_from_max))


def locate_break_heuristic(T: SymTridiagonal, seed: int = 0) -> BreakPointEstimate:
    """Guess a break point from the eigenvectors of the smallest and largest eigenvalues.

    This is a heuristic: it relies on extreme eigenvectors of a changed
    model concentrating near the change. ``seed`` fixes the start vector of
    inverse iteration. Unpacking yields ``(k_from_min, k_from_max)``.
    """
    n = T.n
    lam = eigenvalues_by_index(T, [0, n - 1])
    vecs = eigenvectors_symtridiag(T, lam, seed=seed)
    u1, un = np.abs(vecs[0]), np.abs(vecs[-1])
    thresh = 3.0 / math.sqrt(n)
    return BreakPointEstimate(
        int(np.argmax(u1)) + 1,
        int(np.argmax(un)) + 1,
        float(u1.max()),
        float(un.max()),
        bool(u1.max() >= thresh or un.max() >= thresh),
    )


def epsilon_limit_checks(rho: float, eps: float) -> tuple[float, float]:
    """``(m, (M - b) / eps^2)``; these tend to ``0`` and ``1`` as ``|eps|`` grows."""
    rho, eps = _check_eps(rho, eps)
    if not produces_outliers(rho, eps):
        raise InvalidArgumentError(f"|rho + eps| must exceed |rho| for eps={eps}")
    out = single_scm_outliers(rho, eps)
    _, b = support_bounds(rho)
    return out.left[0], (out.right[0] - b) / (eps * eps)


def outlier_report(
    rho: float,
    outliers: OutlierSet,
    method: str,
    brackets: Sequence[BracketReport] = (),
) -> dict:
    """Structured document describing an outlier computation."""
    if method not in ("closed_form", "determinantal"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    return {
        "rho": rho,
        "left": list(outliers.left),
        "right": list(outliers.right),
        "brackets": {"segments": [b.to_dict() for b in brackets]},
        "method": method,
    }
