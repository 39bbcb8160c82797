"""Coefficient schedules with structural changes and AR(1) simulation.

Time is 1-based throughout: a segment ``(k, h, eps)`` raises the
coefficient to ``rho + eps`` for ``t = k, ..., k + h - 1``. Paths start
from ``y_0 = 0``.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from scmspec.errors import InvalidArgumentError
from scmspec.kernels import ar_recursion


class ExplosiveSegmentWarning(UserWarning):
    """A segment drives the local coefficient to modulus one or more."""


@dataclass(frozen=True)
class ChangeSegment:
    """A block of ``h`` consecutive times starting at ``k`` with shift ``eps``."""

    k: int
    h: int
    eps: float

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgumentError(f"break point k must be an integer >= 1, got {self.k}")
        if int(self.h) != self.h or self.h < 1:
            raise InvalidArgumentError(f"length h must be an integer >= 1, got {self.h}")
        if not math.isfinite(self.eps) or self.eps == 0:
            raise InvalidArgumentError(f"magnitude eps must be finite and nonzero, got {self.eps}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "h", int(self.h))
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def end(self) -> int:
        """Last time index covered by the segment."""
        return self.k + self.h - 1


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not math.isfinite(rho) or not 0 < abs(rho) < 1:
        raise InvalidArgumentError(f"rho must satisfy 0 < |rho| < 1, got {rho}")
    return rho


@dataclass(frozen=True)
class CoefficientSchedule:
    """Base coefficient ``rho`` plus ordered, disjoint change segments.

    An empty segment list is the null model.
    """

    rho: float
    segments: tuple[ChangeSegment, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", _check_rho(self.rho))
        segs = tuple(
            s if isinstance(s, ChangeSegment) else ChangeSegment(*s) for s in self.segments
        )
        for prev, cur in zip(segs, segs[1:]):
            if cur.k <= prev.end:
                raise InvalidArgumentError(
                    f"segments must be increasing and disjoint: [{prev.k},{prev.end}] and [{cur.k},{cur.end}]"
                )
        for s in segs:
            if abs(self.rho + s.eps) >= 1:
                warnings.warn(
                    f"segment at k={s.k} has |rho+eps| = {abs(self.rho + s.eps):.3g} >= 1",
                    ExplosiveSegmentWarning,
                    stacklevel=3,
                )
        object.__setattr__(self, "segments", segs)

    @property
    def m(self) -> int:
        """Number of change segments."""
        return len(self.segments)

    @classmethod
    def single(cls, rho: float, eps: float, k: int, h: int = 1) -> CoefficientSchedule:
        """Schedule with one change segment."""
        return cls(rho, (ChangeSegment(k, h, eps),))

    def coefficients(self, n: int) -> np.ndarray:
        """Vector ``(rho_1, ..., rho_n)`` stored zero-based."""
        if n < 1:
            raise InvalidArgumentError(f"n must be >= 1, got {n}")
        out = np.full(n, self.rho)
        for s in self.segments:
            out[s.k - 1 : min(s.end, n)] += s.eps
        return out

    def check_fits(self, n: int) -> None:
        """Raise unless every segment lies inside ``[1, n]``."""
        for s in self.segments:
            if s.end > n:
                raise InvalidArgumentError(f"segment [{s.k},{s.end}] exceeds n={n}")

    def to_dict(self, sigma2: float = 1.0) -> dict:
        return {
            "rho": self.rho,
            "segments": [{"k": s.k, "h": s.h, "eps": s.eps} for s in self.segments],
            "sigma2": float(sigma2),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> tuple[CoefficientSchedule, float]:
        """Parse a schedule document; returns the schedule and its variance."""
        try:
            segs = tuple(ChangeSegment(int(s["k"]), int(s.get("h", 1)), float(s["eps"])) for s in doc.get("segments", []))
            sched = cls(float(doc["rho"]), segs)
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"malformed schedule document: {exc!r}") from exc
        sigma2 = float(doc.get("sigma2", 1.0))
        if not sigma2 > 0:
            raise InvalidArgumentError(f"sigma2 must be positive, got {sigma2}")
        return sched, sigma2


def coefficient_at(schedule: CoefficientSchedule, t: int) -> float:
    """Coefficient ``rho_t`` at 1-based time ``t``."""
    if t < 1:
        raise InvalidArgumentError(f"t must be >= 1, got {t}")
    for s in schedule.segments:
        if s.k <= t <= s.end:
            return schedule.rho + s.eps
    return schedule.rho


def _row_generators(seed, count: int) -> list[np.random.Generator]:
    if isinstance(seed, (list, tuple)):
        if len(seed) != count:
            raise InvalidArgumentError(f"expected {count} seed sequences, got {len(seed)}")
        seqs = [s if isinstance(s, np.random.SeedSequence) else np.random.SeedSequence(s) for s in seed]
    else:
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        seqs = root.spawn(count)
    return [np.random.Generator(np.random.PCG64(s)) for s in seqs]


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seq))


def row_seeds(seed, count: int) -> list[np.random.SeedSequence]:
    """The per-row seed sequences that :func:`simulate_panel` derives from ``seed``."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(count)


def _run(coefs: np.ndarray, innov: np.ndarray) -> np.ndarray:
    return ar_recursion(np.ascontiguousarray(coefs, dtype=float), np.ascontiguousarray(innov, dtype=float))


def simulate_path(schedule: CoefficientSchedule, n: int, sigma2: float = 1.0, seed=None) -> np.ndarray:
    """Simulate ``y_t = rho_t y_{t-1} + z_t`` for ``t = 1..n`` with ``y_0 = 0``.

    Innovations are i.i.d. Gaussian with variance ``sigma2``, drawn from a
    PCG64 stream seeded by ``seed`` (an int, a ``SeedSequence`` or a
    ready ``Generator``).
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    if not sigma2 >= 0:
        raise InvalidArgumentError(f"sigma2 must be >= 0, got {sigma2}")
    rng = _generator(seed)
    z = math.sqrt(sigma2) * rng.standard_normal(n)
    return _run(schedule.coefficients(n), z[None, :])[0]


@dataclass(frozen=True, eq=False)
class PanelData:
    """``B`` independent series of length ``n`` sharing one schedule."""

    series: np.ndarray
    seed: object = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.series, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 2:
            raise InvalidArgumentError(f"panel must be B-by-n with B >= 1, n >= 2; got shape {arr.shape}")
        object.__setattr__(self, "series", arr)

    @property
    def B(self) -> int:
        return self.series.shape[0]

    @property
    def n(self) -> int:
        return self.series.shape[1]

    def to_csv(self, path: str | Path) -> None:
        """Write the long-form ``j,t,y`` table (both indices 1-based)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "t", "y"])
            for j, row in enumerate(self.series, start=1):
                for t, y in enumerate(row, start=1):
                    w.writerow([j, t, repr(float(y))])

    @classmethod
    def from_csv(cls, path: str | Path) -> PanelData:
        """Read a long-form ``j,t,y`` table."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or set(rows[0]) != {"j", "t", "y"}:
            raise InvalidArgumentError(f"{path}: expected header j,t,y")
        j = np.array([int(r["j"]) for r in rows])
        t = np.array([int(r["t"]) for r in rows])
        B, n = j.max(), t.max()
        if len(rows) != B * n or j.min() < 1 or t.min() < 1:
            raise InvalidArgumentError(f"{path}: panel is not a complete B-by-n grid")
        out = np.full((B, n), np.nan)
        out[j - 1, t - 1] = [float(r["y"]) for r in rows]
        if np.isnan(out).any():
            raise InvalidArgumentError(f"{path}: duplicate or missing (j, t) entries")
        return cls(out)


def simulate_panel(schedule: CoefficientSchedule, n: int, B: int, sigma2: float = 1.0, seed=None) -> PanelData:
    """Simulate ``B`` independent paths.

    Row ``j`` draws from its own PCG64 stream, spawned from ``seed``; a list
    of ``B`` seed sequences may be passed instead to fix every row's stream.
    """
    if B < 1:
        raise InvalidArgumentError(f"B must be >= 1, got {B}")
    if n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    if not sigma2 >= 0:
        raise InvalidArgumentError(f"sigma2 must be >= 0, got {sigma2}")
    gens = _row_generators(seed, B)
    z = math.sqrt(sigma2) * np.stack([g.standard_normal(n) for g in gens])
    return PanelData(_run(schedule.coefficients(n), z), seed=seed)


@dataclass(frozen=True)
class VarianceSchedule:
    """Base noise variance plus ordered, disjoint variance shifts ``(k, h, xi)``."""

    sigma2: float
    segments: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self) -> None:
        s2 = float(self.sigma2)
        if not (math.isfinite(s2) and s2 > 0):
            raise InvalidArgumentError(f"sigma2 must be positive, got {s2}")
        segs = []
        for seg in self.segments:
            k, h, xi = int(seg[0]), int(seg[1]), float(seg[2])
            if k < 1 or h < 1:
                raise InvalidArgumentError(f"variance segment needs k, h >= 1, got ({k}, {h})")
            if not xi > -s2:
                raise InvalidArgumentError(f"xi must exceed -sigma2 = {-s2}, got {xi}")
            segs.append((k, h, xi))
        for (k0, h0, _), (k1, _, _) in zip(segs, segs[1:]):
            if k1 <= k0 + h0 - 1:
                raise InvalidArgumentError("variance segments must be increasing and disjoint")
        object.__setattr__(self, "sigma2", s2)
        object.__setattr__(self, "segments", tuple(segs))

    def variances(self, n: int) -> np.ndarray:
        """Vector ``(sigma_1^2, ..., sigma_n^2)`` stored zero-based."""
        out = np.full(n, self.sigma2)
        for k, h, xi in self.segments:
            out[k - 1 : min(k + h - 1, n)] += xi
        return out


def simulate_hetero_path(rho: float, vs: VarianceSchedule, n: int, seed=None) -> np.ndarray:
    """Simulate ``y_t = rho y_{t-1} + sigma_t z_t`` with standard normal ``z_t``."""
    rho = float(rho)
    if not abs(rho) < 1:
        raise InvalidArgumentError(f"|rho| must be < 1, got {rho}")
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    rng = _generator(seed)
    z = np.sqrt(vs.variances(n)) * rng.standard_normal(n)
    return _run(np.full(n, rho), z[None, :])[0]


def load_schedule(path: str | Path) -> tuple[CoefficientSchedule, float]:
    """Read a schedule document from a JSON file."""
    with open(path) as fh:
        return CoefficientSchedule.from_dict(json.load(fh))


def save_schedule(schedule: CoefficientSchedule, path: str | Path, sigma2: float = 1.0) -> None:
    with open(path, "w") as fh:
        json.dump(schedule.to_dict(sigma2), fh, indent=2)


def pooled_lag1_autocorrelation(series: Sequence[Sequence[float]] | np.ndarray) -> float:
    """Pooled ratio ``sum y_t y_{t-1} / sum y_{t-1}^2`` over all rows."""
    y = np.atleast_2d(np.asarray(series, dtype=float))
    den = float(np.sum(y[:, :-1] ** 2))
    if den == 0:
        raise InvalidArgumentError("lag-1 autocorrelation undefined for an all-zero panel")
    return float(np.sum(y[:, 1:] * y[:, :-1]) / den)
