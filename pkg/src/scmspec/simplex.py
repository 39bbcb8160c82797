"""Dense dual simplex for ``min c^T x  s.t.  A x <= b, x >= 0`` with ``c >= 0``.

Nonnegative costs make the all-slack basis dual feasible, so the dual
simplex can start there whatever the sign of ``b``. The leaving row is the
most infeasible one until a run of degenerate pivots, after which Bland's
smallest-index rule takes over to rule out cycling. Pivoting runs in
:func:`scmspec.kernels.dual_simplex_iterate`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scmspec import kernels
from scmspec.errors import InvalidArgumentError, NumericalFailureError


class InfeasibleProblemError(NumericalFailureError):
    """The constraints admit no nonnegative solution."""


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int
    basis: np.ndarray


class DualSimplex:
    """Tableau dual simplex over a fixed ``(A, c)`` pair.

    Parameters
    ----------
    A : (m, k) array
    c : (k,) array, all entries >= 0
    tol : pivot and feasibility tolerance, relative to the data scale.
    bland_after : consecutive degenerate pivots before switching to Bland's rule.
    max_iter : pivot limit per solve.

    Notes
    -----
    Dual feasibility does not depend on ``b``, so ``solve(b, warm=True)``
    may restart from the previous optimal basis. For CLIME columns a cold
    start is usually faster, hence the default.
    """

    def __init__(
        self,
        A: np.ndarray,
        c: np.ndarray,
        tol: float = 1e-10,
        bland_after: int = 50,
        max_iter: int | None = None,
    ) -> None:
        A = np.asarray(A, dtype=float)
        c = np.asarray(c, dtype=float)
        if A.ndim != 2 or c.shape != (A.shape[1],):
            raise InvalidArgumentError("A must be (m, k) and c of length k")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
            raise InvalidArgumentError("LP data must be finite")
        if np.any(c < 0):
            raise InvalidArgumentError("costs must be nonnegative for a dual-feasible start")
        self.m, self.k = A.shape
        self._A = A
        self._c = c
        self._full = np.hstack([A, np.eye(self.m)])
        self.tol = tol * max(1.0, float(np.abs(A).max(initial=0.0)))
        self.bland_after = int(bland_after)
        self.max_iter = int(max_iter) if max_iter is not None else 50 * (self.m + self.k)
        self.reset()

    def reset(self) -> None:
        """Return to the all-slack basis."""
        self._T = np.ascontiguousarray(self._full.copy())
        self._d = np.concatenate([self._c, np.zeros(self.m)])
        self._basis = np.arange(self.k, self.k + self.m, dtype=np.int64)

    def solve(self, b: np.ndarray, warm: bool = False) -> LPResult:
        """Solve for right-hand side ``b``.

        Raises
        ------
        InfeasibleProblemError
            When no ``x >= 0`` satisfies ``A x <= b``.
        NumericalFailureError
            When the pivot limit is reached.
        """
        b = np.asarray(b, dtype=float)
        if b.shape != (self.m,):
            raise InvalidArgumentError(f"b must have length {self.m}")
        if not warm:
            self.reset()
        k = self.k
        beta = np.ascontiguousarray(self._T[:, k:] @ b)
        ftol = self.tol * max(1.0, float(np.abs(b).max(initial=0.0)))
        status, it = kernels.dual_simplex_iterate(
            self._T, self._d, beta, self._basis, self.tol, ftol, self.bland_after, self.max_iter
        )
        if status == 1:
            self.reset()
            raise InfeasibleProblemError("constraints are infeasible")
        if status == 2:
            self.reset()
            raise NumericalFailureError(f"dual simplex hit the iteration limit ({self.max_iter})")
        basis = self._basis
        # recompute the basic solution from the original data to shed drift
        try:
            xb = np.linalg.solve(self._full[:, basis], b)
        except np.linalg.LinAlgError:
            xb = beta
        if np.any(xb < -1e3 * ftol):
            xb = beta
        z = np.zeros(k + self.m)
        z[basis] = np.maximum(xb, 0.0)
        x = z[:k]
        return LPResult(x, float(self._c @ x), int(it), basis.copy())


def solve_lp(A: np.ndarray, b: np.ndarray, c: np.ndarray, tol: float = 1e-10) -> LPResult:
    """One-shot ``min c^T x  s.t.  A x <= b, x >= 0`` for ``c >= 0``."""
    return DualSimplex(A, c, tol).solve(b)
