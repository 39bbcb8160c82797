"""Pure-numpy fallback for the compiled kernels in ``_kernels.pyx``.

Loops run over the matrix dimension and are vectorised across eigenvalue
ranks or shifts, so the fallback stays usable for n in the low thousands.
"""

from __future__ import annotations

import numpy as np


def _counts(d, e2, x, pivmin):
    x = np.asarray(x, dtype=float)
    q = d[0] - x
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    cnt = (q < 0).astype(np.int64)
    for i in range(1, d.shape[0]):
        q = d[i] - x - e2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        cnt += q < 0
    return cnt


def sturm_count(d, e2, x, pivmin):
    """Number of eigenvalues strictly below ``x``."""
    return int(_counts(d, e2, np.array([x]), pivmin)[0])


def bisect_eigenvalues(d, e2, index, lo, hi, atol, pivmin):
    """Bisect for the eigenvalues with the given zero-based ascending ranks."""
    index = np.asarray(index, dtype=np.int64)
    a = np.full(index.shape, lo, dtype=float)
    b = np.full(index.shape, hi, dtype=float)
    active = (b - a) > atol
    while active.any():
        mid = 0.5 * (a + b)
        stuck = (mid <= a) | (mid >= b)
        active &= ~stuck
        if not active.any():
            break
        idx = np.flatnonzero(active)
        above = _counts(d, e2, mid[idx], pivmin) > index[idx]
        b[idx[above]] = mid[idx[above]]
        a[idx[~above]] = mid[idx[~above]]
        active &= (b - a) > atol
    return 0.5 * (a + b)


def shifted_solve(diag, off, shifts, rhs, pivmin):
    """Solve ``(T - s_j I) x_j = rhs_j`` for every shift by pivoted elimination."""
    shifts = np.asarray(shifts, dtype=float)
    b = np.array(rhs, dtype=float, copy=True)
    n = diag.shape[0]
    m = shifts.shape[0]
    dd = diag[None, :] - shifts[:, None]
    if n == 1:
        piv = np.where(np.abs(dd[:, 0]) < pivmin, pivmin, dd[:, 0])
        return b / piv[:, None]
    du = np.tile(off, (m, 1))
    dl = np.tile(off, (m, 1))
    for i in range(n - 1):
        keep = np.abs(dd[:, i]) >= np.abs(dl[:, i])
        sw = ~keep
        if keep.any():
            k = np.flatnonzero(keep)
            piv = dd[k, i]
            piv = np.where(np.abs(piv) < pivmin, pivmin, piv)
            dd[k, i] = piv
            fact = dl[k, i] / piv
            dd[k, i + 1] -= fact * du[k, i]
            b[k, i + 1] -= fact * b[k, i]
            dl[k, i] = 0.0
        if sw.any():
            s = np.flatnonzero(sw)
            fact = dd[s, i] / dl[s, i]
            dd[s, i] = dl[s, i]
            temp = dd[s, i + 1].copy()
            dd[s, i + 1] = du[s, i] - fact * temp
            if i < n - 2:
                dl[s, i] = du[s, i + 1]
                du[s, i + 1] = -fact * dl[s, i]
            else:
                dl[s, i] = 0.0
            du[s, i] = temp
            tb = b[s, i].copy()
            b[s, i] = b[s, i + 1]
            b[s, i + 1] = tb - fact * b[s, i + 1]
    last = dd[:, n - 1]
    dd[:, n - 1] = np.where(np.abs(last) < pivmin, pivmin, last)
    b[:, n - 1] /= dd[:, n - 1]
    b[:, n - 2] = (b[:, n - 2] - du[:, n - 2] * b[:, n - 1]) / dd[:, n - 2]
    for i in range(n - 3, -1, -1):
        b[:, i] = (b[:, i] - du[:, i] * b[:, i + 1] - dl[:, i] * b[:, i + 2]) / dd[:, i]
    return b


def ar_recursion(coef, innov):
    """Run ``y_t = coef_t * y_{t-1} + innov_t`` row-wise with ``y_0 = 0``."""
    innov = np.asarray(innov, dtype=float)
    y = np.empty_like(innov)
    prev = np.zeros(innov.shape[0])
    for t in range(innov.shape[1]):
        prev = coef[t] * prev + innov[:, t]
        y[:, t] = prev
    return y


def dual_simplex_iterate(T, d, beta, basis, tol, ftol, bland_after, max_iter):
    """Run dual simplex pivots in place on tableau ``T``.

    Returns ``(status, iterations)`` with status 0 optimal, 1 infeasible,
    2 iteration limit.
    """
    it = 0
    degenerate = 0
    while True:
        neg = np.flatnonzero(beta < -ftol)
        if neg.size == 0:
            return 0, it
        if it >= max_iter:
            return 2, it
        if degenerate >= bland_after:
            r = int(neg[np.argmin(basis[neg])])
        else:
            r = int(neg[np.argmin(beta[neg])])
        row = T[r]
        cand = np.flatnonzero(row < -tol)
        if cand.size == 0:
            return 1, it
        ratios = d[cand] / -row[cand]
        best = ratios.min()
        j = int(cand[np.flatnonzero(ratios < best + tol)[0]])
        best = d[j] / -row[j]
        degenerate = degenerate + 1 if best <= tol else 0
        prow = row / row[j]
        col = T[:, j].copy()
        col[r] = 0.0
        br = beta[r] / row[j]
        T -= np.outer(col, prow)
        T[r] = prow
        beta -= col * br
        beta[r] = br
        d -= d[j] * prow
        d[j] = 0.0
        basis[r] = j
        it += 1
