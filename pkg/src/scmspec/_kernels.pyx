# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for symmetric tridiagonal matrices.

Mirrors ``_kernels_py`` function for function; ``scmspec.kernels`` picks
whichever is importable.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline Py_ssize_t _count(const double[::1] d, const double[::1] e2,
                              double x, double pivmin) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0], i, cnt = 0
    cdef double q = d[0] - x
    if fabs(q) < pivmin:
        q = -pivmin
    if q < 0:
        cnt += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if fabs(q) < pivmin:
            q = -pivmin
        if q < 0:
            cnt += 1
    return cnt


def sturm_count(const double[::1] d, const double[::1] e2, double x, double pivmin):
    """Number of eigenvalues strictly below ``x``."""
    return _count(d, e2, x, pivmin)


cdef inline void _count4(const double[::1] d, const double[::1] e2, const double* x,
                         double pivmin, Py_ssize_t* cnt) noexcept nogil:
    # four independent Sturm sequences in one sweep so the divisions overlap
    cdef Py_ssize_t n = d.shape[0], i
    cdef double q0 = d[0] - x[0], q1 = d[0] - x[1], q2 = d[0] - x[2], q3 = d[0] - x[3]
    cdef double di, ei
    if fabs(q0) < pivmin:
        q0 = -pivmin
    if fabs(q1) < pivmin:
        q1 = -pivmin
    if fabs(q2) < pivmin:
        q2 = -pivmin
    if fabs(q3) < pivmin:
        q3 = -pivmin
    cdef Py_ssize_t c0 = q0 < 0, c1 = q1 < 0, c2 = q2 < 0, c3 = q3 < 0
    for i in range(1, n):
        di = d[i]
        ei = e2[i - 1]
        q0 = di - x[0] - ei / q0
        q1 = di - x[1] - ei / q1
        q2 = di - x[2] - ei / q2
        q3 = di - x[3] - ei / q3
        if fabs(q0) < pivmin:
            q0 = -pivmin
        if fabs(q1) < pivmin:
            q1 = -pivmin
        if fabs(q2) < pivmin:
            q2 = -pivmin
        if fabs(q3) < pivmin:
            q3 = -pivmin
        c0 += q0 < 0
        c1 += q1 < 0
        c2 += q2 < 0
        c3 += q3 < 0
    cnt[0] = c0
    cnt[1] = c1
    cnt[2] = c2
    cnt[3] = c3


def bisect_eigenvalues(const double[::1] d, const double[::1] e2, const cnp.int64_t[::1] index,
                       double lo, double hi, double atol, double pivmin):
    """Bisect for the eigenvalues with the given zero-based ascending ranks.

    Ranks are processed four at a time in lockstep; a lane whose bracket
    has converged keeps its midpoint fixed until the others finish.
    """
    cdef Py_ssize_t m = index.shape[0], j, l, active
    cdef double a[4]
    cdef double b[4]
    cdef double mid[4]
    cdef Py_ssize_t cnt[4]
    cdef cnp.int64_t k[4]
    cdef bint live[4]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        j = 0
        while j < m:
            for l in range(4):
                k[l] = index[j + l] if j + l < m else index[m - 1]
                a[l] = lo
                b[l] = hi
                live[l] = j + l < m
            active = 0
            for l in range(4):
                active += live[l]
            while active > 0:
                for l in range(4):
                    mid[l] = 0.5 * (a[l] + b[l])
                    if live[l] and (b[l] - a[l] <= atol or mid[l] <= a[l] or mid[l] >= b[l]):
                        live[l] = False
                        active -= 1
                if active == 0:
                    break
                _count4(d, e2, mid, pivmin, cnt)
                for l in range(4):
                    if live[l]:
                        if cnt[l] > k[l]:
                            b[l] = mid[l]
                        else:
                            a[l] = mid[l]
            for l in range(4):
                if j + l < m:
                    res[j + l] = 0.5 * (a[l] + b[l])
            j += 4
    return out


def shifted_solve(const double[::1] diag, const double[::1] off, const double[::1] shifts,
                  const double[:, ::1] rhs, double pivmin):
    """Solve ``(T - s_j I) x_j = rhs_j`` for every shift by pivoted elimination.

    Zero pivots are replaced by ``pivmin`` so the routine never divides by
    zero; this is what inverse iteration wants.
    """
    cdef Py_ssize_t n = diag.shape[0], m = shifts.shape[0], i, j
    cdef double fact, temp
    out = np.array(rhs, dtype=np.float64, copy=True)
    cdef double[:, ::1] b = out
    cdef double[::1] dd = np.empty(n)
    cdef double[::1] du = np.empty(max(n - 1, 1))
    cdef double[::1] dl = np.empty(max(n - 1, 1))
    with nogil:
        for j in range(m):
            for i in range(n):
                dd[i] = diag[i] - shifts[j]
            for i in range(n - 1):
                du[i] = off[i]
                dl[i] = off[i]
            if n == 1:
                if fabs(dd[0]) < pivmin:
                    dd[0] = pivmin
                b[j, 0] = b[j, 0] / dd[0]
                continue
            for i in range(n - 1):
                if fabs(dd[i]) >= fabs(dl[i]):
                    if fabs(dd[i]) < pivmin:
                        dd[i] = pivmin
                    fact = dl[i] / dd[i]
                    dd[i + 1] = dd[i + 1] - fact * du[i]
                    b[j, i + 1] = b[j, i + 1] - fact * b[j, i]
                    dl[i] = 0.0
                else:
                    fact = dd[i] / dl[i]
                    dd[i] = dl[i]
                    temp = dd[i + 1]
                    dd[i + 1] = du[i] - fact * temp
                    if i < n - 2:
                        dl[i] = du[i + 1]
                        du[i + 1] = -fact * dl[i]
                    else:
                        dl[i] = 0.0
                    du[i] = temp
                    temp = b[j, i]
                    b[j, i] = b[j, i + 1]
                    b[j, i + 1] = temp - fact * b[j, i + 1]
            if fabs(dd[n - 1]) < pivmin:
                dd[n - 1] = pivmin
            b[j, n - 1] = b[j, n - 1] / dd[n - 1]
            b[j, n - 2] = (b[j, n - 2] - du[n - 2] * b[j, n - 1]) / dd[n - 2]
            for i in range(n - 3, -1, -1):
                b[j, i] = (b[j, i] - du[i] * b[j, i + 1] - dl[i] * b[j, i + 2]) / dd[i]
    return out


def ar_recursion(const double[::1] coef, const double[:, ::1] innov):
    """Run ``y_t = coef_t * y_{t-1} + innov_t`` row-wise with ``y_0 = 0``.

    ``coef[t]`` multiplies the previous value at zero-based time ``t``;
    ``coef[0]`` is ignored.
    """
    cdef Py_ssize_t rows = innov.shape[0], n = innov.shape[1], r, t
    out = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] y = out
    cdef double prev
    with nogil:
        for r in range(rows):
            prev = 0.0
            for t in range(n):
                prev = coef[t] * prev + innov[r, t]
                y[r, t] = prev
    return out


cdef int _dual_simplex(double[:, ::1] T, double[::1] d, double[::1] beta,
                       cnp.int64_t[::1] basis, double tol, double ftol,
                       long bland_after, long max_iter, long* iters) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0], N = T.shape[1], i, j, r, jj
    cdef long it = 0, degenerate = 0
    cdef double worst, ratio, best, piv, br, f, dj
    cdef cnp.int64_t bidx
    while True:
        r = -1
        worst = -ftol
        bidx = -1
        for i in range(m):
            if beta[i] < -ftol:
                if degenerate >= bland_after:
                    if bidx < 0 or basis[i] < bidx:
                        bidx = basis[i]
                        r = i
                elif beta[i] < worst:
                    worst = beta[i]
                    r = i
        if r < 0:
            iters[0] = it
            return 0
        if it >= max_iter:
            iters[0] = it
            return 2
        jj = -1
        best = 0.0
        for j in range(N):
            if T[r, j] < -tol:
                ratio = d[j] / -T[r, j]
                if jj < 0 or ratio < best:
                    best = ratio
                    jj = j
        if jj < 0:
            iters[0] = it
            return 1
        # smallest index among near-ties
        for j in range(N):
            if T[r, j] < -tol and d[j] / -T[r, j] < best + tol:
                jj = j
                break
        best = d[jj] / -T[r, jj]
        if best <= tol:
            degenerate += 1
        else:
            degenerate = 0
        piv = T[r, jj]
        for j in range(N):
            T[r, j] = T[r, j] / piv
        br = beta[r] / piv
        beta[r] = br
        for i in range(m):
            if i == r:
                continue
            f = T[i, jj]
            if f != 0.0:
                for j in range(N):
                    T[i, j] -= f * T[r, j]
                beta[i] -= f * br
        dj = d[jj]
        if dj != 0.0:
            for j in range(N):
                d[j] -= dj * T[r, j]
        d[jj] = 0.0
        basis[r] = jj
        it += 1


def dual_simplex_iterate(double[:, ::1] T, double[::1] d, double[::1] beta,
                         cnp.int64_t[::1] basis, double tol, double ftol,
                         long bland_after, long max_iter):
    """Run dual simplex pivots in place on tableau ``T``.

    Returns ``(status, iterations)`` with status 0 optimal, 1 infeasible,
    2 iteration limit.
    """
    cdef long it = 0
    cdef int status
    with nogil:
        status = _dual_simplex(T, d, beta, basis, tol, ftol, bland_after, max_iter, &it)
    return status, it
