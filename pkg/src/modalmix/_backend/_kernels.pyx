# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner-loop kernels.

Same contract as ``_kernels_py``: packed mixture arrays in, per-point results
out.  The per-point ascent loop runs entirely in C with one log-term
evaluation per iteration.
"""

from libc.math cimport exp, log, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

cdef double LOG_2PI = 1.8378770664093453

cdef int _ST_CONVERGED = 0
cdef int _ST_MAX_ITER = 1
cdef int _ST_ASCENT_VIOLATION = 2
cdef int _ST_NOT_SPD = 3

STATUS_CONVERGED = _ST_CONVERGED
STATUS_MAX_ITER = _ST_MAX_ITER
STATUS_ASCENT_VIOLATION = _ST_ASCENT_VIOLATION
STATUS_NOT_SPD = _ST_NOT_SPD


cdef inline double _point_log_terms(const double* x, int d, int G,
                                    const double* log_w, const double* means,
                                    const double* chol, const double* log_det,
                                    double* z, double* lt) noexcept nogil:
    # Fills lt[g] = log_w[g] + log N(x | mu_g, Sigma_g); returns logsumexp(lt).
    cdef int g, i, k
    cdef double s, q, m, acc
    for g in range(G):
        q = 0.0
        for i in range(d):
            s = x[i] - means[g * d + i]
            for k in range(i):
                s -= chol[(g * d + i) * d + k] * z[k]
            z[i] = s / chol[(g * d + i) * d + i]
            q += z[i] * z[i]
        lt[g] = log_w[g] - 0.5 * (d * LOG_2PI + log_det[g] + q)
    m = lt[0]
    for g in range(1, G):
        if lt[g] > m:
            m = lt[g]
    acc = 0.0
    for g in range(G):
        acc += exp(lt[g] - m)
    return m + log(acc)


cdef inline int _shift_point(int d, int G, const double* prec,
                             const double* prec_mu, const double* lt,
                             double logf, double* M, double* b,
                             double* y) noexcept nogil:
    # Responsibility-weighted precision system M y = b, solved by an in-place
    # Cholesky of M (PD as a convex combination of precisions).
    cdef int g, i, j, k
    cdef double wg, s
    for i in range(d):
        b[i] = 0.0
        for j in range(d):
            M[i * d + j] = 0.0
    for g in range(G):
        wg = exp(lt[g] - logf)
        for i in range(d):
            b[i] += wg * prec_mu[g * d + i]
            for j in range(i + 1):
                M[i * d + j] += wg * prec[(g * d + i) * d + j]
    for i in range(d):
        for j in range(i):
            s = M[i * d + j]
            for k in range(j):
                s -= M[i * d + k] * M[j * d + k]
            M[i * d + j] = s / M[j * d + j]
        s = M[i * d + i]
        for k in range(i):
            s -= M[i * d + k] * M[i * d + k]
        if s <= 0.0:
            return -1
        M[i * d + i] = sqrt(s)
    for i in range(d):
        s = b[i]
        for k in range(i):
            s -= M[i * d + k] * y[k]
        y[i] = s / M[i * d + i]
    for i in range(d - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, d):
            s -= M[k * d + i] * y[k]
        y[i] = s / M[i * d + i]
    return 0


def log_component_terms(const double[:, ::1] X, const double[::1] log_w,
                        const double[:, ::1] means, const double[:, :, ::1] chol,
                        const double[::1] log_det):
    cdef int n = X.shape[0]
    cdef int d = X.shape[1]
    cdef int G = log_w.shape[0]
    out_arr = np.empty((n, G))
    cdef double[:, ::1] out = out_arr
    cdef double* z = <double*> malloc(d * sizeof(double))
    if z == NULL:
        raise MemoryError
    cdef int p
    try:
        with nogil:
            for p in range(n):
                _point_log_terms(&X[p, 0], d, G, &log_w[0], &means[0, 0],
                                 &chol[0, 0, 0], &log_det[0], z, &out[p, 0])
    finally:
        free(z)
    return out_arr


def shift_steps(const double[:, ::1] X, const double[::1] log_w, const double[:, ::1] means,
                const double[:, :, ::1] chol, const double[::1] log_det,
                const double[:, :, ::1] prec, const double[:, ::1] prec_mu):
    cdef int n = X.shape[0]
    cdef int d = X.shape[1]
    cdef int G = log_w.shape[0]
    y_arr = np.empty((n, d))
    logf_arr = np.empty(n)
    cdef double[:, ::1] Y = y_arr
    cdef double[::1] logf = logf_arr
    cdef double* scratch = <double*> malloc((2 * d + G + d * d) * sizeof(double))
    if scratch == NULL:
        raise MemoryError
    cdef double* z = scratch
    cdef double* b = scratch + d
    cdef double* lt = scratch + 2 * d
    cdef double* M = scratch + 2 * d + G
    cdef int p, bad = 0
    try:
        with nogil:
            for p in range(n):
                logf[p] = _point_log_terms(&X[p, 0], d, G, &log_w[0],
                                           &means[0, 0], &chol[0, 0, 0],
                                           &log_det[0], z, lt)
                if _shift_point(d, G, &prec[0, 0, 0], &prec_mu[0, 0], lt,
                                logf[p], M, b, &Y[p, 0]) != 0:
                    bad = 1
                    break
    finally:
        free(scratch)
    if bad:
        raise np.linalg.LinAlgError("shift system not positive definite")
    return y_arr, logf_arr


def ascend(const double[:, ::1] X, const double[::1] log_w, const double[:, ::1] means,
           const double[:, :, ::1] chol, const double[::1] log_det,
           const double[:, :, ::1] prec, const double[:, ::1] prec_mu,
           double step_tol, long max_iter, double ascent_slack):
    cdef int n = X.shape[0]
    cdef int d = X.shape[1]
    cdef int G = log_w.shape[0]
    y_arr = np.empty((n, d))
    logf_arr = np.empty(n)
    iters_arr = np.empty(n, dtype=np.int64)
    status_arr = np.empty(n, dtype=np.int64)
    cdef double[:, ::1] Y = y_arr
    cdef double[::1] logf_out = logf_arr
    cdef long[::1] iters = iters_arr
    cdef long[::1] status = status_arr
    cdef double* scratch = <double*> malloc((4 * d + G + d * d) * sizeof(double))
    if scratch == NULL:
        raise MemoryError
    cdef double* z = scratch
    cdef double* b = scratch + d
    cdef double* cur = scratch + 2 * d
    cdef double* ynew = scratch + 3 * d
    cdef double* lt = scratch + 4 * d
    cdef double* M = scratch + 4 * d + G
    cdef int p, i, st
    cdef long j, itc
    cdef double logf_cur, logf_new, f_cur, f_new, step2, diff
    cdef double tol2 = step_tol * step_tol
    try:
        with nogil:
            for p in range(n):
                for i in range(d):
                    cur[i] = X[p, i]
                logf_cur = _point_log_terms(cur, d, G, &log_w[0], &means[0, 0],
                                            &chol[0, 0, 0], &log_det[0], z, lt)
                f_cur = exp(logf_cur)
                st = _ST_MAX_ITER
                itc = max_iter
                for j in range(1, max_iter + 1):
                    if _shift_point(d, G, &prec[0, 0, 0], &prec_mu[0, 0], lt,
                                    logf_cur, M, b, ynew) != 0:
                        st = _ST_NOT_SPD
                        itc = j
                        break
                    logf_new = _point_log_terms(ynew, d, G, &log_w[0],
                                                &means[0, 0], &chol[0, 0, 0],
                                                &log_det[0], z, lt)
                    f_new = exp(logf_new)
                    step2 = 0.0
                    for i in range(d):
                        diff = ynew[i] - cur[i]
                        step2 += diff * diff
                        cur[i] = ynew[i]
                    if f_new < f_cur - ascent_slack:
                        logf_cur = logf_new
                        st = _ST_ASCENT_VIOLATION
                        itc = j
                        break
                    logf_cur = logf_new
                    f_cur = f_new
                    if step2 < tol2:
                        st = _ST_CONVERGED
                        itc = j
                        break
                for i in range(d):
                    Y[p, i] = cur[i]
                logf_out[p] = logf_cur
                iters[p] = itc
                status[p] = st
    finally:
        free(scratch)
    return y_arr, logf_arr, iters_arr, status_arr
