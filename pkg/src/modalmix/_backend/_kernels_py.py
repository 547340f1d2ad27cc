"""Pure-numpy implementations of the inner-loop kernels.

Mirrors the compiled extension in ``_kernels.pyx``.  All functions take the
mixture in packed-array form: ``log_w (G,)``, ``means (G, d)``, ``chol
(G, d, d)`` lower Cholesky factors, ``log_det (G,)`` covariance
log-determinants, and for the shift kernels additionally ``prec (G, d, d)``
precision matrices and ``prec_mu (G, d)`` precision-mean products.

Per-point results depend only on that point's row, so batch composition never
changes an individual trajectory.
"""

import numpy as np

LOG_2PI = 1.8378770664093453

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_ASCENT_VIOLATION = 2
STATUS_NOT_SPD = 3


def log_component_terms(X, log_w, means, chol, log_det):
    """Per-point, per-component log(weight * normal density), shape (n, G).

    The quadratic form uses forward substitution against the stored Cholesky
    factor; no covariance is ever inverted explicitly.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    G = log_w.shape[0]
    out = np.empty((n, G))
    z = np.empty((n, d))
    for g in range(G):
        L = chol[g]
        for i in range(d):
            s = X[:, i] - means[g, i]
            for k in range(i):
                s = s - L[i, k] * z[:, k]
            z[:, i] = s / L[i, i]
        quad = np.einsum("ni,ni->n", z, z)
        out[:, g] = log_w[g] - 0.5 * (d * LOG_2PI + log_det[g] + quad)
    return out


def _logsumexp_rows(lt):
    m = np.max(lt, axis=1)
    return m + np.log(np.sum(np.exp(lt - m[:, None]), axis=1))


def _shift_from_terms(X, lt, logf, prec, prec_mu):
    w = np.exp(lt - logf[:, None])
    M = np.einsum("ng,gij->nij", w, prec)
    b = w @ prec_mu
    # Stacked solve needs an explicit column axis on the right-hand side.
    return np.linalg.solve(M, b[:, :, None])[:, :, 0]


def shift_steps(X, log_w, means, chol, log_det, prec, prec_mu):
    """One fixed-point update per row of X.  Returns (Y, log_density_at_X)."""
    X = np.asarray(X, dtype=np.float64)
    lt = log_component_terms(X, log_w, means, chol, log_det)
    logf = _logsumexp_rows(lt)
    return _shift_from_terms(X, lt, logf, prec, prec_mu), logf


def ascend(X, log_w, means, chol, log_det, prec, prec_mu,
           step_tol, max_iter, ascent_slack):
    """Iterate the fixed-point map per row until the step norm drops below
    ``step_tol`` or ``max_iter`` is hit.

    Returns ``(terminals, log_density_at_terminals, iterations, status)``
    with status 0 converged, 1 max-iteration, 2 density decreased beyond
    ``ascent_slack``, 3 linear algebra failure.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    cur = X.copy()
    lt = log_component_terms(cur, log_w, means, chol, log_det)
    logf = _logsumexp_rows(lt)
    f_cur = np.exp(logf)
    iters = np.full(n, max_iter, dtype=np.int64)
    status = np.full(n, STATUS_MAX_ITER, dtype=np.int64)
    active = np.arange(n)
    lt_a = lt
    logf_a = logf
    tol2 = step_tol * step_tol
    for j in range(1, max_iter + 1):
        if active.size == 0:
            break
        prev = cur[active]
        try:
            y = _shift_from_terms(prev, lt_a, logf_a, prec, prec_mu)
        except np.linalg.LinAlgError:
            status[active] = STATUS_NOT_SPD
            iters[active] = j
            break
        lt_y = log_component_terms(y, log_w, means, chol, log_det)
        logf_y = _logsumexp_rows(lt_y)
        f_y = np.exp(logf_y)
        viol = f_y < f_cur[active] - ascent_slack
        step2 = np.sum((y - prev) ** 2, axis=1)
        conv = (step2 < tol2) & ~viol
        cur[active] = y
        logf[active] = logf_y
        f_cur[active] = f_y
        status[active[viol]] = STATUS_ASCENT_VIOLATION
        status[active[conv]] = STATUS_CONVERGED
        done = viol | conv
        iters[active[done]] = j
        keep = ~done
        active = active[keep]
        lt_a = lt_y[keep]
        logf_a = logf_y[keep]
    return cur, logf, iters, status
