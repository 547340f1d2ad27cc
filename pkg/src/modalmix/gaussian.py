"""Single multivariate normal primitives.

Everything downstream funnels covariance handling through
:func:`factorize`: a lower Cholesky factor plus log-determinant.  Densities
are evaluated in log space via triangular solves; covariances are never
inverted explicitly here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from modalmix.errors import DimensionMismatch, InvalidArgument, NotPositiveDefinite

LOG_2PI = 1.8378770664093453

# Relative diagonal jitter schedule for numerically borderline matrices.
_JITTER_START = 1e-10
_JITTER_MAX = 1e-4
_SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class CovarianceFactor:
    """Lower Cholesky factor ``L`` with ``covariance = L @ L.T``.

    Attributes
    ----------
    dimension : int
        Matrix side length.
    L : ndarray, shape (d, d)
        Lower-triangular factor.
    log_det : float
        Log-determinant of the covariance, ``2 * sum(log(diag(L)))``.
    """

    dimension: int
    L: np.ndarray
    log_det: float

    def covariance(self) -> np.ndarray:
        return self.L @ self.L.T

    def precision(self) -> np.ndarray:
        """Inverse covariance, computed by two triangular solves."""
        eye = np.eye(self.dimension)
        inv_l = solve_triangular(self.L, eye, lower=True, check_finite=False)
        prec = inv_l.T @ inv_l
        return 0.5 * (prec + prec.T)


def factorize(sigma) -> CovarianceFactor:
    """Cholesky-factorize a symmetric positive definite matrix.

    A matrix that fails the exact factorization is retried with an escalating
    relative diagonal jitter (1e-10 to 1e-4 of the mean diagonal) before
    :class:`NotPositiveDefinite` is raised.

    Raises
    ------
    DimensionMismatch
        If ``sigma`` is not square.
    InvalidArgument
        If ``sigma`` is not symmetric to relative 1e-10.
    NotPositiveDefinite
        If no jittered factorization succeeds.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionMismatch(f"covariance must be square, got shape {sigma.shape}")
    d = sigma.shape[0]
    scale = np.max(np.abs(sigma))
    if not np.all(np.isfinite(sigma)):
        raise InvalidArgument("covariance has non-finite entries")
    if np.max(np.abs(sigma - sigma.T)) > _SYMMETRY_RTOL * max(scale, 1e-300):
        raise InvalidArgument("covariance is not symmetric")
    sigma = 0.5 * (sigma + sigma.T)
    try:
        L = np.linalg.cholesky(sigma)
        return _factor_from_l(d, L)
    except np.linalg.LinAlgError:
        pass
    base = np.trace(sigma) / d
    if not base > 0.0:
        raise NotPositiveDefinite("covariance has non-positive trace")
    jitter = _JITTER_START
    while jitter <= _JITTER_MAX:
        try:
            L = np.linalg.cholesky(sigma + (jitter * base) * np.eye(d))
            return _factor_from_l(d, L)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NotPositiveDefinite(
        f"covariance not positive definite within jitter {_JITTER_MAX:g}"
    )


def _factor_from_l(d: int, L: np.ndarray) -> CovarianceFactor:
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    return CovarianceFactor(dimension=d, L=L, log_det=log_det)


def log_density(x, mean, factor: CovarianceFactor):
    """Log normal density at ``x`` (a d-vector or an (n, d) batch).

    Evaluated as ``-0.5 * (d log 2pi + log|Sigma| + ||L^{-1}(x - mean)||^2)``
    with a forward triangular solve.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim <= 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != factor.dimension or mean.shape[0] != factor.dimension:
        raise DimensionMismatch(
            f"point/mean dimension {pts.shape[1]}/{mean.shape[0]} vs factor {factor.dimension}"
        )
    z = solve_triangular(factor.L, (pts - mean).T, lower=True, check_finite=False)
    quad = np.sum(z * z, axis=0)
    out = -0.5 * (factor.dimension * LOG_2PI + factor.log_det + quad)
    return float(out[0]) if single else out


def sample(mean, factor: CovarianceFactor, count: int, rng) -> np.ndarray:
    """Draw ``count`` rows ``mean + L z`` with ``z`` standard normal.

    ``rng`` is a seed or a ``numpy.random.Generator``; a given seed yields
    the same rows on every call.
    """
    if count < 0:
        raise InvalidArgument("count must be non-negative")
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    if mean.shape[0] != factor.dimension:
        raise DimensionMismatch("mean dimension does not match factor")
    gen = np.random.default_rng(rng)
    z = gen.standard_normal((count, factor.dimension))
    return mean + z @ factor.L.T
