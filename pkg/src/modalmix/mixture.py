"""Finite Gaussian mixture: parameters, pointwise quantities, sampling, JSON.

The mixture density is ``f(x) = sum_g weight_g * N(x | mean_g, cov_g)``.
Pointwise quantities come in two numerically distinct flavors used throughout:
log-space evaluations built on per-component log terms (density,
responsibilities), and precision-weighted linear algebra built on cached
per-component precision matrices (harmonic-mean covariance, fixed-point
updates).  The packed-array cache feeding the kernel backend is built once
per mixture and marked read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

from modalmix import _backend
from modalmix.errors import DimensionMismatch, InvalidArgument
from modalmix.gaussian import CovarianceFactor, factorize

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class GaussianComponent:
    """One mixture component: positive weight, mean vector, SPD covariance."""

    weight: float
    mean: np.ndarray
    covariance: np.ndarray
    factor: CovarianceFactor = None

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        if not (0.0 < self.weight <= 1.0 + _WEIGHT_SUM_TOL):
            raise InvalidArgument(f"component weight {self.weight} outside (0, 1]")
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise DimensionMismatch(
                f"covariance shape {cov.shape} does not match mean length {mean.shape[0]}"
            )
        if self.factor is None:
            object.__setattr__(self, "factor", factorize(cov))
        for arr in (mean, cov):
            arr.flags.writeable = False

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]


class _Packed:
    """Read-only array form of a mixture consumed by the kernel backend."""

    __slots__ = ("log_weights", "means", "chol", "log_det", "prec", "prec_mu")

    def __init__(self, components):
        G = len(components)
        d = components[0].dimension
        self.log_weights = np.empty(G)
        self.means = np.empty((G, d))
        self.chol = np.empty((G, d, d))
        self.log_det = np.empty(G)
        self.prec = np.empty((G, d, d))
        self.prec_mu = np.empty((G, d))
        for g, comp in enumerate(components):
            self.log_weights[g] = np.log(comp.weight)
            self.means[g] = comp.mean
            self.chol[g] = comp.factor.L
            self.log_det[g] = comp.factor.log_det
            self.prec[g] = comp.factor.precision()
            self.prec_mu[g] = self.prec[g] @ comp.mean
        for name in self.__slots__:
            getattr(self, name).flags.writeable = False


class GaussianMixture:
    """Immutable collection of :class:`GaussianComponent` with weights
    summing to one (within 1e-12)."""

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise InvalidArgument("mixture needs at least one component")
        d = components[0].dimension
        for comp in components:
            if comp.dimension != d:
                raise DimensionMismatch("components disagree on dimension")
        total = sum(c.weight for c in components)
        if abs(total - 1.0) > _WEIGHT_SUM_TOL * max(1.0, len(components)):
            raise InvalidArgument(f"component weights sum to {total!r}, not 1")
        self.components = components

    @classmethod
    def from_arrays(cls, weights, means, covariances) -> "GaussianMixture":
        weights = np.asarray(weights, dtype=np.float64)
        return cls(
            GaussianComponent(float(w), m, c)
            for w, m, c in zip(weights, means, covariances)
        )

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dimension(self) -> int:
        return self.components[0].dimension

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    @cached_property
    def _packed(self) -> _Packed:
        return _Packed(self.components)

    # -- pointwise quantities ------------------------------------------------

    def _points(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim <= 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"point dimension {pts.shape[1]} vs mixture {self.dimension}"
            )
        return np.ascontiguousarray(pts), single

    def log_component_terms(self, x) -> np.ndarray:
        """(n, G) matrix of ``log(weight_g) + log N(x_i | ...)``."""
        pts, _ = self._points(x)
        p = self._packed
        return _backend.log_component_terms(
            pts, p.log_weights, p.means, p.chol, p.log_det
        )

    def log_density(self, x):
        lt = self.log_component_terms(x)
        m = np.max(lt, axis=1)
        out = m + np.log(np.sum(np.exp(lt - m[:, None]), axis=1))
        return float(out[0]) if np.asarray(x).ndim <= 1 else out

    def density(self, x):
        return np.exp(self.log_density(x))

    def gradient(self, x):
        """Density gradient ``sum_g weight_g N_g(x) Sigma_g^{-1} (mean_g - x)``.

        Per-component terms use triangular solves against the stored Cholesky
        factors; the result is the plain (unnormalized) gradient of ``density``.
        """
        pts, single = self._points(x)
        lt = self.log_component_terms(pts)
        p = self._packed
        out = np.zeros_like(pts)
        for g in range(p.means.shape[0]):
            L = p.chol[g]
            diff = pts - p.means[g]
            z = solve_triangular(L, diff.T, lower=True, check_finite=False)
            sol = solve_triangular(L.T, z, lower=False, check_finite=False).T
            out -= np.exp(lt[:, g])[:, None] * sol
        return out[0] if single else out

    def responsibilities(self, x):
        """Posterior component probabilities ``w_g(x)``, rows summing to 1."""
        pts, single = self._points(x)
        lt = self.log_component_terms(pts)
        m = np.max(lt, axis=1, keepdims=True)
        w = np.exp(lt - m)
        w /= np.sum(w, axis=1, keepdims=True)
        return w[0] if single else w

    def relative_gradient(self, x):
        """``gradient(x) / density(x)`` in overflow-safe responsibility form."""
        pts, single = self._points(x)
        w = np.atleast_2d(self.responsibilities(pts))
        p = self._packed
        b = w @ p.prec_mu
        mx = np.einsum("ng,gij,nj->ni", w, p.prec, pts)
        out = b - mx
        return out[0] if single else out

    def harmonic_mean_covariance(self, x) -> np.ndarray:
        """Responsibility-weighted harmonic mean of the component covariances,
        ``inv(sum_g w_g(x) Sigma_g^{-1})``, for a single point."""
        pts, single = self._points(x)
        if not single and pts.shape[0] != 1:
            raise InvalidArgument("harmonic_mean_covariance takes one point")
        w = np.atleast_2d(self.responsibilities(pts))[0]
        p = self._packed
        M = np.einsum("g,gij->ij", w, p.prec)
        L = np.linalg.cholesky(M)
        inv_l = solve_triangular(L, np.eye(self.dimension), lower=True, check_finite=False)
        out = inv_l.T @ inv_l
        return 0.5 * (out + out.T)

    def total_covariance(self) -> np.ndarray:
        """Covariance of the mixture distribution itself (moment identity)."""
        w = self.weights
        mu = self.means
        m = w @ mu
        out = np.einsum("g,gij->ij", w, np.array([c.covariance for c in self.components]))
        out += np.einsum("g,gi,gj->ij", w, mu, mu)
        out -= np.outer(m, m)
        return out

    # -- sampling ------------------------------------------------------------

    def sample(self, count: int, rng):
        """Draw ``count`` points.  Returns ``(points, labels)`` with 1-based
        component labels.  Deterministic for a given seed."""
        if count < 0:
            raise InvalidArgument("count must be non-negative")
        gen = np.random.default_rng(rng)
        G = self.n_components
        labels0 = gen.choice(G, size=count, p=self.weights)
        z = gen.standard_normal((count, self.dimension))
        p = self._packed
        pts = p.means[labels0] + np.einsum("nij,nj->ni", p.chol[labels0], z)
        return pts, labels0 + 1

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "components": [
                {
                    "weight": float(c.weight),
                    "mean": [float(v) for v in c.mean],
                    "covariance": [[float(v) for v in row] for row in c.covariance],
                }
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GaussianMixture":
        try:
            d = int(payload["dimension"])
            comps = payload["components"]
        except (KeyError, TypeError) as exc:
            raise InvalidArgument(f"malformed mixture payload: {exc}") from exc
        components = []
        for entry in comps:
            mean = np.asarray(entry["mean"], dtype=np.float64)
            cov = np.asarray(entry["covariance"], dtype=np.float64)
            if mean.shape[0] != d:
                raise DimensionMismatch("component mean length disagrees with dimension")
            components.append(GaussianComponent(float(entry["weight"]), mean, cov))
        return cls(components)

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "GaussianMixture":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def __repr__(self) -> str:
        return f"GaussianMixture(G={self.n_components}, d={self.dimension})"
