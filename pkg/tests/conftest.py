"""Shared fixtures and independent oracle helpers.

The oracles here deliberately avoid the library's code paths: determinants
by cofactor expansion, densities through explicit matrix inverses, gradients
by central finite differences.
"""

import numpy as np
import pytest

from modalmix import GaussianComponent, GaussianMixture
from modalmix.datagen import (
    overlapping_components_scenario,
    trimodal_wellseparated_scenario,
)

LOG_2PI = 1.8378770664093453


@pytest.fixture(scope="session")
def overlapping():
    return overlapping_components_scenario()


@pytest.fixture(scope="session")
def trimodal():
    return trimodal_wellseparated_scenario()


def det_cofactor(a):
    """Determinant by recursive cofactor expansion along the first row."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0])
    if n == 2:
        return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += ((-1.0) ** j) * float(a[0, j]) * det_cofactor(minor)
    return total


def naive_log_normal(x, mean, cov):
    """Log density through an explicit inverse and the cofactor determinant."""
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)
    d = mean.shape[0]
    diff = x - mean
    quad = float(diff @ np.linalg.inv(cov) @ diff)
    return -0.5 * (d * LOG_2PI + np.log(det_cofactor(cov)) + quad)


def naive_mixture_density(mixture, x):
    """Plain sum of exponentiated per-component log densities."""
    return float(
        sum(
            c.weight * np.exp(naive_log_normal(x, c.mean, c.covariance))
            for c in mixture.components
        )
    )


def fd_gradient(fun, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return out


def random_spd(rng, d, spread=0.4):
    """A well-conditioned random SPD matrix with eigenvalues near 1."""
    w = spread * rng.standard_normal((d, d))
    return w @ w.T + np.eye(d)


def random_mixture(rng, d, max_components=5):
    """A random mixture with unit-scale, well-conditioned components."""
    G = int(rng.integers(1, max_components + 1))
    raw = rng.uniform(0.2, 1.0, size=G)
    weights = raw / raw.sum()
    comps = [
        GaussianComponent(
            float(w),
            rng.uniform(-3.0, 3.0, size=d),
            random_spd(rng, d),
        )
        for w in weights
    ]
    return GaussianMixture(comps)
