"""Cholesky factorization and single-Gaussian density primitives."""

import numpy as np
import pytest

from modalmix.errors import DimensionMismatch, InvalidArgument, NotPositiveDefinite
from modalmix.gaussian import CovarianceFactor, factorize, log_density, sample

from conftest import det_cofactor, naive_log_normal


def test_factorize_identity():
    f = factorize(np.eye(3))
    assert f.dimension == 3
    assert f.log_det == 0.0
    np.testing.assert_allclose(f.L, np.eye(3))


def test_factorize_log_det_matches_cofactor_oracle():
    rng = np.random.default_rng(11)
    for d in (1, 2, 3, 4):
        for _ in range(20):
            w = 0.4 * rng.standard_normal((d, d))
            cov = w @ w.T + np.eye(d)
            f = factorize(cov)
            assert f.log_det == pytest.approx(np.log(det_cofactor(cov)), rel=1e-10)


def test_factor_reconstructs_covariance():
    rng = np.random.default_rng(5)
    for _ in range(25):
        d = int(rng.integers(1, 6))
        w = 0.5 * rng.standard_normal((d, d))
        cov = w @ w.T + np.eye(d)
        f = factorize(cov)
        rebuilt = f.L @ f.L.T
        assert np.linalg.norm(rebuilt - cov) <= 1e-8 * np.linalg.norm(cov)
        np.testing.assert_allclose(f.covariance(), cov, atol=1e-12 * np.linalg.norm(cov) + 1e-14)


def test_precision_is_inverse():
    rng = np.random.default_rng(7)
    for _ in range(20):
        d = int(rng.integers(1, 5))
        w = 0.4 * rng.standard_normal((d, d))
        cov = w @ w.T + np.eye(d)
        p = factorize(cov).precision()
        np.testing.assert_allclose(p @ cov, np.eye(d), atol=1e-9)
        np.testing.assert_allclose(p, p.T)


def test_factorize_scalar_and_1x1():
    f = factorize(np.array([[4.0]]))
    assert f.L[0, 0] == 2.0
    assert f.log_det == pytest.approx(np.log(4.0))


def test_factorize_rejects_nonsquare():
    with pytest.raises(DimensionMismatch):
        factorize(np.ones((2, 3)))


def test_factorize_rejects_asymmetric():
    with pytest.raises(InvalidArgument):
        factorize(np.array([[1.0, 0.5], [0.2, 1.0]]))


def test_factorize_rejects_nonfinite():
    with pytest.raises(InvalidArgument):
        factorize(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_factorize_rejects_negative_definite():
    with pytest.raises(NotPositiveDefinite):
        factorize(-np.eye(2))


def test_factorize_jitters_semidefinite():
    # Rank-1 matrix: positive semidefinite, singular.  The escalating ridge
    # should still produce a usable factor close to the input.
    v = np.array([1.0, 2.0])
    cov = np.outer(v, v)
    f = factorize(cov)
    rebuilt = f.L @ f.L.T
    assert np.linalg.norm(rebuilt - cov) <= 1e-3 * np.linalg.norm(cov)


def test_log_density_standard_normal_frozen_values():
    f = factorize(np.eye(1))
    # 1/sqrt(2*pi) at the mean.
    assert log_density(np.zeros(1), np.zeros(1), f) == pytest.approx(
        -0.9189385332046727, abs=1e-15
    )
    assert np.exp(log_density(np.zeros(1), np.zeros(1), f)) == pytest.approx(
        0.3989422804014327, rel=1e-14
    )
    # Standard 2-d normal at the origin: 1/(2*pi).
    f2 = factorize(np.eye(2))
    assert np.exp(log_density(np.zeros(2), np.zeros(2), f2)) == pytest.approx(
        0.15915494309189535, rel=1e-14
    )
    # N(0,1) at x=0.5: exp(-0.125)/sqrt(2*pi).
    assert np.exp(log_density(np.array([0.5]), np.zeros(1), f)) == pytest.approx(
        0.3520653267642995, rel=1e-13
    )


def test_log_density_matches_naive_oracle():
    rng = np.random.default_rng(3)
    for d in (1, 2, 3, 5):
        for _ in range(10):
            w = 0.4 * rng.standard_normal((d, d))
            cov = w @ w.T + np.eye(d)
            mean = rng.standard_normal(d)
            x = rng.standard_normal(d)
            got = log_density(x, mean, factorize(cov))
            assert got == pytest.approx(naive_log_normal(x, mean, cov), rel=1e-10)


def test_log_density_batch_matches_single():
    rng = np.random.default_rng(9)
    cov = np.array([[2.0, 0.3], [0.3, 1.0]])
    mean = np.array([0.5, -1.0])
    f = factorize(cov)
    pts = rng.standard_normal((40, 2))
    batch = log_density(pts, mean, f)
    assert batch.shape == (40,)
    for i in range(40):
        assert batch[i] == pytest.approx(log_density(pts[i], mean, f), abs=1e-14)


def test_density_integrates_to_one_1d():
    # Trapezoid quadrature over a wide grid; loose tolerance.
    f = factorize(np.array([[1.7]]))
    xs = np.linspace(-12.0, 12.0, 4001)
    vals = np.exp(log_density(xs[:, None], np.array([0.3]), f))
    total = np.trapezoid(vals, xs)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_density_integrates_to_one_2d():
    cov = np.array([[1.0, 0.4], [0.4, 0.8]])
    f = factorize(cov)
    xs = np.linspace(-7.0, 7.0, 201)
    ys = np.linspace(-7.0, 7.0, 201)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    vals = np.exp(log_density(pts, np.zeros(2), f)).reshape(xx.shape)
    total = np.trapezoid(np.trapezoid(vals, ys, axis=1), xs)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_sample_moments():
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    mean = np.array([1.0, -2.0])
    pts = sample(mean, factorize(cov), 50_000, rng=42)
    assert pts.shape == (50_000, 2)
    np.testing.assert_allclose(pts.mean(axis=0), mean, atol=0.05)
    np.testing.assert_allclose(np.cov(pts.T), cov, atol=0.08)


def test_sample_deterministic_for_seed():
    f = factorize(np.eye(2))
    a = sample(np.zeros(2), f, 10, rng=7)
    b = sample(np.zeros(2), f, 10, rng=7)
    np.testing.assert_array_equal(a, b)


def test_covariance_factor_frozen_fields():
    f = factorize(np.eye(2))
    assert isinstance(f, CovarianceFactor)
    with pytest.raises(AttributeError):
        f.dimension = 5
