import numpy as np
import pytest

from bbclust.bootstrap import (
    SYNTHETIC,
    BootstrapConfig,
    efron_weights,
    proper_bayesian_replica,
    rubin_weights,
)
from bbclust.kmeans import KMeansConfig, kmeans
from bbclust.prior import elicit_prior
from bbclust.rng import SeededRng


@pytest.fixture(scope="module")
def setup():
    X = np.random.default_rng(0).normal(size=(100, 2))
    prior = elicit_prior(X, kmeans(X, KMeansConfig(3), rng=0), 1.0)
    return X, prior


def test_efron_basics():
    assert efron_weights(1, 0).tolist() == [1.0]
    gen = np.random.default_rng(1)
    for _ in range(200):
        w = efron_weights(7, gen)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(w * 7, np.rint(w * 7), atol=1e-12)


def test_efron_mean():
    gen = np.random.default_rng(2)
    W = np.array([efron_weights(5, gen) for _ in range(100_000)])
    assert np.all((W.mean(axis=0) >= 0.195) & (W.mean(axis=0) <= 0.205))


def test_rubin_moments():
    assert rubin_weights(1, 0).tolist() == [1.0]
    gen = np.random.default_rng(3)
    W = np.array([rubin_weights(4, gen) for _ in range(100_000)])
    assert np.all(W > 0)
    np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-12)
    assert np.all((W.mean(axis=0) >= 0.245) & (W.mean(axis=0) <= 0.255))
    # Dirichlet(1,1,1,1): Var = a_i (a_0 - a_i) / (a_0^2 (a_0 + 1)) = 3/80
    np.testing.assert_allclose(W.var(axis=0), 3 / 80, rtol=0.03)


def test_config_validation():
    with pytest.raises(ValueError):
        BootstrapConfig(omega=1.0)
    with pytest.raises(ValueError):
        BootstrapConfig(B=0)
    with pytest.raises(ValueError):
        BootstrapConfig(scheme="jackknife")
    assert BootstrapConfig(omega=0.5).prior_mass(100) == pytest.approx(100.0)


def test_omega_zero_has_no_synthetic(setup):
    X, prior = setup
    cfg = BootstrapConfig(omega=0.0)
    for b in range(50):
        rep = proper_bayesian_replica(X, prior, cfg, SeededRng(0).child("r", b))
        assert rep.n_synthetic == 0
        np.testing.assert_array_equal(rep.points, X[rep.source])


def test_replica_invariants(setup):
    X, prior = setup
    cfg = BootstrapConfig(omega=0.5)
    rep = proper_bayesian_replica(X, prior, cfg, 7)
    assert rep.points.shape == (100, 2)
    assert rep.weights.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(rep.weights > 0)
    orig = rep.source != SYNTHETIC
    np.testing.assert_array_equal(rep.points[orig], X[rep.source[orig]])


def test_synthetic_fraction_band(setup):
    X, prior = setup
    cfg = BootstrapConfig(omega=0.5)
    syn = sum(proper_bayesian_replica(X, prior, cfg, SeededRng(1).child("r", b)).n_synthetic for b in range(200))
    assert 0.46 <= syn / (200 * 100) <= 0.54


def test_m_equals_one(setup):
    X, prior = setup
    rep = proper_bayesian_replica(X, prior, BootstrapConfig(m=1, omega=0.3), 2)
    assert rep.weights.tolist() == [1.0]


def test_dirichlet_concentration():
    # with m = n the per-point concentration is (n + k) / n = 1 / (1 - omega);
    # Var(w_i) = a(a0 - a) / (a0^2 (a0 + 1)) with a0 = m a
    X = np.zeros((4, 1)) + np.arange(4)[:, None]
    prior = elicit_prior(X, kmeans(X, KMeansConfig(1), rng=0), 1.0)
    cfg = BootstrapConfig(omega=0.5)
    W = np.array([proper_bayesian_replica(X, prior, cfg, SeededRng(5).child(b)).weights for b in range(40_000)])
    a, a0 = 2.0, 8.0
    np.testing.assert_allclose(W.var(axis=0), a * (a0 - a) / (a0**2 * (a0 + 1)), rtol=0.05)


def test_same_substream_same_replica(setup):
    X, prior = setup
    cfg = BootstrapConfig(omega=0.5)
    a = proper_bayesian_replica(X, prior, cfg, SeededRng(9).child("replica", 4))
    b = proper_bayesian_replica(X, prior, cfg, SeededRng(9).child("replica", 4))
    assert a.points.tobytes() == b.points.tobytes()
    assert a.weights.tobytes() == b.weights.tobytes()


def test_dimension_mismatch(setup):
    _, prior = setup
    with pytest.raises(ValueError):
        proper_bayesian_replica(np.zeros((5, 3)), prior, BootstrapConfig(), 0)
