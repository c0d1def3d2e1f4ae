import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbclust.kmeans import KMeansConfig, KMeansError, assign_nearest, kmeans, lloyd, wss


def _best_bipartition(X):
    """Brute force: the minimum-WSS split of X into two non-empty groups."""
    n = len(X)
    best = None
    for mask in itertools.product([0, 1], repeat=n):
        m = np.array(mask)
        if m.min() == m.max():
            continue
        cost = sum(((X[m == g] - X[m == g].mean(axis=0)) ** 2).sum() for g in (0, 1))
        if best is None or cost < best[0]:
            best = (cost, m)
    return best


def test_small_example_matches_enumeration():
    X = np.array([[0, 0], [0, 0.1], [10, 10], [10, 10.1]])
    cost, mask = _best_bipartition(X)
    res = kmeans(X, KMeansConfig(2), rng=0)
    assert cost == pytest.approx(0.01)
    assert res.wss == pytest.approx(cost, rel=1e-12)
    assert res.labels[0] == res.labels[1] != res.labels[2] == res.labels[3]


def test_k_equals_n_gives_zero_wss():
    X = np.random.default_rng(0).normal(size=(6, 2))
    res = kmeans(X, KMeansConfig(6), rng=1)
    assert res.wss == 0.0
    assert sorted(res.labels.tolist()) == list(range(6))


def test_wss_hand_values():
    assert wss([[1.0, 1.0]], [0], [[1.0, 1.0]]) == 0.0
    assert wss([[0.0, 0.0], [2.0, 0.0]], [0, 0], [[1.0, 0.0]]) == 2.0
    X = np.random.default_rng(1).normal(size=(10, 3))
    lab = np.arange(10) % 2
    C = np.array([X[lab == 0].mean(0), X[lab == 1].mean(0)])
    w = np.random.default_rng(2).random(10)
    assert wss(X, lab, C, 2 * w) == pytest.approx(2 * wss(X, lab, C, w))
    with pytest.raises(KMeansError):
        wss(X, lab + 5, C)


def test_assign_nearest_ties_and_vertices():
    C = np.array([[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]])
    assert assign_nearest([[5.0, 5.0]], C).tolist() == [2]
    assert assign_nearest([[1.0, 0.0]], C).tolist() == [0]


def test_assign_nearest_brute_force():
    gen = np.random.default_rng(7)
    X = gen.normal(size=(50, 2))
    C = gen.normal(size=(4, 2))
    expected = []
    for x in X:
        d = [float(np.sum((x - c) ** 2)) for c in C]
        expected.append(d.index(min(d)))
    assert assign_nearest(X, C).tolist() == expected


def test_iris_known_contingency(iris, iris_truth):
    res = kmeans(iris, KMeansConfig(3, n_restarts=25), rng=0)
    table = np.zeros((3, 3), int)
    np.add.at(table, (iris_truth, res.labels), 1)
    # relabel predicted clusters by the species they mostly hold
    ordered = table[:, np.argmax(table, axis=1)]
    assert ordered.tolist() == [[50, 0, 0], [0, 48, 2], [0, 14, 36]]
    assert res.wss == pytest.approx(78.851441426146, rel=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_integer_weights_match_duplicated_rows(seed):
    gen = np.random.default_rng(seed)
    X = gen.normal(size=(15, 2))
    counts = gen.integers(1, 4, size=15)
    K = int(gen.integers(2, 5))
    init = X[gen.choice(15, K, replace=False)]
    cfg = KMeansConfig(K, init=init)
    weighted = kmeans(X, cfg, weights=counts)
    dup = kmeans(np.repeat(X, counts, axis=0), cfg)
    np.testing.assert_array_equal(np.repeat(weighted.labels, counts), dup.labels)
    np.testing.assert_allclose(weighted.centroids, dup.centroids, rtol=0, atol=1e-12)


def test_monotone_wss():
    gen = np.random.default_rng(5)
    X = gen.normal(size=(200, 2))
    w = gen.dirichlet(np.ones(200))
    hist = []
    lloyd(X, w, X[:6], max_iter=100, tol=0.0, history=hist)
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_weight_rescaling_invariance():
    gen = np.random.default_rng(8)
    X = gen.normal(size=(60, 2))
    w = gen.random(60) + 0.1
    cfg = KMeansConfig(3, n_restarts=3)
    a = kmeans(X, cfg, weights=w, rng=4)
    b = kmeans(X, cfg, weights=8.0 * w, rng=4)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_allclose(a.centroids, b.centroids, rtol=1e-12)


def test_deterministic_single_restart():
    X = np.random.default_rng(1).normal(size=(40, 2))
    cfg = KMeansConfig(3, n_restarts=1)
    assert kmeans(X, cfg, rng=3) == kmeans(X, cfg, rng=3)


def test_row_permutation_equivariance():
    gen = np.random.default_rng(2)
    X = np.vstack([gen.normal(size=(20, 2)), gen.normal(size=(20, 2)) + 6])
    init = np.array([[0.0, 0.0], [6.0, 6.0]])
    perm = gen.permutation(40)
    a = kmeans(X, KMeansConfig(2, init=init))
    b = kmeans(X[perm], KMeansConfig(2, init=init))
    np.testing.assert_array_equal(a.labels[perm], b.labels)
    assert a.wss == pytest.approx(b.wss, rel=1e-12)


def test_random_points_init():
    X = np.random.default_rng(3).normal(size=(30, 2))
    res = kmeans(X, KMeansConfig(3, init="random_points", n_restarts=4), rng=0)
    assert res.sizes().min() >= 1


def test_errors():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(KMeansError, match="distinct"):
        kmeans(X, KMeansConfig(3))
    with pytest.raises(KMeansError, match="zero"):
        kmeans(X, KMeansConfig(1), weights=[0.0, 0.0, 0.0])
    with pytest.raises(KMeansError):
        KMeansConfig(0)
    with pytest.raises(KMeansError):
        KMeansConfig(2, n_restarts=0)


def test_empty_cluster_repair():
    # the third starting centroid is far from every point
    X = np.array([[0.0], [0.1], [0.2], [5.0], [5.1]])
    res = lloyd(X, np.ones(5), np.array([[0.0], [5.0], [100.0]]))
    assert np.bincount(res.labels, minlength=3).min() >= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_result_invariants(seed, K):
    gen = np.random.default_rng(seed)
    X = gen.normal(size=(25, 2))
    w = gen.random(25) + 0.01
    res = kmeans(X, KMeansConfig(K, n_restarts=2), weights=w, rng=seed)
    assert set(res.labels.tolist()) == set(range(K))
    assert res.wss == pytest.approx(wss(X, res.labels, res.centroids, w), rel=1e-9, abs=1e-12)
