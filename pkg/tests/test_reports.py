import math

import numpy as np
import pytest

from bbclust.ensemble import MembershipMatrix, bbc
from bbclust.kmeans import KMeansConfig, kmeans
from bbclust.prior import elicit_prior
from bbclust.reports import (
    aligned_contingency,
    contingency,
    curves_csv,
    load_report,
    membership_csv,
    read_membership_csv,
    save_report,
    simplex_coordinates,
)
from bbclust.selection import select_k


@pytest.fixture
def small_bbc(two_blobs):
    X, _ = two_blobs
    return bbc(X, 2, KMeansConfig(2, n_restarts=2), B=5, rng=0)


def test_json_roundtrips(tmp_path, small_bbc, two_blobs):
    X, _ = two_blobs
    res = kmeans(X, KMeansConfig(2), rng=0)
    objects = [
        small_bbc,
        small_bbc.membership,
        small_bbc.prior,
        res,
        elicit_prior(X, res, 2.0),
        select_k(X, [2, 3], [1.0], B=3, kmeans_cfg=KMeansConfig(2, n_restarts=1), rng=0),
    ]
    for i, obj in enumerate(objects):
        path = tmp_path / f"r{i}.json"
        save_report(obj, path)
        assert load_report(path) == obj
        first = path.read_bytes()
        save_report(load_report(path), path)
        assert path.read_bytes() == first


def test_membership_csv_shape(tmp_path):
    m = MembershipMatrix(np.array([[1.0, 0.0], [0.25, 0.75], [0.0, 1.0]]), np.array([4, 4, 4]))
    text = membership_csv(m)
    lines = text.splitlines()
    assert lines[0] == "id,u_0,u_1"
    assert len(lines) == 4 and all(len(l.split(",")) == 3 for l in lines)
    path = tmp_path / "m.csv"
    save_report(m, path, "csv")
    ids, back = read_membership_csv(path)
    assert ids.tolist() == [0, 1, 2]
    np.testing.assert_array_equal(back.u, m.u)


def test_empty_membership_csv():
    m = MembershipMatrix(np.zeros((0, 3)), np.zeros(0, dtype=int))
    assert membership_csv(m) == "id,u_0,u_1,u_2\n"


def test_curves_csv_roundtrip(tmp_path, two_blobs):
    X, _ = two_blobs
    rep = select_k(X, [2, 3], [1.0], B=3, kmeans_cfg=KMeansConfig(2, n_restarts=1), rng=0)
    path = tmp_path / "c.csv"
    save_report(rep, path, "csv")
    rows = load_report(path, "csv")
    assert path.read_text().splitlines()[0] == "dataset,K,s,measure,value"
    assert {r[1] for r in rows} == {2, 3}
    assert {r[3] for r in rows} >= {"mean_entropy", "worst_pair"}
    assert curves_csv([]) == "dataset,K,s,measure,value\n"


def test_bad_formats(tmp_path):
    with pytest.raises(ValueError):
        save_report(MembershipMatrix(np.eye(2), np.ones(2, int)), tmp_path / "x", "xml")
    with pytest.raises(TypeError):
        save_report(object(), tmp_path / "x")
    bad = tmp_path / "bad.csv"
    bad.write_text("id,u_0,u_1\n0,1.0\n")
    with pytest.raises(ValueError, match="line 2"):
        read_membership_csv(bad)


def test_simplex_vertices_and_centre():
    xy = simplex_coordinates(np.vstack([np.eye(3), np.full((1, 3), 1 / 3)]))
    np.testing.assert_allclose(xy[:3], [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]], atol=1e-15)
    np.testing.assert_allclose(xy[3], [0.5, math.sqrt(3) / 6], atol=1e-15)
    with pytest.raises(ValueError, match="3"):
        simplex_coordinates(np.full((2, 4), 0.25))


def test_contingency_tables():
    truth = np.array([0, 0, 1, 1, 2, 2])
    pred = np.array([2, 2, 0, 0, 1, 0])
    assert contingency(truth, pred).tolist() == [[0, 0, 2], [2, 0, 0], [1, 1, 0]]
    table, relabelled = aligned_contingency(truth, pred, 3)
    assert np.trace(table) == 5
    assert relabelled.tolist() == [0, 0, 1, 1, 2, 1]
