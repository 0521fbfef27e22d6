import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rmc.core import ConfigurationError, RelationalData
from rmc.graphs import (
    HEAT_LADDER,
    ManifoldBank,
    build_bank,
    combine_laplacians,
    knn_affinity,
    laplacian,
    tau_heuristic,
)

from _factories import random_laplacian


def assert_valid_laplacian(lap, rng, tol=1e-9, probes=100):
    dense = lap.toarray()
    np.testing.assert_allclose(dense, dense.T, atol=0)
    np.testing.assert_allclose(dense.sum(axis=1), 0.0, atol=tol)
    for _ in range(probes):
        x = rng.normal(size=lap.n)
        assert x @ dense @ x >= -tol * (x @ x)


def brute_tau(x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 1:
        x = x.T
    n = x.shape[0]
    total = sum(np.sum((x[i] - x[j]) ** 2) for i in range(n) for j in range(n))
    return n * n / total


def test_knn_collinear_points():
    w = knn_affinity(np.array([[0.0], [1.0], [2.0]]), k=1, scheme="binary").w.toarray()
    expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    np.testing.assert_array_equal(w, expected)


def test_knn_ties_go_to_lower_index():
    # point 1 is equidistant from 0 and 2; its single neighbour must be 0
    w = knn_affinity(np.array([[0.0], [1.0], [2.0], [10.0]]), k=1).w.toarray()
    assert w[1, 0] == 1 and w[2, 1] == 1
    assert w[3, 2] == 1


def test_heat_identical_points_weight_one():
    pts = np.ones((5, 3))
    w = knn_affinity(pts, k=2, scheme="heat", bandwidth=0.37).w
    assert np.all(w.data == 1.0)
    assert w.nnz >= 5 * 2


def test_cosine_orthogonal_vectors_zero():
    w = knn_affinity(np.eye(4), k=2, scheme="cosine").w
    assert w.nnz == 0


def test_cosine_zero_vector_warns():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    with pytest.warns(RuntimeWarning):
        w = knn_affinity(pts, k=2, scheme="cosine").w.toarray()
    assert np.all(w[0] == 0.0)


def test_knn_errors():
    pts = np.random.default_rng(0).uniform(size=(4, 2))
    with pytest.raises(ConfigurationError):
        knn_affinity(pts, k=4)
    with pytest.raises(ConfigurationError):
        knn_affinity(pts, k=1, scheme="heat")
    with pytest.raises(ConfigurationError):
        knn_affinity(pts, k=1, scheme="binary", bandwidth=1.0)


@pytest.mark.parametrize("scheme,bw", [("binary", None), ("heat", 0.5), ("cosine", None)])
def test_affinity_invariants(scheme, bw):
    rng = np.random.default_rng(1)
    pts = rng.uniform(size=(30, 4))
    w = knn_affinity(pts, k=4, scheme=scheme, bandwidth=bw).w.toarray()
    assert np.array_equal(w, w.T)
    assert np.all(np.diag(w) == 0) and w.min() >= 0 and w.max() <= 1
    if scheme == "binary":
        assert set(np.unique(w)) <= {0.0, 1.0}
    # every object keeps at least its k out-edges
    assert np.all((w > 0).sum(axis=1) >= 4)


def test_knn_permutation_equivariance():
    rng = np.random.default_rng(2)
    pts = rng.uniform(size=(20, 3))
    perm = rng.permutation(20)
    w = knn_affinity(pts, 3, "heat", 0.3).w.toarray()
    wp = knn_affinity(pts[perm], 3, "heat", 0.3).w.toarray()
    np.testing.assert_array_equal(wp, w[np.ix_(perm, perm)])


def test_tau_examples():
    assert tau_heuristic(np.array([[0.0], [1.0]])) == pytest.approx(2.0, rel=1e-15)
    assert tau_heuristic(np.array([[0.0], [0.0], [1.0], [1.0]])) == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(ConfigurationError):
        tau_heuristic(np.ones((3, 2)))


@given(arrays(np.float64, (6, 3), elements=st.floats(-10, 10)), st.floats(0.1, 10))
def test_tau_matches_pairwise_sum_and_scales(x, c):
    if np.ptp(x, axis=0).max() < 1e-3:
        return
    tau = tau_heuristic(x)
    assert tau == pytest.approx(brute_tau(x), rel=1e-9)
    assert tau_heuristic(c * x) == pytest.approx(tau / c**2, rel=1e-9)


def test_laplacian_definition():
    rng = np.random.default_rng(3)
    lap = random_laplacian(rng, 12)
    w = lap.w.toarray()
    np.testing.assert_allclose(lap.toarray(), np.diag(w.sum(axis=1)) - w, atol=0)
    np.testing.assert_allclose(lap.d, w.sum(axis=1))


def test_build_bank_contract():
    rng = np.random.default_rng(4)
    r = RelationalData(rng.uniform(size=(25, 18)))
    bank = build_bank(r, k=5)
    assert len(bank.sample_laplacians) == len(bank.feature_laplacians) == 11
    labels = bank.labels()
    assert len(set(labels)) == 11
    assert labels[9:] == ["binary", "cosine"]
    assert all(lap.n == 18 for lap in bank.sample_laplacians)
    assert all(lap.n == 25 for lap in bank.feature_laplacians)
    tau_s = tau_heuristic(r.r12.T)
    tau_f = tau_heuristic(r.r12)
    for prov, (_, factor) in zip(bank.provenance[:9], HEAT_LADDER):
        assert prov["sample_bandwidth"] == pytest.approx(tau_s * factor)
        assert prov["feature_bandwidth"] == pytest.approx(tau_f * factor)
    bws = [p["sample_bandwidth"] for p in bank.provenance[:9]]
    assert bws == sorted(bws)
    for lap in bank.sample_laplacians + bank.feature_laplacians:
        assert_valid_laplacian(lap, rng, probes=20)


def test_bank_validation():
    rng = np.random.default_rng(5)
    with pytest.raises(ConfigurationError):
        ManifoldBank([random_laplacian(rng, 4)], [], [])


def test_combine_one_hot_returns_candidate():
    rng = np.random.default_rng(6)
    laps = [random_laplacian(rng, 8) for _ in range(3)]
    assert combine_laplacians(laps, [0.0, 1.0, 0.0]) is laps[1]


def test_combine_identical_is_idempotent():
    rng = np.random.default_rng(7)
    lap = random_laplacian(rng, 8)
    out = combine_laplacians([lap, lap], [0.5, 0.5])
    np.testing.assert_allclose(out.toarray(), lap.toarray(), atol=1e-15)


def test_combine_linearity_and_closure():
    rng = np.random.default_rng(8)
    laps = [random_laplacian(rng, 10) for _ in range(5)]
    for _ in range(20):
        mu = rng.dirichlet(np.ones(5))
        comb = combine_laplacians(laps, mu)
        x = rng.normal(size=10)
        expected = sum(m * (x @ (lap.l @ x)) for m, lap in zip(mu, laps))
        assert x @ (comb.l @ x) == pytest.approx(expected, rel=1e-10)
        assert_valid_laplacian(comb, rng, probes=10)
        np.testing.assert_allclose(comb.d, sum(m * lap.d for m, lap in zip(mu, laps)), atol=1e-12)


def test_combine_rejects_off_simplex():
    rng = np.random.default_rng(9)
    laps = [random_laplacian(rng, 5) for _ in range(2)]
    with pytest.raises(ConfigurationError):
        combine_laplacians(laps, [0.7, 0.7])
    with pytest.raises(ConfigurationError):
        combine_laplacians(laps, [1.0])
