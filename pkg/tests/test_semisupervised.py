import numpy as np
import pytest
import scipy.sparse as sp

from copdsev.core import SeverityLabel
from copdsev.errors import NumericError
from copdsev.semisupervised import (
    AffinityConfig,
    build_affinity,
    closed_form_spreading,
    label_propagation,
    label_spreading,
)

from oracles import propagation_by_loops

U = -1
TIGHT = AffinityConfig(kernel="rbf", tol=1e-13, max_iter=100000)


def dense(W):
    return W.toarray() if sp.issparse(W) else np.asarray(W)


def normalized(F):
    return F / F.sum(axis=1, keepdims=True)


def clusters(n_per=8, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-5, 0.3, (n_per, 2)), rng.normal(5, 0.3, (n_per, 2))])
    truth = np.r_[np.zeros(n_per, int), np.ones(n_per, int)]
    seeds = np.full(2 * n_per, U)
    seeds[0], seeds[n_per] = 0, 1
    return X, truth, seeds


# ---------------------------------------------------------------- affinity

def test_identical_points_rbf_ones_off_diagonal():
    W = build_affinity(np.zeros((4, 3)), AffinityConfig(kernel="rbf"))
    np.testing.assert_array_equal(W, 1.0 - np.eye(4))


@pytest.mark.parametrize("kernel", ["rbf", "knn"])
def test_affinity_symmetric_nonnegative(kernel):
    X = np.random.default_rng(1).normal(size=(60, 4))
    W = dense(build_affinity(X, AffinityConfig(kernel=kernel, k=3)))
    np.testing.assert_array_equal(W, W.T)
    assert (W >= 0).all() and (np.diag(W) == 0).all()


def test_rbf_entry_formula():
    X = np.array([[0.0, 0.0], [1.0, 2.0]])
    W = build_affinity(X, AffinityConfig(kernel="rbf", gamma=0.3))
    assert W[0, 1] == pytest.approx(np.exp(-0.3 * 5.0), rel=1e-15)


def test_collinear_knn_one():
    # Nearest of 0 is 1, of 1 is 0, of 3 is 1: edges 0-1 and 1-3.
    X = np.array([[0.0], [1.0], [3.0]])
    W = dense(build_affinity(X, AffinityConfig(kernel="knn", k=1)))
    np.testing.assert_array_equal(W, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])


def test_affinity_errors():
    with pytest.raises(ValueError):
        build_affinity(np.zeros((1, 2)))
    with pytest.raises(ValueError):
        build_affinity(np.array([[0.0], [np.nan]]))
    with pytest.raises(ValueError):
        build_affinity(np.zeros((3, 2)), AffinityConfig(kernel="rbf", gamma=-1.0))


@pytest.mark.parametrize("kwargs", [{"alpha": 0.0}, {"alpha": 1.0}, {"tol": 0.0}, {"k": 0}, {"kernel": "cosine"}])
def test_affinity_config_validation(kwargs):
    with pytest.raises(ValueError):
        AffinityConfig(**kwargs)


# -------------------------------------------------------------- propagation

def test_fully_labeled_is_a_fixed_point():
    X = np.random.default_rng(2).normal(size=(10, 2))
    seeds = [0, 1] * 5
    res = label_propagation(X, seeds)
    assert [int(l) for l in res.labels] == seeds
    np.testing.assert_array_equal(res.class_distributions, np.eye(2)[seeds])


@pytest.mark.parametrize("kernel", ["rbf", "knn"])
def test_two_clusters_adopt_their_seed(kernel):
    X, truth, seeds = clusters()
    res = label_propagation(X, seeds, AffinityConfig(kernel=kernel, k=3))
    assert [int(l) for l in res.labels] == truth.tolist()


def test_matches_plain_loop_iteration():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(12, 2))
    seeds = [0, 1] + [U] * 10
    W = build_affinity(X, AffinityConfig(kernel="rbf"))
    res = label_propagation(X, seeds, TIGHT, W=W)
    expected = propagation_by_loops(W.tolist(), seeds)
    np.testing.assert_allclose(res.class_distributions, normalized(expected), atol=1e-9)


def test_isolated_node_gets_prior_and_mild():
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 0] = W[1, 2] = W[2, 1] = 1.0
    res = label_propagation(None, [0, U, 1, U], W=W)
    np.testing.assert_array_equal(res.class_distributions[3], [0.5, 0.5])
    assert res.labels[3] is SeverityLabel.MILD_TO_MODERATE
    # Node 1 sits between one seed of each class: an exact tie, also mild.
    assert res.labels[1] is SeverityLabel.MILD_TO_MODERATE


def test_seeds_clamped():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 3))
    seeds = rng.integers(-1, 2, 40)
    seeds[:2] = [0, 1]
    res = label_propagation(X, seeds)
    lab = seeds >= 0
    assert (np.array([int(l) for l in res.labels])[lab] == seeds[lab]).all()


def test_unseeded_class_rejected():
    with pytest.raises(ValueError, match="class unseeded"):
        label_propagation(np.zeros((3, 1)) + np.arange(3)[:, None], [0, U, U])


@pytest.mark.parametrize("method", [label_propagation, label_spreading])
def test_permutation_equivariance(method):
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 3))
    seeds = np.array([0, 1] * 4 + [U] * 22)
    perm = rng.permutation(30)
    cfg = AffinityConfig(kernel="rbf", tol=1e-12, max_iter=10000)
    a = method(X, seeds, cfg)
    b = method(X[perm], seeds[perm], cfg)
    np.testing.assert_allclose(b.class_distributions, a.class_distributions[perm], atol=1e-10)
    assert [a.labels[i] for i in perm] == list(b.labels)


def test_distributions_row_stochastic():
    X, _, seeds = clusters(20, seed=6)
    for method in (label_propagation, label_spreading):
        res = method(X, seeds)
        np.testing.assert_allclose(res.class_distributions.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_array_equal(res.confidence, res.class_distributions.max(axis=1))
        assert SeverityLabel.UNLABELED not in res.labels


# ---------------------------------------------------------------- spreading

def test_small_alpha_keeps_labeled_rows():
    X, _, seeds = clusters()
    res = label_spreading(X, seeds, AffinityConfig(kernel="rbf", alpha=1e-6))
    assert int(res.labels[0]) == 0 and int(res.labels[8]) == 1
    np.testing.assert_allclose(res.class_distributions[0], [1.0, 0.0], atol=1e-5)


def test_two_clusters_spreading_agrees_with_propagation():
    X, truth, seeds = clusters()
    cfg = AffinityConfig(kernel="knn", k=3)
    assert label_spreading(X, seeds, cfg).labels == label_propagation(X, seeds, cfg).labels


def test_three_node_chain_closed_form():
    W = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    Y = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    F = closed_form_spreading(W, Y, 0.5)
    # Degrees (1, 2, 1); an explicit inverse is the independent check.
    d = np.array([1.0, 2.0, 1.0]) ** -0.5
    S = d[:, None] * W * d[None, :]
    np.testing.assert_allclose(F, np.linalg.inv(np.eye(3) - 0.5 * S) @ Y, atol=1e-14)
    res = label_spreading(None, [0, U, 1], AffinityConfig(alpha=0.5, tol=1e-14, max_iter=10000), W=W)
    np.testing.assert_allclose(res.class_distributions, normalized(F), atol=1e-6)


def test_single_node_closed_form():
    F = closed_form_spreading(np.zeros((1, 1)), np.array([[0.0, 1.0]]), 0.3)
    np.testing.assert_array_equal(F, [[0.0, 1.0]])


def test_alpha_near_one_smooths_connected_graph():
    rng = np.random.default_rng(7)
    A = rng.uniform(0.1, 1.0, (12, 12))
    W = np.triu(A, 1) + np.triu(A, 1).T
    Y = np.zeros((12, 2))
    Y[0, 0] = Y[1, 1] = Y[2, 1] = 1.0
    P = normalized(closed_form_spreading(W, Y, 0.99999))
    assert np.ptp(P[:, 1]) < 1e-3


def test_closed_form_limits():
    with pytest.raises(ValueError):
        closed_form_spreading(np.zeros((201, 201)), np.zeros((201, 2)), 0.5)
    W = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(NumericError):
        closed_form_spreading(W, np.eye(2), 1.0)


def test_iteration_count_and_convergence_flag():
    X, _, seeds = clusters()
    capped = label_spreading(X, seeds, AffinityConfig(kernel="rbf", tol=1e-15, max_iter=3))
    assert capped.iterations == 3 and not capped.converged
    done = label_spreading(X, seeds, AffinityConfig(kernel="rbf"))
    assert done.converged and done.iterations < 1000
