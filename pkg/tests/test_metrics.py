import numpy as np
import pytest

from pgfl.errors import InputError
from pgfl.metrics import d1_matrix, dinf_matrix, knn_graph

# oracle values from the direct double-loop formulas for this adjacency
_A_SMALL = np.array(
    [
        [0, 1, 0, 1],
        [1, 0, 1, 0],
        [0, 1, 0, 0],
        [1, 0, 0, 0.0],
    ]
)
_D1_SMALL = np.array(
    [
        [0.0, 0.25, 0.0, 0.25],
        [0.25, 0.0, 0.25, 0.0],
        [0.0, 0.25, 0.0, 0.25],
        [0.25, 0.0, 0.25, 0.0],
    ]
)
_DINF_SMALL = _D1_SMALL  # coincide on this instance (single nonzero k term)


def _loop_metrics(A):
    """Direct double-loop evaluation of both squared metrics."""
    n = A.shape[0]
    d1 = np.zeros((n, n))
    dinf = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            vals = [
                abs(float((A[:, i] - A[:, j]) @ A[:, k]))
                for k in range(n)
                if k not in (i, j)
            ]
            d1[i, j] = sum(vals) / (n * (n - 2))
            dinf[i, j] = max(vals) / n
    return d1, dinf


def test_d1_frozen_small_case():
    assert np.allclose(d1_matrix(_A_SMALL).entries, _D1_SMALL)


def test_dinf_frozen_small_case():
    assert np.allclose(dinf_matrix(_A_SMALL).entries, _DINF_SMALL)


def test_metrics_match_loop_oracle_random():
    rng = np.random.default_rng(11)
    for _ in range(5):
        n = int(rng.integers(4, 9))
        A = (rng.random((n, n)) < 0.5).astype(float)
        A = np.triu(A, 1)
        A = A + A.T
        d1o, dinfo = _loop_metrics(A)
        assert np.allclose(d1_matrix(A).entries, d1o)
        assert np.allclose(dinf_matrix(A).entries, dinfo)


def test_metric_matrices_symmetric_zero_diagonal():
    rng = np.random.default_rng(5)
    A = (rng.random((7, 7)) < 0.4).astype(float)
    A = np.triu(A, 1)
    A = A + A.T
    for D in (d1_matrix(A), dinf_matrix(A)):
        E = D.entries
        assert np.allclose(E, E.T)
        assert np.allclose(np.diag(E), 0.0)
        assert E.min() >= 0.0


def test_metrics_reject_bad_shapes():
    with pytest.raises(InputError):
        d1_matrix(np.zeros((3, 4)))
    with pytest.raises(InputError):
        d1_matrix(np.zeros((2, 2)))


def test_knn_graph_degree_and_symmetry():
    rng = np.random.default_rng(7)
    A = (rng.random((12, 12)) < 0.4).astype(float)
    A = np.triu(A, 1)
    A = A + A.T
    D = d1_matrix(A)
    for K in (1, 2, 3):
        g = knn_graph(D, K)
        deg = np.zeros(12, dtype=int)
        for i, j in g.edges:
            deg[i] += 1
            deg[j] += 1
        assert (deg >= K).all()


def test_knn_graph_deterministic_tie_break():
    # all distances equal: K=1 must pick the smallest index everywhere
    n = 5
    E = np.ones((n, n)) - np.eye(n)

    class Fake:
        entries = E

    Fake.n = n
    g = knn_graph(Fake, 1)
    # vertex 0 picks 1; every other vertex picks 0
    assert g.edges.tolist() == [[0, 1], [0, 2], [0, 3], [0, 4]]


def test_knn_graph_rejects_bad_k():
    D = d1_matrix(_A_SMALL)
    with pytest.raises(InputError):
        knn_graph(D, 0)
    with pytest.raises(InputError):
        knn_graph(D, 4)


def test_distance_csv(tmp_path):
    D = d1_matrix(_A_SMALL)
    p = tmp_path / "d.csv"
    D.to_csv(p)
    back = np.loadtxt(p, delimiter=",")
    assert np.allclose(back, D.entries)
