import numpy as np
import pytest

from conftest import (
    explicit_power_edges,
    pgd_dual_oracle,
    prox_objective_direct,
)
from pgfl.admm import clamp_unit, pgfl, pgfl_objective
from pgfl.errors import InputError
from pgfl.graph import build_graph, chain_graph, star_graph

# frozen joint-solve oracle (1e5-iteration projected gradient on the explicit
# Cartesian-square graph): chain n=3, lam=0.3, path adjacency
_A3 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0.0]])
_P3 = np.array(
    [
        [0.30, 0.56, 0.30],
        [0.56, 0.56, 0.56],
        [0.30, 0.56, 0.30],
    ]
)
_OBJ3 = 2.072


def test_pgfl_frozen_joint_solve():
    res = pgfl(_A3, chain_graph(3), 0.3, stop_ratio=1e-4)
    assert np.allclose(res.P_hat, _P3, atol=1e-3)
    assert abs(res.objective - _OBJ3) / _OBJ3 <= 1e-3


def test_pgfl_matches_explicit_power_graph():
    rng = np.random.default_rng(29)
    for n, maker in ((3, chain_graph), (4, star_graph)):
        g = maker(n)
        A = np.triu((rng.random((n, n)) < 0.5).astype(float), 1)
        A = A + A.T
        for lam in (0.3, 1.0):
            res = pgfl(A, g, lam, stop_ratio=1e-4)
            pe = explicit_power_edges(n, g.edges)
            vec = pgd_dual_oracle(n * n, pe, A.ravel(), lam, iters=50000)
            f_hat = prox_objective_direct(pe, A.ravel(), res.P_hat.ravel(), lam)
            f_orc = prox_objective_direct(pe, A.ravel(), vec, lam)
            assert f_hat <= f_orc * (1 + 1e-3) + 1e-12


def test_pgfl_objective_definition():
    g = chain_graph(3)
    A = np.eye(3)
    P = np.zeros((3, 3))
    # ||A||_F^2 = 3, no variation in P
    assert pgfl_objective(A, P, g, 5.0) == 3.0
    P2 = np.arange(9, dtype=float).reshape(3, 3)
    ei, ej = g.edges[:, 0], g.edges[:, 1]
    tv = np.abs(P2[ei] - P2[ej]).sum() + np.abs(P2[:, ei] - P2[:, ej]).sum()
    assert np.isclose(pgfl_objective(A, P2, g, 2.0),
                      np.sum((A - P2) ** 2) + 2.0 * tv)


def test_pgfl_lam_zero_returns_input():
    rng = np.random.default_rng(3)
    A = rng.random((6, 6))
    res = pgfl(A, chain_graph(6), 0.0)
    assert np.allclose(res.P_hat, A, atol=1e-6)


def test_pgfl_huge_lam_returns_grand_mean():
    rng = np.random.default_rng(6)
    n = 8
    A = np.triu((rng.random((n, n)) < 0.5).astype(float), 1)
    A = A + A.T
    res = pgfl(A, chain_graph(n), 1e3 * n * n, stop_ratio=1e-5, max_iter=500)
    assert np.allclose(res.P_hat, A.mean(), atol=1e-3)


def test_pgfl_estimate_modes_agree_at_consensus():
    rng = np.random.default_rng(8)
    A = rng.random((5, 5))
    out = {}
    for mode in ("p", "qt", "average"):
        out[mode] = pgfl(A, chain_graph(5), 0.4, stop_ratio=1e-5,
                         estimate_mode=mode).P_hat
    assert np.allclose(out["p"], out["qt"], atol=1e-3)
    assert np.allclose(out["average"], 0.5 * (out["p"] + out["qt"]))


def test_pgfl_clamp():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    res = pgfl(A, chain_graph(2), 0.1, clamp=True)
    assert res.P_hat.min() >= 0.0
    assert res.P_hat.max() <= 1.0
    assert np.array_equal(clamp_unit(np.array([-0.2, 0.5, 1.7])),
                          np.array([0.0, 0.5, 1.0]))


def test_pgfl_threads_deterministic():
    rng = np.random.default_rng(12)
    A = rng.random((10, 10))
    g = chain_graph(10)
    r1 = pgfl(A, g, 0.5, threads=1)
    r2 = pgfl(A, g, 0.5, threads=2)
    assert np.allclose(r1.P_hat, r2.P_hat, atol=1e-9)
    assert r1.iterations == r2.iterations


def test_pgfl_result_diagnostics():
    rng = np.random.default_rng(14)
    A = rng.random((6, 6))
    res = pgfl(A, chain_graph(6), 0.5)
    assert res.converged
    assert res.iterations == len(res.residuals) == len(res.objectives)
    assert res.residuals[-1] >= 0.0
    assert np.isclose(res.objective,
                      pgfl_objective(A, res.P_hat, chain_graph(6), 0.5))


def test_pgfl_input_validation():
    g = chain_graph(3)
    A = np.zeros((3, 3))
    with pytest.raises(InputError):
        pgfl(np.zeros((3, 4)), g, 1.0)
    with pytest.raises(InputError):
        pgfl(np.zeros((4, 4)), g, 1.0)
    with pytest.raises(InputError):
        pgfl(A, g, -0.1)
    with pytest.raises(InputError):
        pgfl(A, g, 1.0, eta=0.0)
    with pytest.raises(InputError):
        pgfl(A, g, 1.0, stop_ratio=0.0)
    with pytest.raises(InputError):
        pgfl(A, g, 1.0, estimate_mode="median")
