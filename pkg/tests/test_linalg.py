"""Sparse linear solver contracts."""

import numpy as np
import pytest
import scipy.sparse as sp

from bathyrec.errors import LinearSolverError
from bathyrec.fem import assemble_operators
from bathyrec.linalg import (FactorizedSolver, ReducedSaddle, SolverOptions,
                             solve, solve_block2)
from bathyrec.mesh import build_structured_mesh

rng = np.random.default_rng(11)


def spd_matrix(n, seed=0):
    r = np.random.default_rng(seed)
    a = r.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


def test_identity_returns_rhs():
    rhs = rng.standard_normal(7)
    assert np.allclose(solve(sp.eye(7, format="csr"), rhs), rhs)


def test_diagonal_fast_path():
    diag = np.array([2.0, 4.0, -0.5])
    rhs = np.array([1.0, 2.0, 3.0])
    x = solve(sp.diags(diag).tocsr(), rhs)
    assert np.allclose(x, rhs / diag)


def test_singular_diagonal_raises():
    with pytest.raises(LinearSolverError):
        solve(sp.diags([1.0, 0.0, 2.0]).tocsr(), np.ones(3))


def test_dense_direct_matches_oracle():
    a = spd_matrix(20, seed=3)
    rhs = rng.standard_normal(20)
    x = solve(a, rhs, SolverOptions(method="direct-dense", tol=1e-10))
    assert np.abs(x - np.linalg.solve(a, rhs)).max() <= 1e-10


@pytest.mark.parametrize("method", ["cg", "minres", "gmres"])
def test_krylov_residual_contract(method):
    a = sp.csr_matrix(spd_matrix(30, seed=5))
    rhs = rng.standard_normal(30)
    opts = SolverOptions(method=method, tol=1e-10, preconditioner="jacobi")
    x = solve(a, rhs, opts)
    res = np.linalg.norm(a @ x - rhs) / np.linalg.norm(rhs)
    assert res <= 1e-9


def test_krylov_nonconvergence_raises():
    a = sp.csr_matrix(spd_matrix(40, seed=7))
    with pytest.raises(LinearSolverError):
        solve(a, rng.standard_normal(40), SolverOptions(method="cg", tol=1e-14,
                                                        maxiter=1))


def test_shape_mismatch_raises():
    with pytest.raises(LinearSolverError):
        solve(sp.eye(3, format="csr"), np.ones(4))


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(tol=0.0)
    with pytest.raises(ValueError):
        SolverOptions(maxiter=0)


def test_factorized_solver_reuse():
    a = sp.csr_matrix(spd_matrix(25, seed=9))
    f = FactorizedSolver(a)
    for _ in range(3):
        rhs = rng.standard_normal(25)
        x = f.solve(rhs, check=True)
        assert np.linalg.norm(a @ x - rhs) <= 1e-9 * np.linalg.norm(rhs)


class TestReducedSaddle:
    def setup_method(self):
        ops = assemble_operators(build_structured_mesh((0.0, 1.0), 4))
        self.ops = ops
        self.beta = 1e-3
        self.dt = 0.05
        alpha, gamma = 1.0, 10.0
        self.dinner = alpha * ops.ml + gamma * ops.mgamma
        self.saddle = ReducedSaddle(beta_ml=self.beta * ops.ml,
                                    dt_laplacian=self.dt * ops.laplacian,
                                    schur_diag=ops.ml ** 2 / self.dinner)

    def test_homogeneous_rhs(self):
        n = self.ops.n_nodes
        p, q = solve_block2(self.saddle, np.zeros(n), np.zeros(n))
        assert np.abs(p).max() == 0.0 and np.abs(q).max() == 0.0

    def test_matches_dense_kkt_oracle(self):
        # oracle: monolithic dense solve of the full 3x3 block system
        ops = self.ops
        n = ops.n_nodes
        ml = np.diag(ops.ml)
        lap = ops.laplacian.toarray()
        kkt = np.block([
            [np.diag(self.dinner), np.zeros((n, n)), ml],
            [np.zeros((n, n)), self.beta * ml, -self.dt * lap],
            [ml, -self.dt * lap, np.zeros((n, n))]])
        z1 = rng.standard_normal(n)
        z3 = rng.standard_normal(n)
        sol = np.linalg.solve(kkt, np.concatenate([z1, np.zeros(n), z3]))
        b_ref, p_ref, q_ref = sol[:n], sol[n:2 * n], sol[2 * n:]
        rhs_q = z3 - ops.ml * (z1 / self.dinner)
        p, q = solve_block2(self.saddle, np.zeros(n), rhs_q,
                            SolverOptions(method="minres", tol=1e-12))
        assert np.abs(p - p_ref).max() <= 1e-10 * max(1, np.abs(p_ref).max())
        assert np.abs(q - q_ref).max() <= 1e-10 * max(1, np.abs(q_ref).max())
        b = (z1 - ops.ml * q) / self.dinner
        assert np.abs(b - b_ref).max() <= 1e-10 * max(1, np.abs(b_ref).max())

    def test_single_node_decouples(self):
        # L = 0 on a single segment's lone interior system collapses: p = 0
        saddle = ReducedSaddle(beta_ml=np.array([2.0]),
                               dt_laplacian=sp.csr_matrix((1, 1)),
                               schur_diag=np.array([0.5]))
        p, q = solve_block2(saddle, np.zeros(1), np.array([1.0]))
        assert p[0] == pytest.approx(0.0)
        assert q[0] == pytest.approx(-2.0)

    def test_beta_positive_required(self):
        with pytest.raises(LinearSolverError):
            ReducedSaddle(beta_ml=np.array([0.0]),
                          dt_laplacian=sp.csr_matrix((1, 1)),
                          schur_diag=np.array([1.0]))
