"""Linear solvers behind the reconstruction and forward pipelines.

Thin, contract-checked layer over scipy.sparse: dense/sparse direct solves,
Jacobi-preconditioned Krylov methods, a diagonal fast path, and the 2x2-block
saddle solver for the reduced optimality system. Every solve verifies its
residual against the requested tolerance and raises LinearSolverError
otherwise.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import LinearSolverError

DENSE_DIRECT_LIMIT = 2000


@dataclass
class SolverOptions:
    method: str = "direct"        # direct | direct-dense | cg | minres | gmres
    tol: float = 1e-10
    maxiter: int = 20000
    preconditioner: str = "none"  # none | jacobi

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.maxiter < 1:
            raise ValueError("maxiter must be >= 1")


def _check_residual(matrix, x, rhs, tol, label):
    res = np.linalg.norm(matrix @ x - rhs)
    bound = tol * max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(res) or res > max(bound, 1e-13 * np.linalg.norm(rhs) + 1e-300):
        raise LinearSolverError(
            f"{label}: residual {res:.3e} exceeds {bound:.3e}")
    return x


def _diagonal_of(matrix):
    if sp.issparse(matrix):
        return matrix.diagonal()
    return np.diagonal(matrix)


def _is_diagonal(matrix):
    if sp.issparse(matrix):
        coo = matrix.tocoo()
        return np.all(coo.row == coo.col)
    return np.count_nonzero(matrix - np.diag(np.diagonal(matrix))) == 0


def solve(matrix, rhs, options: SolverOptions = None):
    """Solve matrix @ x = rhs per the selected method.

    Diagonal systems are solved componentwise regardless of method. Krylov
    methods require the appropriate symmetry (cg: SPD, minres: symmetric);
    this is a caller contract and is not re-verified here.
    """
    options = options or SolverOptions()
    rhs = np.asarray(rhs, dtype=float)
    n, m = matrix.shape
    if n != m or n != rhs.shape[0]:
        raise LinearSolverError(f"shape mismatch: matrix {matrix.shape}, rhs {rhs.shape}")
    if not np.any(rhs):
        return np.zeros_like(rhs)

    if _is_diagonal(matrix):
        diag = _diagonal_of(matrix)
        if np.any(diag == 0.0):
            raise LinearSolverError("structurally singular diagonal")
        return rhs / diag

    method = options.method
    if method == "direct":
        method = "direct-dense" if n <= DENSE_DIRECT_LIMIT else "direct-sparse"

    if method == "direct-dense":
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
        x = np.linalg.solve(dense, rhs)
        return _check_residual(matrix, x, rhs, options.tol, "direct-dense")
    if method == "direct-sparse":
        lu = spla.splu(sp.csc_matrix(matrix))
        x = lu.solve(rhs)
        return _check_residual(matrix, x, rhs, options.tol, "direct-sparse")

    precond = None
    if options.preconditioner == "jacobi":
        diag = _diagonal_of(matrix)
        if np.any(diag == 0.0):
            raise LinearSolverError("jacobi preconditioner: zero diagonal")
        inv = 1.0 / np.abs(diag)
        precond = spla.LinearOperator(matrix.shape, matvec=lambda v: inv * v)

    if method == "cg":
        x, info = spla.cg(matrix, rhs, rtol=options.tol, atol=0.0,
                          maxiter=options.maxiter, M=precond)
    elif method == "minres":
        x, info = spla.minres(matrix, rhs, rtol=options.tol,
                              maxiter=options.maxiter, M=precond)
    elif method == "gmres":
        x, info = spla.gmres(matrix, rhs, rtol=options.tol, atol=0.0,
                             maxiter=options.maxiter, M=precond)
    else:
        raise LinearSolverError(f"unknown method '{options.method}'")
    if info != 0:
        raise LinearSolverError(f"{method} did not converge (info={info})")
    return _check_residual(matrix, x, rhs, 10.0 * options.tol, method)


class FactorizedSolver:
    """Cached sparse LU for repeated solves with one (possibly ill-scaled) matrix."""

    def __init__(self, matrix, tol=1e-9):
        self.matrix = sp.csr_matrix(matrix)
        self.tol = tol
        self._lu = spla.splu(sp.csc_matrix(matrix))

    def solve(self, rhs, check=False):
        x = self._lu.solve(rhs)
        if check:
            _check_residual(self.matrix, x, rhs, self.tol, "factorized")
        return x


@dataclass
class ReducedSaddle:
    """Blocks of the reduced optimality system.

    Layout: [[diag(beta_ml), -dt_laplacian], [-dt_laplacian, -diag(schur_diag)]]
    where schur_diag = ml * ml / inner_diag with inner_diag the (positive)
    diagonal of the misfit+boundary penalty block.
    """

    beta_ml: np.ndarray
    dt_laplacian: sp.csr_matrix
    schur_diag: np.ndarray

    def __post_init__(self):
        if np.any(self.beta_ml <= 0.0):
            raise LinearSolverError("reduced saddle requires beta > 0")

    def matrix(self):
        a12 = -self.dt_laplacian
        return sp.bmat([[sp.diags(self.beta_ml), a12],
                        [a12, sp.diags(-self.schur_diag)]], format="csr")


def solve_block2(saddle: ReducedSaddle, rhs_p, rhs_q, options: SolverOptions = None):
    """Solve the symmetric indefinite reduced system for (p, q)."""
    options = options or SolverOptions(method="minres", tol=1e-10)
    n = len(saddle.beta_ml)
    rhs = np.concatenate([np.asarray(rhs_p, dtype=float), np.asarray(rhs_q, dtype=float)])
    mat = saddle.matrix()
    if options.method in ("direct", "direct-dense", "direct-sparse"):
        x = solve(mat, rhs, options)
    else:
        opts = SolverOptions(method="minres", tol=options.tol,
                             maxiter=options.maxiter, preconditioner="jacobi")
        x = solve(mat, rhs, opts)
    return x[:n], x[n:]
