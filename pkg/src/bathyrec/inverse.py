"""Per-time-step bathymetry reconstruction machinery.

Implements the affine solution operator b = T p + r of the discrete
bathymetry evolution equation, the quadratic objective with misfit/Tikhonov/
boundary/damping terms, its KKT and reduced saddle systems, and the
solution-dependent TVD diffusion variant. The sparsity-promoting dual steps
live in l1dual.py; the time loop in timeloop.py.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import OptimizerError
from .fem import FemOperators, _gauss_points, _shape_gradients, _CORNERS
from .linalg import FactorizedSolver, ReducedSaddle, SolverOptions, solve_block2
from .mesh import INFLOW


@dataclass
class RegWeights:
    """Weights of the objective terms (0 disables a term)."""

    alpha: float = 1.0    # data misfit
    beta: float = 0.0     # flux-potential Tikhonov
    gamma: float = 0.0    # boundary bathymetry penalty
    delta: float = 0.0    # step damping
    epsilon: float = 0.0  # TVD strength
    zeta: float = 0.0     # TVD smoothing
    kappa: float = 0.0    # L1 dual bound
    nu: float = 0.0       # dual Tikhonov

    def require_oc(self):
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise OptimizerError(
                f"optimal-control step requires alpha, beta > 0 "
                f"(got alpha={self.alpha}, beta={self.beta})")

    def require_tvd(self):
        self.require_oc()
        if self.epsilon <= 0.0 or self.zeta <= 0.0:
            raise OptimizerError("TVD step requires epsilon > 0 and zeta > 0")

    def require_l1(self):
        self.require_oc()
        if self.kappa <= 0.0:
            raise OptimizerError("L1 step requires kappa > 0")


@dataclass
class StepData:
    """Inputs of one reconstruction step."""

    bn: np.ndarray     # current bathymetry estimate
    hn: np.ndarray     # water height at t_n (solved with bn)
    hnp1: np.ndarray   # water height at t_{n+1} (solved with bn)
    Hn: np.ndarray     # observed free surface at t_n
    Hnp1: np.ndarray   # observed free surface at t_{n+1}
    b_e: np.ndarray    # boundary bathymetry data


@dataclass
class StepResult:
    b: np.ndarray
    p: np.ndarray
    q: np.ndarray = None
    g: np.ndarray = None
    objective: float = np.nan
    info: dict = field(default_factory=dict)


@dataclass
class AffineSolutionOperator:
    """b = T p + r reproducing the discrete bathymetry evolution equation."""

    T: sp.csr_matrix
    r: np.ndarray

    def __call__(self, p):
        return self.T @ p + self.r


def potential_map(ops: FemOperators, dt):
    """T = dt * ML^-1 * (ML - MC)."""
    return sp.diags(dt / ops.ml) @ ops.laplacian


def build_solution_operator(bn, hn, hnp1, Hn, Hnp1, ops: FemOperators, dt,
                            T=None) -> AffineSolutionOperator:
    incr = ops.mc @ ((Hnp1 - Hn) - (hnp1 - hn))
    r = bn + incr / ops.ml
    return AffineSolutionOperator(T=T if T is not None else potential_map(ops, dt), r=r)


def gamma_diagonal(ops: FemOperators, boundary="all"):
    """Effective lumped boundary-mass diagonal for the gamma penalty."""
    if boundary == "all":
        return ops.mgamma
    if boundary == "inflow":
        bd = ops.mesh.boundary
        mg = np.zeros_like(ops.mgamma)
        sel = bd.tag == INFLOW
        np.add.at(mg, bd.node[sel], bd.weight[sel])
        return mg
    raise ValueError(f"unknown gamma boundary mode '{boundary}'")


class InverseWorkspace:
    """Per-run caches: operator blocks and factorizations (all step-invariant)."""

    def __init__(self, ops: FemOperators, weights: RegWeights, dt,
                 gamma_boundary="all", solver_tol=1e-9):
        weights.require_oc()
        self.ops = ops
        self.w = weights
        self.dt = dt
        self.solver_tol = solver_tol
        self.mg = gamma_diagonal(ops, gamma_boundary)
        # diagonal of the b-block: alpha*ML + gamma*MGamma + delta*ML
        self.d_diag = (weights.alpha + weights.delta) * ops.ml + weights.gamma * self.mg
        self.T = potential_map(ops, dt)
        self._tvd = None

    @cached_property
    def kkt_solver(self):
        return FactorizedSolver(self.kkt_matrix(), tol=self.solver_tol)

    def kkt_matrix(self, w_matrix=None):
        ops, w, dt = self.ops, self.w, self.dt
        a11 = sp.diags(self.d_diag)
        if w_matrix is not None:
            a11 = a11 + w_matrix
        a13 = sp.diags(ops.ml)
        a22 = sp.diags(w.beta * ops.ml)
        a23 = -dt * ops.laplacian
        return sp.bmat([[a11, None, a13], [None, a22, a23], [a13, a23, None]],
                       format="csc")

    @cached_property
    def reduced_saddle(self):
        return ReducedSaddle(beta_ml=self.w.beta * self.ops.ml,
                             dt_laplacian=self.dt * self.ops.laplacian,
                             schur_diag=self.ops.ml ** 2 / self.d_diag)

    @cached_property
    def reduced_solver(self):
        return FactorizedSolver(self.reduced_saddle.matrix(), tol=self.solver_tol)

    @cached_property
    def inner_solver(self):
        """SPD factor of K = T' D T + beta*ML for the reduced dual objectives."""
        ops, w = self.ops, self.w
        k = (self.T.T @ sp.diags(self.d_diag) @ self.T
             + sp.diags(w.beta * ops.ml)).tocsc()
        return FactorizedSolver(k, tol=self.solver_tol)

    def rhs_blocks(self, data: StepData):
        ops, w = self.ops, self.w
        z1 = (w.alpha * ops.ml * (data.Hnp1 - data.hnp1) + w.gamma * self.mg * data.b_e
              + w.delta * ops.ml * data.bn)
        z3 = ops.ml * data.bn + ops.mc @ ((data.Hnp1 - data.Hn) - (data.hnp1 - data.hn))
        return z1, z3

    def objective_value(self, data: StepData, b, p):
        """Quadratic objective terms (misfit, Tikhonov, boundary, damping)."""
        ops, w = self.ops, self.w
        mis = data.hnp1 + b - data.Hnp1
        val = 0.5 * w.alpha * float(mis @ (ops.ml * mis))
        val += 0.5 * w.beta * float(p @ (ops.ml * p))
        if w.gamma > 0.0:
            dbe = b - data.b_e
            val += 0.5 * w.gamma * float(dbe @ (self.mg * dbe))
        if w.delta > 0.0:
            dbn = b - data.bn
            val += 0.5 * w.delta * float(dbn @ (ops.ml * dbn))
        return val

    def tvd_assembler(self):
        if self._tvd is None:
            self._tvd = TvdAssembler(self.ops)
        return self._tvd


def nos_step(data: StepData, ops: FemOperators, dt, workspace=None) -> StepResult:
    """No stabilization: p = 0, bathymetry from the raw evolution update."""
    T = workspace.T if workspace is not None else None
    oper = build_solution_operator(data.bn, data.hn, data.hnp1, data.Hn, data.Hnp1,
                                   ops, dt, T=T)
    p = np.zeros_like(data.bn)
    b = oper.r
    obj = workspace.objective_value(data, b, p) if workspace is not None else np.nan
    return StepResult(b=b, p=p, q=np.zeros_like(p), objective=obj)


def solve_oc_step(data: StepData, ops: FemOperators, weights: RegWeights, dt,
                  mode="full", workspace=None, options: SolverOptions = None) -> StepResult:
    """One optimal-control step (KKT or reduced saddle path).

    A delta > 0 in the weights adds the step-damping term; delta = 0
    reproduces the plain objective.
    """
    ws = workspace or InverseWorkspace(ops, weights, dt)
    z1, z3 = ws.rhs_blocks(data)
    n = ops.n_nodes
    if mode == "full":
        rhs = np.concatenate([z1, np.zeros(n), z3])
        if options is None:
            x = ws.kkt_solver.solve(rhs)
        else:
            from .linalg import solve
            x = solve(ws.kkt_matrix(), rhs, options)
        b, p, q = x[:n], x[n:2 * n], x[2 * n:]
    elif mode == "reduced":
        rhs_q = z3 - ops.ml * (z1 / ws.d_diag)
        if options is None:
            x = ws.reduced_solver.solve(np.concatenate([np.zeros(n), rhs_q]))
            p, q = x[:n], x[n:]
        else:
            p, q = solve_block2(ws.reduced_saddle, np.zeros(n), rhs_q, options)
        b = (z1 - ops.ml * q) / ws.d_diag
    else:
        raise ValueError(f"unknown mode '{mode}'")
    return StepResult(b=b, p=p, q=q, objective=ws.objective_value(data, b, p))


def damped_objective_step(data: StepData, ops: FemOperators, weights: RegWeights,
                          dt, **kwargs) -> StepResult:
    """Step with the delta-damping term active (alias of the OC step)."""
    return solve_oc_step(data, ops, weights, dt, **kwargs)


class TvdAssembler:
    """Solution-dependent diffusion matrix W(b) and the smoothed-TV integral."""

    def __init__(self, ops: FemOperators):
        mesh = ops.mesh
        d = mesh.dimension
        corners = _CORNERS[d]
        pts, wts = _gauss_points(d)
        h = np.array([mesh.dx] if d == 1 else [mesh.dx, mesh.dy])
        self.elems = mesh.elements
        self.dphi = _shape_gradients(corners, pts) / h    # (nq, npe, d)
        self.wq = wts * float(np.prod(h))                 # (nq,)
        self.n = mesh.n_nodes
        npe = corners.shape[0]
        self._rows = np.repeat(self.elems, npe, axis=1).ravel()
        self._cols = np.tile(self.elems, (1, npe)).ravel()

    def gradient_norms(self, b, zeta):
        grads = np.einsum("ea,qak->eqk", b[self.elems], self.dphi)
        return np.sqrt((grads * grads).sum(axis=2) + zeta ** 2)   # (n_el, nq)

    def matrix(self, b, epsilon, zeta):
        coef = epsilon * self.wq[None, :] / self.gradient_norms(b, zeta)
        base = np.einsum("qak,qck->qac", self.dphi, self.dphi)    # (nq, npe, npe)
        w_loc = np.einsum("eq,qac->eac", coef, base)
        return sp.coo_matrix((w_loc.ravel(), (self._rows, self._cols)),
                             shape=(self.n, self.n)).tocsr()

    def integral(self, b, epsilon, zeta):
        return epsilon * float((self.wq[None, :] * self.gradient_norms(b, zeta)).sum())


def solve_tvd_step(data: StepData, ops: FemOperators, weights: RegWeights, dt,
                   workspace=None, mode="lagged", max_outer=20, tol=1e-8) -> StepResult:
    """Lagged-diffusivity solve of the nonlinear TVD optimality system.

    mode "lagged" reassembles W(b_k) per outer iteration until the fixed
    point settles; mode "frozen" evaluates W at b^n and solves once (the
    faster, more diffusive variant).
    """
    weights.require_tvd()
    ws = workspace or InverseWorkspace(ops, weights, dt)
    assembler = ws.tvd_assembler()
    z1, z3 = ws.rhs_blocks(data)
    n = ops.n_nodes
    rhs = np.concatenate([z1, np.zeros(n), z3])
    b_lin = data.bn
    n_outer = max_outer if mode == "lagged" else 1
    result = None
    for it in range(n_outer):
        w_mat = assembler.matrix(b_lin, weights.epsilon, weights.zeta)
        x = FactorizedSolver(ws.kkt_matrix(w_matrix=w_mat), tol=ws.solver_tol).solve(rhs)
        b, p, q = x[:n], x[n:2 * n], x[2 * n:]
        change = np.linalg.norm(b - b_lin) / max(np.linalg.norm(b), 1e-30)
        obj = (ws.objective_value(data, b, p)
               + assembler.integral(b, weights.epsilon, weights.zeta))
        result = StepResult(b=b, p=p, q=q, objective=obj,
                            info={"outer_iterations": it + 1, "change": change})
        if mode == "frozen" or change <= tol:
            return result
        b_lin = b
    raise TvdStagnation(
        f"TVD fixed point stagnated after {max_outer} iterations "
        f"(relative change {result.info['change']:.3e})", result)


class TvdStagnation(OptimizerError):
    """Raised when the lagged-diffusivity loop exhausts its budget."""

    def __init__(self, message, last_result: StepResult):
        super().__init__(message)
        self.last_result = last_result


def oc_reduced_objective(p, oper: AffineSolutionOperator, data: StepData,
                         ops: FemOperators, weights: RegWeights, mg=None):
    """Reduced quadratic objective in the flux potentials: (value, gradient)."""
    mg = ops.mgamma if mg is None else mg
    b = oper(p)
    mis = data.hnp1 + b - data.Hnp1
    val = 0.5 * weights.alpha * float(mis @ (ops.ml * mis))
    val += 0.5 * weights.beta * float(p @ (ops.ml * p))
    adj = weights.alpha * (ops.ml * mis)
    if weights.gamma > 0.0:
        dbe = b - data.b_e
        val += 0.5 * weights.gamma * float(dbe @ (mg * dbe))
        adj = adj + weights.gamma * (mg * dbe)
    if weights.delta > 0.0:
        dbn = b - data.bn
        val += 0.5 * weights.delta * float(dbn @ (ops.ml * dbn))
        adj = adj + weights.delta * (ops.ml * dbn)
    grad = oper.T.T @ adj + weights.beta * (ops.ml * p)
    return val, grad


def kkt_residuals(data: StepData, ops: FemOperators, weights: RegWeights, dt,
                  b, p, q, mg=None):
    """Stationarity residuals of the Lagrangian (b-, p-, q-derivatives)."""
    mg = ops.mgamma if mg is None else mg
    lap = ops.laplacian
    res_b = (weights.alpha * ops.ml * (data.hnp1 + b - data.Hnp1)
             + weights.gamma * mg * (b - data.b_e)
             + weights.delta * ops.ml * (b - data.bn) + ops.ml * q)
    res_p = weights.beta * ops.ml * p - dt * (lap @ q)
    res_q = (ops.ml * (b - data.bn)
             - ops.mc @ ((data.Hnp1 - data.Hn) - (data.hnp1 - data.hn))
             - dt * (lap @ p))
    return res_b, res_p, res_q
