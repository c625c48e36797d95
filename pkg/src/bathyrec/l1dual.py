"""Sparsity-promoting gradient regularization via the dual formulations.

The L1 norm of the reconstructed-bathymetry gradient is handled through its
dual: a DG-nodal dual variable g constrained to the box [-kappa, kappa]
(componentwise, anisotropic variant) or to per-node Euclidean balls of
radius kappa (isotropic variant). After eliminating the flux potentials,
the negated dual objective plus the nu-Tikhonov term is a strictly convex
quadratic in g; the steps minimize it with the bound-constrained or
proximal trust-region solver.
"""

import numpy as np

from .errors import OptimizerError
from .inverse import (InverseWorkspace, StepData, StepResult,
                      build_solution_operator)
from .optim import (TrustRegionOptions, minimize_box, minimize_prox,
                    project_ball_blocks)


class ReducedDualObjective:
    """J(g) = -(dual objective) + nu/2 * |g|^2; quadratic with exact Hessian.

    The gradient is A @ b(g) flipped in sign plus the Tikhonov term, where
    b(g) = T p(g) + r and p(g) solves the inner flux-potential optimality
    system K p = c0 - T' A' g.
    """

    def __init__(self, workspace: InverseWorkspace, data: StepData):
        ws = workspace
        self.ws = ws
        self.data = data
        ops, w = ws.ops, ws.w
        self.A = ops.dg.matrix
        self.nu = w.nu
        oper = build_solution_operator(data.bn, data.hn, data.hnp1,
                                       data.Hn, data.Hnp1, ops, ws.dt, T=ws.T)
        self.T = oper.T
        self.r = oper.r
        c0 = w.alpha * (ops.ml * (data.Hnp1 - data.hnp1 - self.r))
        if w.gamma > 0.0:
            c0 = c0 + w.gamma * (ws.mg * (data.b_e - self.r))
        if w.delta > 0.0:
            c0 = c0 + w.delta * (ops.ml * (data.bn - self.r))
        self._c0 = self.T.T @ c0
        self._solve = ws.inner_solver.solve

    @property
    def n_dual(self):
        return self.A.shape[0]

    def p_of_g(self, g):
        return self._solve(self._c0 - self.T.T @ (self.A.T @ g))

    def b_of_g(self, g):
        return self.T @ self.p_of_g(g) + self.r

    def value_grad(self, g):
        p = self.p_of_g(g)
        b = self.T @ p + self.r
        coupling = float(g @ (self.A @ b))
        j4 = self.ws.objective_value(self.data, b, p) + coupling
        val = -j4 + 0.5 * self.nu * float(g @ g)
        grad = -(self.A @ b) + self.nu * g
        return val, grad

    def hessvec(self, v):
        u = self._solve(self.T.T @ (self.A.T @ v))
        return self.A @ (self.T @ u) + self.nu * v

    def recover(self, g, optimizer_info=None):
        p = self.p_of_g(g)
        b = self.T @ p + self.r
        info = dict(optimizer_info or {})
        return StepResult(b=b, p=p, g=g,
                          objective=self.ws.objective_value(self.data, b, p)
                          + float(g @ (self.A @ b)), info=info)


def _run(objective, minimize, g0, opts, strict):
    result = minimize(objective.value_grad, objective.hessvec, g0, opts)
    if not result.converged and strict:
        raise OptimizerError(
            f"dual optimization stalled after {result.n_iter} iterations "
            f"(projected gradient {result.pg_norm:.3e})")
    return objective.recover(result.x, optimizer_info={
        "iterations": result.n_iter, "pg_norm": result.pg_norm,
        "converged": result.converged})


def l1l1_step(data: StepData, ops, weights, dt, opts: TrustRegionOptions = None,
              workspace: InverseWorkspace = None, g0=None, strict=False) -> StepResult:
    """Anisotropic step: box constraint -kappa <= g <= kappa componentwise."""
    weights.require_l1()
    if weights.nu <= 0.0:
        raise OptimizerError("l1(l1) step requires nu > 0")
    ws = workspace or InverseWorkspace(ops, weights, dt)
    obj = ReducedDualObjective(ws, data)
    k = weights.kappa
    x0 = np.zeros(obj.n_dual) if g0 is None else np.clip(g0, -k, k)
    opts = opts or TrustRegionOptions(gtol=1e-8)

    def minimize(vg, hv, g_init, options):
        return minimize_box(vg, hv, -k, k, g_init, options)

    return _run(obj, minimize, x0, opts, strict)


def l1l2_step(data: StepData, ops, weights, dt, opts: TrustRegionOptions = None,
              workspace: InverseWorkspace = None, g0=None, strict=False) -> StepResult:
    """Isotropic step: per-DG-node Euclidean ball |g_j|_2 <= kappa."""
    weights.require_l1()
    ws = workspace or InverseWorkspace(ops, weights, dt)
    obj = ReducedDualObjective(ws, data)
    d = ops.dim
    k = weights.kappa
    prox = lambda g: project_ball_blocks(g, k, d)  # noqa: E731
    x0 = np.zeros(obj.n_dual) if g0 is None else prox(g0)
    opts = opts or TrustRegionOptions(gtol=1e-8, subproblem="spg")

    def minimize(vg, hv, g_init, options):
        return minimize_prox(vg, hv, prox, g_init, options)

    return _run(obj, minimize, x0, opts, strict)


def box_dual_maximum(ab, kappa):
    """max of g @ ab over the box |g|_inf <= kappa and its maximizer."""
    return kappa * float(np.abs(ab).sum()), kappa * np.sign(ab)


def ball_dual_maximum(ab, kappa, block):
    """max of g @ ab over per-block l2 balls and its maximizer."""
    blocks = np.asarray(ab).reshape(-1, block)
    norms = np.sqrt((blocks * blocks).sum(axis=1))
    g = np.zeros_like(blocks)
    nz = norms > 0
    g[nz] = kappa * blocks[nz] / norms[nz][:, None]
    return kappa * float(norms.sum()), g.ravel()
