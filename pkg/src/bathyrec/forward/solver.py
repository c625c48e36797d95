"""ALF and MCL right-hand sides, weak Rusanov boundary terms, Heun stepping."""

import warnings

import numpy as np

from ..errors import ForwardSolveError
from .kernels import backend
from .state import FlowState, ForwardConfig


def compute_dij(state: FlowState, ops, g):
    """Edge-aligned artificial diffusion coefficients (order of ops.erow/ecol)."""
    state.require_positive("compute_dij")
    return backend.compute_dij(ops.eptr, ops.erow, ops.ecol, ops.ec, ops.etrans,
                               state.h, state.v, g)


def _alpha_h(cfg: ForwardConfig):
    """Bathymetry factor in the continuity equation (dropped in inverse mode)."""
    return cfg.alpha_b if cfg.bathy_diffusion_in_continuity else 0.0


def apply_boundary(state: FlowState, b, ops, cfg: ForwardConfig):
    """Nodal Rusanov boundary-flux corrections to (m_i h_i', m_i hv_i').

    Per facet-node entry with outward normal n and lumped measure w the
    correction is w/2 * [(F(u_i) - F(u_ext)) . n + lam * (u_ext - u_i)],
    which vanishes when the external state equals the internal one.
    """
    n = len(state.h)
    d = state.hv.shape[1]
    out_h = np.zeros(n)
    out_hv = np.zeros((n, d))
    bd = ops.mesh.boundary
    if len(bd) == 0 or cfg.h_ext is None:
        return out_h, out_hv
    if len(cfg.h_ext) != len(bd) or len(cfg.hv_ext) != len(bd):
        raise ForwardSolveError("external boundary data does not match facet count")

    g = cfg.gravity
    idx = bd.node
    nrm = bd.normal
    w = bd.weight
    h_i = state.h[idx]
    hv_i = state.hv[idx]
    v_i = hv_i / h_i[:, None]

    h_e = np.asarray(cfg.h_ext, dtype=float).copy()
    hv_e = np.asarray(cfg.hv_ext, dtype=float)
    if cfg.subcritical_depth_adjust:
        vn_i = (v_i * nrm).sum(axis=1)
        subcrit_out = (vn_i > 0.0) & (vn_i < np.sqrt(g * h_i))
        # prescribed boundary bathymetry when available: feeding the evolving
        # estimate back into the depth destabilizes unregularized runs
        b_loc = cfg.b_ext if cfg.b_ext is not None else b[idx]
        h_e = np.where(subcrit_out, h_e - b_loc, h_e)
    if np.any(h_e <= 0.0):
        raise ForwardSolveError("non-positive external water depth at boundary")
    v_e = hv_e / h_e[:, None]

    def normal_flux(h, hv, v):
        vn = (v * nrm).sum(axis=1)
        fh = (hv * nrm).sum(axis=1)
        fhv = hv * vn[:, None] + (0.5 * g * h ** 2)[:, None] * nrm
        return vn, fh, fhv

    vn_i, fh_i, fhv_i = normal_flux(h_i, hv_i, v_i)
    vn_e, fh_e, fhv_e = normal_flux(h_e, hv_e, v_e)
    lam = np.maximum(np.abs(vn_i) + np.sqrt(g * h_i), np.abs(vn_e) + np.sqrt(g * h_e))

    corr_h = 0.5 * w * (fh_i - fh_e + lam * (h_e - h_i))
    corr_hv = 0.5 * w[:, None] * (fhv_i - fhv_e + lam[:, None] * (hv_e - hv_i))
    np.add.at(out_h, idx, corr_h)
    np.add.at(out_hv, idx, corr_hv)
    return out_h, out_hv


def alf_rhs(state: FlowState, b, ops, cfg: ForwardConfig, dij=None):
    """Low-order time derivatives (dh/dt, dhv/dt)."""
    state.require_positive("alf_rhs")
    if dij is None:
        dij = compute_dij(state, ops, cfg.gravity)
    rhs_h, rhs_hv = backend.alf_edge_rhs(
        len(state.h), ops.erow, ops.ecol, ops.ec, dij,
        state.h, state.hv, state.v, np.asarray(b, dtype=float),
        cfg.gravity, cfg.alpha_b, _alpha_h(cfg))
    bc_h, bc_hv = apply_boundary(state, b, ops, cfg)
    ml = ops.ml
    return (rhs_h + bc_h) / ml, (rhs_hv + bc_hv) / ml[:, None]


def mcl_rhs(state: FlowState, b, ops, cfg: ForwardConfig):
    """Limited high-order time derivatives.

    The nodal time-derivative estimates entering the antidiffusive fluxes are
    taken from the low-order right-hand side of the same stage.
    """
    state.require_positive("mcl_rhs")
    b = np.asarray(b, dtype=float)
    dij = compute_dij(state, ops, cfg.gravity)
    hdot, hvdot = alf_rhs(state, b, ops, cfg, dij=dij)
    try:
        rhs_h, rhs_hv = backend.mcl_edge_rhs(
            len(state.h), ops.eptr, ops.erow, ops.ecol, ops.ec, ops.emij,
            ops.etrans, dij, state.h, state.hv, state.v, b, hdot, hvdot,
            cfg.gravity, cfg.alpha_b, _alpha_h(cfg), cfg.check_bounds)
    except ValueError as exc:
        raise ForwardSolveError(str(exc)) from exc
    bc_h, bc_hv = apply_boundary(state, b, ops, cfg)
    ml = ops.ml
    return (rhs_h + bc_h) / ml, (rhs_hv + bc_hv) / ml[:, None]


def rhs(state, b, ops, cfg):
    return mcl_rhs(state, b, ops, cfg) if cfg.scheme == "mcl" else alf_rhs(state, b, ops, cfg)


def cfl_number(state, ops, cfg):
    """dt * max_i (sum_j 2 d_ij) / m_i; values above 1 are suspect."""
    dij = compute_dij(state, ops, cfg.gravity)
    row_sum = np.bincount(ops.erow, weights=2.0 * dij, minlength=len(state.h))
    return cfg.dt * float(np.max(row_sum / ops.ml))


def heun_step(state: FlowState, b, ops, cfg: ForwardConfig):
    """One SSP-RK2 (Heun) step; raises ForwardSolveError if positivity fails."""
    dt = cfg.dt
    if cfg.check_cfl:
        nu = cfl_number(state, ops, cfg)
        if nu > 1.0:
            warnings.warn(f"CFL monitor: dt*max(2*sum(d_ij))/m_i = {nu:.3f} > 1")

    hdot, hvdot = rhs(state, b, ops, cfg)
    stage = FlowState(state.h + dt * hdot, state.hv + dt * hvdot)
    stage.require_positive("Heun stage 1")
    hdot2, hvdot2 = rhs(stage, b, ops, cfg)
    out = FlowState(0.5 * (state.h + stage.h + dt * hdot2),
                    0.5 * (state.hv + stage.hv + dt * hvdot2))
    out.require_positive("Heun stage 2")
    return out
