"""Per-time-step reconstruction loop: forward step, then optimization step."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ForwardSolveError, OptimizerError
from .forward import FlowState, ForwardConfig, heun_step
from .inverse import (InverseWorkspace, RegWeights, StepData, nos_step,
                      solve_oc_step, solve_tvd_step)
from .l1dual import l1l1_step, l1l2_step
from .optim import TrustRegionOptions

METHODS = ("nos", "oc", "tvd", "l1l1", "l1l2")


@dataclass
class StepRecord:
    step: int
    t: float
    objective: float
    db_norm: float
    l2_error: float


@dataclass
class ReconstructionRun:
    b: np.ndarray
    state: FlowState
    records: list
    n_steps: int
    opt_failures: int = 0
    snapshots: list = field(default_factory=list)

    @property
    def final_error(self):
        return self.records[-1].l2_error if self.records else np.nan


def reconstruct_timeloop(ops, fwd_cfg: ForwardConfig, initial_state: FlowState,
                         observations, b0, b_e, weights: RegWeights,
                         method="oc", n_steps=None, *, kkt_mode="full",
                         gamma_boundary="all", solver_tol=1e-9,
                         tr_options: TrustRegionOptions = None,
                         tvd_mode="frozen", tvd_max_outer=20, tvd_tol=1e-8,
                         on_opt_failure="carry", b_ref=None,
                         record_every=1, snapshot_every=0,
                         callback=None) -> ReconstructionRun:
    """March the coupled forward/optimization pipeline over the observations.

    Each step advances the flow one Heun step with the current bathymetry
    estimate (inverse-mode forward flags are the caller's responsibility via
    fwd_cfg), then solves the selected optimization step for the update.
    on_opt_failure: "halt" re-raises optimizer failures, "carry" keeps the
    previous bathymetry for that step.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method '{method}' (expected one of {METHODS})")
    dt = fwd_cfg.dt
    if n_steps is None:
        n_steps = observations.n_steps
    if n_steps > observations.n_steps:
        raise ValueError(f"{n_steps} steps requested but observations cover "
                         f"{observations.n_steps}")

    ws = InverseWorkspace(ops, weights, dt, gamma_boundary=gamma_boundary,
                          solver_tol=solver_tol)
    if tr_options is None and method in ("l1l1", "l1l2"):
        # per-step dual solves: resolve each step's data shift to 1e-4
        tr_options = TrustRegionOptions(gtol=1e-8, rtol=1e-4, max_outer=100,
                                        subproblem="tcg" if method == "l1l1" else "spg")
    state = initial_state.copy()
    b = np.asarray(b0, dtype=float).copy()
    b_e = np.asarray(b_e, dtype=float)
    g_warm = None
    records = []
    snapshots = []
    failures = 0
    ml = ops.ml

    for n in range(n_steps):
        t0 = n * dt
        Hn = observations.at_time(t0)
        Hnp1 = observations.at_time(t0 + dt)
        new_state = heun_step(state, b, ops, fwd_cfg)
        data = StepData(bn=b, hn=state.h, hnp1=new_state.h, Hn=Hn, Hnp1=Hnp1, b_e=b_e)

        try:
            if method == "nos":
                result = nos_step(data, ops, dt, workspace=ws)
            elif method == "oc":
                result = solve_oc_step(data, ops, weights, dt, mode=kkt_mode,
                                       workspace=ws)
            elif method == "tvd":
                result = solve_tvd_step(data, ops, weights, dt, workspace=ws,
                                        mode=tvd_mode, max_outer=tvd_max_outer,
                                        tol=tvd_tol)
            elif method == "l1l1":
                result = l1l1_step(data, ops, weights, dt, opts=tr_options,
                                   workspace=ws, g0=g_warm, strict=True)
            else:
                result = l1l2_step(data, ops, weights, dt, opts=tr_options,
                                   workspace=ws, g0=g_warm, strict=True)
            b_new = result.b
            objective = result.objective
            if result.g is not None:
                g_warm = result.g
        except OptimizerError:
            if on_opt_failure == "halt":
                raise
            failures += 1
            b_new = b
            objective = np.nan

        db = b_new - b
        db_norm = float(np.sqrt(db @ (ml * db)))
        err = np.nan
        if b_ref is not None:
            diff = b_new - b_ref
            err = float(np.sqrt(diff @ (ml * diff)))
            if not np.isfinite(err):
                raise ForwardSolveError(
                    f"non-finite reconstruction error at step {n + 1}")
        if not np.isfinite(db_norm):
            raise ForwardSolveError(f"non-finite bathymetry update at step {n + 1}")

        b = b_new
        state = new_state
        if (n + 1) % record_every == 0 or n + 1 == n_steps:
            records.append(StepRecord(step=n + 1, t=(n + 1) * dt,
                                      objective=objective, db_norm=db_norm,
                                      l2_error=err))
        if snapshot_every and ((n + 1) % snapshot_every == 0 or n + 1 == n_steps):
            snapshots.append((n + 1, b.copy(), state.copy()))
        if callback is not None:
            callback(n + 1, b, state)

    return ReconstructionRun(b=b, state=state, records=records, n_steps=n_steps,
                             opt_failures=failures, snapshots=snapshots)
