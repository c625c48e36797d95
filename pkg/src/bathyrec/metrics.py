"""Error norms, run orchestration, and refinement studies."""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .observations import add_noise, generate_observations
from .timeloop import reconstruct_timeloop


def l2_error(b, b_ref, ml):
    """Lumped-mass L2 norm of the difference of two nodal fields."""
    b = np.asarray(b, dtype=float)
    b_ref = np.asarray(b_ref, dtype=float)
    if b.shape != b_ref.shape or b.shape != ml.shape:
        raise ConfigError(f"field shape mismatch: {b.shape} vs {b_ref.shape}")
    diff = b - b_ref
    return float(np.sqrt(diff @ (ml * diff)))


def l2_error_vs_function(b, fn, mesh, nq=8):
    """Quadrature L2 norm of (b_h - fn) with b_h the nodal interpolant of b.

    This is the benchmark-table metric: it includes the interpolation error
    of the analytic reference, so even an exact nodal recovery reports the
    O(dx^2) (or O(sqrt(dx)) for discontinuous references) floor.
    """
    from numpy.polynomial.legendre import leggauss
    b = np.asarray(b, dtype=float)
    xg, wg = leggauss(nq)
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    d = mesh.dimension
    elems = mesh.elements
    if d == 1:
        pts = xg[:, None]
        wts = wg
        shapes = np.column_stack([1.0 - xg, xg])              # (nqp, 2)
    else:
        XI, ETA = np.meshgrid(xg, xg, indexing="ij")
        pts = np.column_stack([XI.ravel(), ETA.ravel()])
        wts = np.outer(wg, wg).ravel()
        xi, eta = pts[:, 0], pts[:, 1]
        shapes = np.column_stack([(1 - xi) * (1 - eta), xi * (1 - eta),
                                  xi * eta, (1 - xi) * eta])  # (nqp, 4)
    vol = mesh.dx if d == 1 else mesh.dx * mesh.dy
    # physical quadrature points per element: x = x0 + ref * h
    origin = mesh.coords[elems[:, 0]]                          # (n_el, d)
    h = np.array([mesh.dx] if d == 1 else [mesh.dx, mesh.dy])
    phys = origin[:, None, :] + pts[None, :, :] * h            # (n_el, nqp, d)
    bh = b[elems] @ shapes.T                                   # (n_el, nqp)
    f = fn(phys.reshape(-1, d)).reshape(bh.shape)
    return float(np.sqrt((vol * wts[None, :] * (bh - f) ** 2).sum()))


def run_reconstruction(scenario, observations=None, ops=None, method=None,
                       weights=None, **loop_kwargs):
    """Build operators and data for a scenario and run the time loop."""
    method = method or scenario.method
    weights = weights or scenario.weights
    if ops is None:
        ops = scenario.build_operators()
    mesh = ops.mesh
    if observations is None:
        observations = generate_observations(scenario, ops)
        if scenario.noise_sigma > 0.0:
            observations = add_noise(observations, scenario.noise_sigma,
                                     scenario.noise_seed, scenario.noise_mode)
    b0, b_e, state = scenario.initial_reconstruction(mesh)
    fwd = scenario.forward_config(mesh, mode="inverse")
    b_ref = scenario.reference_bathymetry(mesh.coords)
    defaults = dict(kkt_mode=scenario.kkt_mode, gamma_boundary=scenario.gamma_boundary,
                    tvd_mode=scenario.tvd_mode, on_opt_failure=scenario.on_opt_failure,
                    b_ref=b_ref, n_steps=scenario.n_steps)
    defaults.update(loop_kwargs)
    run = reconstruct_timeloop(ops, fwd, state, observations, b0, b_e, weights,
                               method=method, **defaults)
    return run, ops


@dataclass
class ConvergenceRow:
    dx: float
    error: float
    rate: float   # nan on the first row


def appendix_dt_rule(dx):
    """Time-step scaling of the 1D refinement study: dt = 4 * dx * 3e-2 s."""
    return 4.0 * dx * 3e-2


def convergence_study(scenario, nx_values, method=None, dt_rule=appendix_dt_rule,
                      **loop_kwargs):
    """Refinement study: rerun the scenario on each mesh, collect L2 errors
    and observed rates log(e_coarse/e_fine)/log(dx_coarse/dx_fine)."""
    if len(nx_values) < 2:
        raise ConfigError("convergence study needs at least two mesh sizes")
    rows = []
    for nx in nx_values:
        scen = replace(scenario, nx=int(nx))
        dx = scen.dx
        if dt_rule is not None:
            scen = replace(scen, dt=dt_rule(dx))
        scen.weights = scenario.weights
        run, ops = run_reconstruction(scen, method=method, record_every=10 ** 9,
                                      **loop_kwargs)
        err = l2_error_vs_function(run.b, scen.reference_bathymetry, ops.mesh)
        rate = np.nan
        if rows:
            prev = rows[-1]
            rate = float(np.log(prev.error / err) / np.log(prev.dx / dx))
        rows.append(ConvergenceRow(dx=dx, error=err, rate=rate))
    return rows
