"""Bound-constrained and proximal trust-region solvers.

Both solvers minimize a smooth objective (value, gradient, exact
Hessian-vector products) over a convex feasible set given by a projection:
componentwise clamping for boxes, per-block radial scaling for Euclidean
balls. The outer loop is a classic trust region with projected subproblem
solves; convergence is measured by the projected-gradient fixed-point norm
||x - P(x - grad f(x))||.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OptimizerError


@dataclass
class TrustRegionOptions:
    tau0: float = 1.0
    tau_min: float = 1e-14
    tau_max: float = 1e8
    eta1: float = 0.05
    eta2: float = 0.9
    grow: float = 2.5
    shrink: float = 0.25
    gtol: float = 1e-8
    rtol: float = 0.0         # optional: stop at rtol * initial projected gradient
    max_outer: int = 500
    max_inner: int = 200
    subproblem: str = "tcg"   # tcg (boxes) | spg (any projection)

    def __post_init__(self):
        if not (0.0 < self.eta1 < self.eta2 < 1.0):
            raise ValueError("acceptance thresholds must satisfy 0 < eta1 < eta2 < 1")
        if self.tau0 <= 0 or self.tau_min <= 0 or self.tau_max < self.tau0:
            raise ValueError("invalid trust-region radius bounds")


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    converged: bool
    n_iter: int
    pg_norm: float
    message: str = ""


def project_box(x, lower, upper):
    return np.minimum(np.maximum(x, lower), upper)


def project_ball_blocks(g, kappa, block):
    """Project each consecutive block of `block` components onto the
    Euclidean ball of radius kappa (radial scaling)."""
    g = np.asarray(g, dtype=float)
    blocks = g.reshape(-1, block)
    norms = np.sqrt((blocks * blocks).sum(axis=1))
    scale = np.where(norms > kappa, kappa / np.maximum(norms, 1e-300), 1.0)
    return (blocks * scale[:, None]).ravel()


@dataclass
class BoxConstraint:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.lower) > np.asarray(self.upper)):
            raise ValueError("box constraint requires lower <= upper")

    def project(self, x):
        return project_box(x, self.lower, self.upper)

    def contains(self, x, tol=1e-12):
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


@dataclass
class BallConstraint:
    radius: float
    block: int = 1

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    def project(self, x):
        return project_ball_blocks(x, self.radius, self.block)

    def contains(self, x, tol=1e-12):
        norms = np.sqrt((np.asarray(x).reshape(-1, self.block) ** 2).sum(axis=1))
        return bool(np.all(norms <= self.radius * (1.0 + tol) + tol))


def _truncate_to_radius(s, tau):
    n = np.linalg.norm(s)
    if n > tau:
        return s * (tau / n), True
    return s, False


def _cauchy_step(x, g, hessvec, project, tau, mu=1e-4, max_half=40):
    """Projected backtracking along -g with sufficient model decrease."""
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0:
        return np.zeros_like(x), 0.0
    t = tau / gnorm
    for _ in range(max_half):
        s = project(x - t * g) - x
        s, _ = _truncate_to_radius(s, tau)
        gs = float(g @ s)
        if gs < 0.0:
            m = gs + 0.5 * float(s @ hessvec(s))
            if m <= mu * gs:
                return s, m
        t *= 0.5
    return np.zeros_like(x), 0.0


def _model(g, hessvec, s):
    return float(g @ s + 0.5 * s @ hessvec(s))


def _spg_subproblem(x, g, hessvec, project, tau, opts):
    """Spectral projected gradient on the quadratic model within the set
    and (by step truncation) the trust radius."""
    s, m_best = _cauchy_step(x, g, hessvec, project, tau)
    s_best = s
    gm = g + hessvec(s)
    lam = 1.0
    s_prev, gm_prev = s.copy(), gm.copy()
    for _ in range(opts.max_inner):
        d = project(x + s - lam * gm) - x
        d, _ = _truncate_to_radius(d, tau)
        p = d - s
        pnorm = np.linalg.norm(p)
        if pnorm <= 1e-14 * max(1.0, np.linalg.norm(s)):
            break
        hp = hessvec(p)
        curv = float(p @ hp)
        gp = float(gm @ p)
        t = 1.0 if curv <= 0.0 else min(1.0, max(0.0, -gp / curv))
        if t <= 0.0:
            break
        s = s + t * p
        gm = gm + t * hp
        m = _model(g, hessvec, s)
        if m < m_best:
            m_best, s_best = m, s.copy()
        ds = s - s_prev
        dg = gm - gm_prev
        denom = float(ds @ dg)
        lam = float(ds @ ds) / denom if denom > 1e-300 else 1.0
        lam = min(max(lam, 1e-10), 1e10)
        s_prev, gm_prev = s.copy(), gm.copy()
    return s_best, m_best


def _tcg_subproblem(x, g, hessvec, project, tau, opts, lower, upper):
    """Cauchy point, then truncated CG on the free variables (TRON-style)."""
    s_c, m_c = _cauchy_step(x, g, hessvec, project, tau)
    xt = x + s_c
    eps = 1e-12 * (1.0 + np.abs(xt))
    free = (xt > lower + eps) & (xt < upper - eps)
    if not np.any(free):
        return s_c, m_c

    res = -(g + hessvec(s_c))
    res[~free] = 0.0
    d = res.copy()
    s = s_c.copy()
    rr = float(res @ res)
    tol2 = max((min(0.1, np.sqrt(rr)) ** 2) * rr, 1e-30)
    for _ in range(opts.max_inner):
        if rr <= tol2:
            break
        hd = hessvec(d)
        hd[~free] = 0.0
        curv = float(d @ hd)
        if curv <= 0.0:
            # follow direction to the radius (convex problems rarely get here)
            s = s + d * (tau / max(np.linalg.norm(d), 1e-300))
            break
        alpha = rr / curv
        s_new = s + alpha * d
        if np.linalg.norm(s_new) >= tau:
            # Steihaug boundary step
            a = float(d @ d)
            bq = 2.0 * float(s @ d)
            c = float(s @ s) - tau * tau
            disc = max(bq * bq - 4.0 * a * c, 0.0)
            sigma = (-bq + np.sqrt(disc)) / (2.0 * a)
            s = s + sigma * d
            break
        s = s_new
        res = res - alpha * hd
        res[~free] = 0.0
        rr_new = float(res @ res)
        d = res + (rr_new / rr) * d
        rr = rr_new

    s_proj = project(x + s) - x
    s_proj, _ = _truncate_to_radius(s_proj, tau)
    m_proj = _model(g, hessvec, s_proj)
    if m_proj < m_c:
        return s_proj, m_proj
    return s_c, m_c


def _tr_minimize(value_grad, hessvec, project, x0, opts, box=None):
    x = project(np.asarray(x0, dtype=float).copy())
    f, g = value_grad(x)
    tau = opts.tau0
    pg_norm = np.inf
    stop = opts.gtol
    for it in range(1, opts.max_outer + 1):
        pg_norm = float(np.linalg.norm(x - project(x - g)))
        if it == 1 and opts.rtol > 0.0:
            stop = max(opts.gtol, opts.rtol * pg_norm)
        if pg_norm <= stop:
            return OptimizeResult(x, f, True, it - 1, pg_norm)
        if opts.subproblem == "tcg" and box is not None:
            s, m = _tcg_subproblem(x, g, hessvec, project, tau, opts, *box)
        else:
            s, m = _spg_subproblem(x, g, hessvec, project, tau, opts)
        pred = -m
        if pred <= 0.0 or not np.any(s):
            if tau <= opts.tau_min * (1.0 + 1e-12):
                return OptimizeResult(x, f, False, it, pg_norm,
                                      message="stalled at numerical precision")
            tau = max(tau * opts.shrink, opts.tau_min)
            continue
        x_new = project(x + s)
        f_new, g_new = value_grad(x_new)
        # actual/predicted ratio with a float-noise guard near convergence
        noise = 32.0 * np.finfo(float).eps * max(abs(f), abs(f_new), 1e-30)
        ared = f - f_new
        if pred <= noise:
            rho = 1.0 if ared >= -noise else 0.0
        else:
            rho = ared / pred
        if rho >= opts.eta1:
            x, f, g = x_new, f_new, g_new
            if rho >= opts.eta2:
                tau = min(tau * opts.grow, opts.tau_max)
        else:
            tau = max(tau * opts.shrink, opts.tau_min)
    return OptimizeResult(x, f, False, opts.max_outer, pg_norm,
                          message=f"projected-gradient norm {pg_norm:.3e} > {stop:.1e}")


def minimize_box(value_grad, hessvec, lower, upper, x0, opts=None, strict=False):
    """Trust-region minimization subject to lower <= x <= upper."""
    opts = opts or TrustRegionOptions()
    lower = np.broadcast_to(np.asarray(lower, dtype=float), np.shape(x0)).copy()
    upper = np.broadcast_to(np.asarray(upper, dtype=float), np.shape(x0)).copy()
    box = BoxConstraint(lower, upper)
    result = _tr_minimize(value_grad, hessvec, box.project, x0, opts,
                          box=(lower, upper))
    if strict and not result.converged:
        raise OptimizerError(f"minimize_box: {result.message}")
    return result


def minimize_prox(value_grad, hessvec, prox, x0, opts=None, strict=False):
    """Proximal trust-region minimization; prox projects onto the feasible set."""
    opts = opts or TrustRegionOptions(subproblem="spg")
    result = _tr_minimize(value_grad, hessvec, prox, x0, opts)
    if strict and not result.converged:
        raise OptimizerError(f"minimize_prox: {result.message}")
    return result
