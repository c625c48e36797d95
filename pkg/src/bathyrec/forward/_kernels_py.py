"""Pure-numpy edge kernels (fallback backend).

Vectorized over the directed off-diagonal edge list in CSR order. The
compiled Cython backend implements the same signatures; both raise
ValueError on degenerate bar-state denominators.
"""

import numpy as np

COMPILED = False


def compute_dij(eptr, erow, ecol, ec, etrans, h, v, g):
    """Artificial diffusion d_ij = max over both nodes/both c-vectors of
    |v.c| + |c|*sqrt(g*h); symmetric by construction."""
    ci = ec
    cj = ec[etrans]
    ni = np.sqrt((ci * ci).sum(axis=1))
    nj = np.sqrt((cj * cj).sum(axis=1))
    wi = np.sqrt(g * h[erow])
    wj = np.sqrt(g * h[ecol])
    vi = v[erow]
    vj = v[ecol]
    t1 = np.abs((vi * ci).sum(axis=1)) + ni * wi
    t2 = np.abs((vi * cj).sum(axis=1)) + nj * wi
    t3 = np.abs((vj * ci).sum(axis=1)) + ni * wj
    t4 = np.abs((vj * cj).sum(axis=1)) + nj * wj
    return np.maximum(np.maximum(t1, t2), np.maximum(t3, t4))


def _edge_terms(erow, ecol, ec, h, hv, v, b, g, ab_mom):
    """Shared pieces: bathymetry jump, velocity sum, flux difference (f_j - f_i) @ c."""
    i, j = erow, ecol
    db = b[j] - b[i]
    vsum = v[i] + v[j]
    vc_i = (v[i] * ec).sum(axis=1)
    vc_j = (v[j] * ec).sum(axis=1)
    press = 0.5 * g * (h[j] ** 2 - h[i] ** 2)
    fluxdiff = hv[j] * vc_j[:, None] - hv[i] * vc_i[:, None] + press[:, None] * ec
    source = (0.5 * ab_mom * g * (h[i] + h[j]) * db)[:, None] * ec
    return db, vsum, fluxdiff, source


def alf_edge_rhs(n, erow, ecol, ec, dij, h, hv, v, b, g, ab_mom, ab_h):
    """Low-order edge sums: returns (m_i * dh_i/dt, m_i * dhv_i/dt) interior parts."""
    i, j = erow, ecol
    db, vsum, fluxdiff, source = _edge_terms(erow, ecol, ec, h, hv, v, b, g, ab_mom)
    flux_h = dij * (h[j] - h[i] + ab_h * db) - ((hv[j] - hv[i]) * ec).sum(axis=1)
    flux_hv = (dij[:, None] * (hv[j] - hv[i] + (0.5 * ab_mom * db)[:, None] * vsum)
               - fluxdiff - source)
    rhs_h = np.bincount(i, weights=flux_h, minlength=n)
    d = hv.shape[1]
    rhs_hv = np.column_stack(
        [np.bincount(i, weights=flux_hv[:, k], minlength=n) for k in range(d)])
    return rhs_h, rhs_hv


def _rowmax(values, eptr):
    return np.maximum.reduceat(values, eptr[:-1])


def _rowmin(values, eptr):
    return np.minimum.reduceat(values, eptr[:-1])


def mcl_edge_rhs(n, eptr, erow, ecol, ec, emij, etrans, dij, h, hv, v, b,
                 hdot, hvdot, g, ab_mom, ab_h, check_bounds=False):
    """Limited high-order edge sums (bar-state form with flux correction)."""
    i, j = erow, ecol
    db, vsum, fluxdiff, source = _edge_terms(erow, ecol, ec, h, hv, v, b, g, ab_mom)
    inv2d = 0.5 / dij

    # water height: bar states, raw and limited antidiffusive fluxes
    hbar = (0.5 * (h[i] + h[j]) - ((hv[j] - hv[i]) * ec).sum(axis=1) * inv2d
            + 0.5 * ab_h * db)
    fh = emij * (hdot[i] - hdot[j]) + dij * (h[i] - h[j] - ab_h * db)

    hmax = np.maximum(np.maximum(_rowmax(h[ecol], eptr), h), _rowmax(hbar, eptr))
    hmin = np.minimum(np.minimum(_rowmin(h[ecol], eptr), h), _rowmin(hbar, eptr))

    hbar_t = hbar[etrans]
    up = 2.0 * dij * np.minimum(hmax[i] - hbar, hbar_t - hmin[j])
    lo = 2.0 * dij * np.maximum(hmin[i] - hbar, hbar_t - hmax[j])
    fhs = np.where(fh >= 0.0, np.minimum(fh, up), np.maximum(fh, lo))

    hbars = hbar + fhs * inv2d
    hstar = hbars - 0.5 * ab_h * db

    # momentum: bar states, auxiliary fluxes, componentwise velocity limiting
    hvbar = (0.5 * (hv[i] + hv[j]) - (fluxdiff + source) * inv2d[:, None]
             + (0.25 * ab_mom * db)[:, None] * vsum)
    fhv = (emij[:, None] * (hvdot[i] - hvdot[j])
           + dij[:, None] * (hv[i] - hv[j] - (0.5 * ab_mom * db)[:, None] * vsum))

    denom = hbar + hbar_t
    if np.any(denom <= 0.0):
        raise ValueError("degenerate bar-state denominator in velocity limiter")
    vbar = (hvbar + hvbar[etrans]) / denom[:, None]
    corr = hvbar - hstar[:, None] * vbar
    gflux = fhv + 2.0 * dij[:, None] * corr

    ratio = hvbar / hbar[:, None]
    d = hv.shape[1]
    vmax = np.empty((n, d))
    vmin = np.empty((n, d))
    for k in range(d):
        vmax[:, k] = np.maximum(
            np.maximum(_rowmax(v[ecol, k], eptr), v[:, k]),
            np.maximum(_rowmax(vbar[:, k], eptr), _rowmax(ratio[:, k], eptr)))
        vmin[:, k] = np.minimum(
            np.minimum(_rowmin(v[ecol, k], eptr), v[:, k]),
            np.minimum(_rowmin(vbar[:, k], eptr), _rowmin(ratio[:, k], eptr)))

    hstar_t = hstar[etrans]
    upg = 2.0 * dij[:, None] * np.minimum(hstar[:, None] * (vmax[i] - vbar),
                                          hstar_t[:, None] * (vbar - vmin[j]))
    log = 2.0 * dij[:, None] * np.maximum(hstar[:, None] * (vmin[i] - vbar),
                                          hstar_t[:, None] * (vbar - vmax[j]))
    gs = np.where(gflux >= 0.0, np.minimum(gflux, upg), np.maximum(gflux, log))
    fhvs = gs - 2.0 * dij[:, None] * corr

    if check_bounds:
        scale = 1e-10 * max(1.0, np.abs(h).max())
        if np.any(hbars > hmax[i] + scale) or np.any(hbars < hmin[i] - scale):
            raise ValueError("MCL water-height bounds violated")
        hvlim = hstar[:, None] * vbar + gs * inv2d[:, None]
        vscale = 1e-10 * max(1.0, np.abs(hv).max())
        if (np.any(hvlim > hstar[:, None] * vmax[i] + vscale)
                or np.any(hvlim < hstar[:, None] * vmin[i] - vscale)):
            raise ValueError("MCL velocity bounds violated")

    rhs_h = np.bincount(i, weights=2.0 * dij * (hbar - h[i]) + fhs, minlength=n)
    rhs_hv = np.column_stack(
        [np.bincount(i, weights=2.0 * dij * (hvbar[:, k] - hv[i, k]) + fhvs[:, k],
                     minlength=n) for k in range(d)])
    return rhs_h, rhs_hv


def limited_h_fluxes(n, eptr, erow, ecol, ec, emij, etrans, dij, h, hv, v, b,
                     hdot, g, ab_h):
    """Expose (hbar, f_h, f_h_limited, hmin, hmax) for testing."""
    i, j = erow, ecol
    db = b[j] - b[i]
    inv2d = 0.5 / dij
    hbar = (0.5 * (h[i] + h[j]) - ((hv[j] - hv[i]) * ec).sum(axis=1) * inv2d
            + 0.5 * ab_h * db)
    fh = emij * (hdot[i] - hdot[j]) + dij * (h[i] - h[j] - ab_h * db)
    hmax = np.maximum(np.maximum(_rowmax(h[ecol], eptr), h), _rowmax(hbar, eptr))
    hmin = np.minimum(np.minimum(_rowmin(h[ecol], eptr), h), _rowmin(hbar, eptr))
    hbar_t = hbar[etrans]
    up = 2.0 * dij * np.minimum(hmax[i] - hbar, hbar_t - hmin[j])
    lo = 2.0 * dij * np.maximum(hmin[i] - hbar, hbar_t - hmax[j])
    fhs = np.where(fh >= 0.0, np.minimum(fh, up), np.maximum(fh, lo))
    return hbar, fh, fhs, hmin, hmax
