# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled edge kernels; signatures mirror _kernels_py."""

import numpy as np

cimport cython
from libc.math cimport fabs, sqrt

COMPILED = True


def compute_dij(long[::1] eptr, long[::1] erow, long[::1] ecol,
                double[:, ::1] ec, long[::1] etrans,
                double[::1] h, double[:, ::1] v, double g):
    cdef Py_ssize_t nnz = erow.shape[0]
    cdef Py_ssize_t d = ec.shape[1]
    cdef double[::1] out = np.empty(nnz)
    cdef Py_ssize_t k, t, i, j, l
    cdef double ni, nj, wi, wj, vici, vicj, vjci, vjcj, t1, t2, t3, t4, best
    for k in range(nnz):
        t = etrans[k]
        i = erow[k]
        j = ecol[k]
        ni = 0.0
        nj = 0.0
        vici = 0.0
        vicj = 0.0
        vjci = 0.0
        vjcj = 0.0
        for l in range(d):
            ni += ec[k, l] * ec[k, l]
            nj += ec[t, l] * ec[t, l]
            vici += v[i, l] * ec[k, l]
            vicj += v[i, l] * ec[t, l]
            vjci += v[j, l] * ec[k, l]
            vjcj += v[j, l] * ec[t, l]
        ni = sqrt(ni)
        nj = sqrt(nj)
        wi = sqrt(g * h[i])
        wj = sqrt(g * h[j])
        t1 = fabs(vici) + ni * wi
        t2 = fabs(vicj) + nj * wi
        t3 = fabs(vjci) + ni * wj
        t4 = fabs(vjcj) + nj * wj
        best = t1
        if t2 > best: best = t2
        if t3 > best: best = t3
        if t4 > best: best = t4
        out[k] = best
    return np.asarray(out)


def alf_edge_rhs(Py_ssize_t n, long[::1] erow, long[::1] ecol,
                 double[:, ::1] ec, double[::1] dij,
                 double[::1] h, double[:, ::1] hv, double[:, ::1] v,
                 double[::1] b, double g, double ab_mom, double ab_h):
    cdef Py_ssize_t nnz = erow.shape[0]
    cdef Py_ssize_t d = hv.shape[1]
    cdef double[::1] rhs_h = np.zeros(n)
    cdef double[:, ::1] rhs_hv = np.zeros((n, d))
    cdef Py_ssize_t k, i, j, l
    cdef double db, dd, press, vci, vcj, hvc, fh
    for k in range(nnz):
        i = erow[k]
        j = ecol[k]
        db = b[j] - b[i]
        dd = dij[k]
        hvc = 0.0
        vci = 0.0
        vcj = 0.0
        for l in range(d):
            hvc += (hv[j, l] - hv[i, l]) * ec[k, l]
            vci += v[i, l] * ec[k, l]
            vcj += v[j, l] * ec[k, l]
        fh = dd * (h[j] - h[i] + ab_h * db) - hvc
        rhs_h[i] += fh
        press = 0.5 * g * (h[j] * h[j] - h[i] * h[i])
        for l in range(d):
            rhs_hv[i, l] += (dd * (hv[j, l] - hv[i, l]
                                   + 0.5 * ab_mom * db * (v[i, l] + v[j, l]))
                             - (hv[j, l] * vcj - hv[i, l] * vci + press * ec[k, l])
                             - 0.5 * ab_mom * g * (h[i] + h[j]) * db * ec[k, l])
    return np.asarray(rhs_h), np.asarray(rhs_hv)


def mcl_edge_rhs(Py_ssize_t n, long[::1] eptr, long[::1] erow, long[::1] ecol,
                 double[:, ::1] ec, double[::1] emij, long[::1] etrans,
                 double[::1] dij, double[::1] h, double[:, ::1] hv,
                 double[:, ::1] v, double[::1] b, double[::1] hdot,
                 double[:, ::1] hvdot, double g, double ab_mom, double ab_h,
                 bint check_bounds=False):
    cdef Py_ssize_t nnz = erow.shape[0]
    cdef Py_ssize_t d = hv.shape[1]
    cdef Py_ssize_t k, i, j, l, t, row, start, stop
    cdef double db, dd, inv2d, press, vci, vcj, hvc, val

    cdef double[::1] hbar = np.empty(nnz)
    cdef double[::1] fhs = np.empty(nnz)
    cdef double[:, ::1] hvbar = np.empty((nnz, d))
    cdef double[:, ::1] fhv = np.empty((nnz, d))
    cdef double[::1] hmax = np.empty(n)
    cdef double[::1] hmin = np.empty(n)
    cdef double[:, ::1] vmax = np.empty((n, d))
    cdef double[:, ::1] vmin = np.empty((n, d))
    cdef double[::1] hstar = np.empty(nnz)
    cdef double[:, ::1] vbar = np.empty((nnz, d))
    cdef double[::1] rhs_h = np.zeros(n)
    cdef double[:, ::1] rhs_hv = np.zeros((n, d))

    # pass 1: bar states and raw fluxes
    for k in range(nnz):
        i = erow[k]
        j = ecol[k]
        db = b[j] - b[i]
        dd = dij[k]
        inv2d = 0.5 / dd
        hvc = 0.0
        vci = 0.0
        vcj = 0.0
        for l in range(d):
            hvc += (hv[j, l] - hv[i, l]) * ec[k, l]
            vci += v[i, l] * ec[k, l]
            vcj += v[j, l] * ec[k, l]
        hbar[k] = 0.5 * (h[i] + h[j]) - hvc * inv2d + 0.5 * ab_h * db
        fhs[k] = emij[k] * (hdot[i] - hdot[j]) + dd * (h[i] - h[j] - ab_h * db)
        press = 0.5 * g * (h[j] * h[j] - h[i] * h[i])
        for l in range(d):
            hvbar[k, l] = (0.5 * (hv[i, l] + hv[j, l])
                           - (hv[j, l] * vcj - hv[i, l] * vci + press * ec[k, l]
                              + 0.5 * ab_mom * g * (h[i] + h[j]) * db * ec[k, l]) * inv2d
                           + 0.25 * ab_mom * db * (v[i, l] + v[j, l]))
            fhv[k, l] = (emij[k] * (hvdot[i, l] - hvdot[j, l])
                         + dd * (hv[i, l] - hv[j, l]
                                 - 0.5 * ab_mom * db * (v[i, l] + v[j, l])))

    # pass 2: water-height bounds
    for row in range(n):
        start = eptr[row]
        stop = eptr[row + 1]
        hmax[row] = h[row]
        hmin[row] = h[row]
        for k in range(start, stop):
            j = ecol[k]
            if h[j] > hmax[row]: hmax[row] = h[j]
            if h[j] < hmin[row]: hmin[row] = h[j]
            if hbar[k] > hmax[row]: hmax[row] = hbar[k]
            if hbar[k] < hmin[row]: hmin[row] = hbar[k]

    # pass 3: limit the h fluxes (in place on fhs), bar states for velocity
    cdef double fh_raw, up, lo, hbt
    for k in range(nnz):
        i = erow[k]
        j = ecol[k]
        dd = dij[k]
        hbt = hbar[etrans[k]]
        fh_raw = fhs[k]
        if fh_raw >= 0.0:
            up = hmax[i] - hbar[k]
            if hbt - hmin[j] < up: up = hbt - hmin[j]
            up *= 2.0 * dd
            fhs[k] = fh_raw if fh_raw < up else up
        else:
            lo = hmin[i] - hbar[k]
            if hbt - hmax[j] > lo: lo = hbt - hmax[j]
            lo *= 2.0 * dd
            fhs[k] = fh_raw if fh_raw > lo else lo
        db = b[j] - b[i]
        hstar[k] = hbar[k] + fhs[k] * 0.5 / dd - 0.5 * ab_h * db

    if check_bounds:
        _assert_h_bounds(hbar, fhs, dij, erow, hmin, hmax, np.asarray(h).max())

    # pass 4: velocity bar averages (needs transposed hvbar and hbar)
    cdef double denom
    for k in range(nnz):
        t = etrans[k]
        denom = hbar[k] + hbar[t]
        if denom <= 0.0:
            raise ValueError("degenerate bar-state denominator in velocity limiter")
        for l in range(d):
            vbar[k, l] = (hvbar[k, l] + hvbar[t, l]) / denom

    # pass 5: velocity bounds
    for row in range(n):
        start = eptr[row]
        stop = eptr[row + 1]
        for l in range(d):
            vmax[row, l] = v[row, l]
            vmin[row, l] = v[row, l]
        for k in range(start, stop):
            j = ecol[k]
            for l in range(d):
                val = v[j, l]
                if val > vmax[row, l]: vmax[row, l] = val
                if val < vmin[row, l]: vmin[row, l] = val
                val = vbar[k, l]
                if val > vmax[row, l]: vmax[row, l] = val
                if val < vmin[row, l]: vmin[row, l] = val
                val = hvbar[k, l] / hbar[k]
                if val > vmax[row, l]: vmax[row, l] = val
                if val < vmin[row, l]: vmin[row, l] = val

    # pass 6: limit auxiliary fluxes, accumulate
    cdef double corr, gk, gs, hst, hstt, fh2
    for k in range(nnz):
        i = erow[k]
        j = ecol[k]
        t = etrans[k]
        dd = dij[k]
        hst = hstar[k]
        hstt = hstar[t]
        rhs_h[i] += 2.0 * dd * (hbar[k] - h[i]) + fhs[k]
        for l in range(d):
            corr = hvbar[k, l] - hst * vbar[k, l]
            gk = fhv[k, l] + 2.0 * dd * corr
            if gk >= 0.0:
                up = hst * (vmax[i, l] - vbar[k, l])
                val = hstt * (vbar[k, l] - vmin[j, l])
                if val < up: up = val
                up *= 2.0 * dd
                gs = gk if gk < up else up
            else:
                lo = hst * (vmin[i, l] - vbar[k, l])
                val = hstt * (vbar[k, l] - vmax[j, l])
                if val > lo: lo = val
                lo *= 2.0 * dd
                gs = gk if gk > lo else lo
            fh2 = gs - 2.0 * dd * corr
            rhs_hv[i, l] += 2.0 * dd * (hvbar[k, l] - hv[i, l]) + fh2
            if check_bounds:
                val = hst * vbar[k, l] + gs * 0.5 / dd
                if (val > hst * vmax[i, l] + 1e-10 or
                        val < hst * vmin[i, l] - 1e-10):
                    raise ValueError("MCL velocity bounds violated")
    return np.asarray(rhs_h), np.asarray(rhs_hv)


def _assert_h_bounds(double[::1] hbar, double[::1] fhs, double[::1] dij,
                     long[::1] erow, double[::1] hmin, double[::1] hmax,
                     double hscale):
    cdef Py_ssize_t k, i
    cdef double tol = 1e-10 * (1.0 if hscale < 1.0 else hscale)
    cdef double hbs
    for k in range(hbar.shape[0]):
        i = erow[k]
        hbs = hbar[k] + fhs[k] * 0.5 / dij[k]
        if hbs > hmax[i] + tol or hbs < hmin[i] - tol:
            raise ValueError("MCL water-height bounds violated")
