"""Finite-element operators on structured meshes.

Assembles the consistent/lumped mass matrices, the discrete gradient
coefficients c_ij = int(phi_i * grad(phi_j)), the lumped boundary mass, the
graph Laplacian, and the mixed continuous-to-DG gradient matrix with its
vertex quadrature rule. All element integrals of (bi)linear basis products
are evaluated with 2-point Gauss rules per direction, which is exact for
these polynomial degrees; assembly is element-major and deterministic.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh

# reference-element corners; 2D order is counterclockwise
_CORNERS = {
    1: np.array([[0.0], [1.0]]),
    2: np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
}


def _shape_values(corners, pts):
    """Tensor-product (bi)linear shape functions at reference points."""
    vals = np.ones((len(pts), len(corners)))
    for k in range(corners.shape[1]):
        xi = pts[:, k][:, None]
        on = corners[:, k][None, :] > 0.5
        vals *= np.where(on, xi, 1.0 - xi)
    return vals


def _shape_gradients(corners, pts):
    """Reference gradients, shape (npts, npe, d)."""
    npts, d = pts.shape
    npe = len(corners)
    grads = np.ones((npts, npe, d))
    for k in range(d):
        for l in range(d):
            xi = pts[:, l][:, None]
            on = corners[:, l][None, :] > 0.5
            if l == k:
                factor = np.where(on, 1.0, -1.0)
            else:
                factor = np.where(on, xi, 1.0 - xi)
            grads[:, :, k] *= factor
    return grads


def _gauss_points(d):
    """Tensor 2-point Gauss rule on [0,1]^d (exact through degree 3/dir)."""
    g = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
    if d == 1:
        return g[:, None], np.full(2, 0.5)
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return pts, np.full(4, 0.25)


@dataclass
class DgGradient:
    """Mixed gradient matrix onto the DG vertex space with its quadrature.

    Rows are interleaved per DG node: row d*m + k is the k-th gradient
    component at quadrature point z_m. matrix @ b equals
    w_m * grad(b_h)(z_m) stacked over m.
    """

    matrix: sp.csr_matrix      # (d*M_h, N)
    points: np.ndarray         # (M_h, d)
    weights: np.ndarray        # (M_h,)

    @property
    def n_points(self):
        return len(self.weights)


@dataclass
class FemOperators:
    """All time-independent operators used by the forward and inverse solvers."""

    mesh: Mesh
    mc: sp.csr_matrix          # consistent mass
    ml: np.ndarray             # lumped mass diagonal
    mgamma: np.ndarray         # lumped boundary mass diagonal
    laplacian: sp.csr_matrix   # diag(ml) - mc, zero row sums
    cmat: tuple                # per-component csr matrices of c_ij (incl. diagonal)
    # directed off-diagonal edge structure in CSR order
    eptr: np.ndarray           # (N+1,) row pointers
    erow: np.ndarray           # (nnz,) edge source i
    ecol: np.ndarray           # (nnz,) edge target j
    ec: np.ndarray             # (nnz, d) c_ij
    emij: np.ndarray           # (nnz,) consistent mass entries m_ij
    etrans: np.ndarray         # (nnz,) index of the reversed edge (j, i)
    dg: DgGradient

    @property
    def n_nodes(self):
        return len(self.ml)

    @property
    def dim(self):
        return self.mesh.dimension

    def neighbors(self, i):
        """Stencil N*_i (off-diagonal neighbors of node i)."""
        return self.ecol[self.eptr[i]:self.eptr[i + 1]]

    def edge_index(self, i, j):
        """Position of the directed edge (i, j) in the edge arrays."""
        row = self.ecol[self.eptr[i]:self.eptr[i + 1]]
        pos = int(np.searchsorted(row, j))
        if pos >= len(row) or row[pos] != j:
            raise KeyError(f"({i}, {j}) is not a stencil edge")
        return int(self.eptr[i]) + pos


def _local_matrices(mesh):
    d = mesh.dimension
    corners = _CORNERS[d]
    pts, wts = _gauss_points(d)
    h = np.array([mesh.dx] if d == 1 else [mesh.dx, mesh.dy])
    volume = float(np.prod(h))
    phi = _shape_values(corners, pts)           # (nq, npe)
    dphi = _shape_gradients(corners, pts) / h   # physical gradients
    m_loc = volume * np.einsum("q,qa,qb->ab", wts, phi, phi)
    c_loc = volume * np.einsum("q,qa,qbk->abk", wts, phi, dphi)
    return m_loc, c_loc


def assemble_operators(mesh: Mesh) -> FemOperators:
    """Assemble every time-independent operator for a structured mesh."""
    mesh.validate()
    d = mesh.dimension
    n = mesh.n_nodes
    elems = mesh.elements
    npe = elems.shape[1]
    m_loc, c_loc = _local_matrices(mesh)

    rows = np.repeat(elems, npe, axis=1).ravel()
    cols = np.tile(elems, (1, npe)).ravel()
    n_el = mesh.n_elements
    m_data = np.tile(m_loc.ravel(), n_el)
    mc = sp.coo_matrix((m_data, (rows, cols)), shape=(n, n)).tocsr()
    mc.sort_indices()

    cmats = []
    for k in range(d):
        ck = sp.coo_matrix((np.tile(c_loc[:, :, k].ravel(), n_el), (rows, cols)),
                           shape=(n, n)).tocsr()
        ck.sort_indices()
        cmats.append(ck)

    ml = np.asarray(mc.sum(axis=1)).ravel()
    lap = sp.diags(ml).tocsr() - mc
    lap.sort_indices()

    mgamma = np.zeros(n)
    np.add.at(mgamma, mesh.boundary.node, mesh.boundary.weight)

    # off-diagonal directed edges in CSR order, with transpose lookup
    coo = mc.tocoo()
    off = coo.row != coo.col
    erow = coo.row[off].astype(np.int64)
    ecol = coo.col[off].astype(np.int64)
    emij = coo.data[off].copy()
    ec = np.column_stack([np.asarray(cmats[k][erow, ecol]).ravel() for k in range(d)])
    eptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(eptr, erow + 1, 1)
    eptr = np.cumsum(eptr)
    perm = sp.csr_matrix((np.arange(len(erow)), (erow, ecol)), shape=(n, n))
    etrans = perm.T.tocsr()
    etrans.sort_indices()
    etrans = etrans.data.astype(np.int64)

    dg = assemble_dg_gradient(mesh)
    return FemOperators(mesh=mesh, mc=mc, ml=ml, mgamma=mgamma, laplacian=lap,
                        cmat=tuple(cmats), eptr=eptr, erow=erow, ecol=ecol,
                        ec=np.ascontiguousarray(ec), emij=emij, etrans=etrans, dg=dg)


def assemble_dg_gradient(mesh: Mesh) -> DgGradient:
    """Mixed gradient onto the discontinuous vertex space.

    One DG node per element vertex; the quadrature places its points at
    those vertices with tensor-trapezoidal weights |K|/npe, so that
    (matrix @ b)[d*m + k] = w_m * d(b_h)/dx_k at z_m. Exact for the 1D
    integrals int(psi_i * dphi_j/dx); the vertex-quadrature variant in 2D.
    """
    d = mesh.dimension
    corners = _CORNERS[d]
    npe = corners.shape[0]
    h = np.array([mesh.dx] if d == 1 else [mesh.dx, mesh.dy])
    volume = float(np.prod(h))
    w = volume / npe
    grad_at_corners = _shape_gradients(corners, corners) / h  # (npe, npe, d)

    elems = mesh.elements
    n_el = mesh.n_elements
    m_h = npe * n_el

    points = mesh.coords[elems.ravel()]
    weights = np.full(m_h, w)

    # rows: for DG node m = e*npe + a, component k -> row d*m + k
    dg_nodes = np.arange(m_h).reshape(n_el, npe)
    rows = (d * dg_nodes[:, :, None, None] + np.arange(d)[None, None, None, :])
    rows = np.broadcast_to(rows, (n_el, npe, npe, d)).ravel()
    cols = np.broadcast_to(elems[:, None, :, None], (n_el, npe, npe, d)).ravel()
    data = np.broadcast_to((w * grad_at_corners)[None], (n_el, npe, npe, d)).ravel()
    matrix = sp.coo_matrix((data, (rows, cols)), shape=(d * m_h, mesh.n_nodes)).tocsr()
    matrix.sort_indices()
    return DgGradient(matrix=matrix, points=points, weights=weights)
