"""Structured meshes: 1D segments and 2D bilinear quadrilaterals.

Node ordering is lexicographic (x fastest). Quadrilateral connectivity is
counterclockwise. Boundary facets carry outward normals and lumped measures;
in 1D a "facet" is a single endpoint with measure 1 (point evaluation).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

INFLOW = 0
OUTFLOW = 1


@dataclass
class BoundaryFacets:
    """Per facet-node entry: node index, outward normal, lumped weight, tag."""

    node: np.ndarray      # (nb,) int
    normal: np.ndarray    # (nb, d)
    weight: np.ndarray    # (nb,) lumped facet measure attributed to the node
    tag: np.ndarray       # (nb,) int, INFLOW/OUTFLOW

    def __len__(self):
        return len(self.node)


@dataclass
class Mesh:
    dimension: int
    coords: np.ndarray            # (N, d) node coordinates in meters
    elements: np.ndarray          # (n_el, 2) segments or (n_el, 4) CCW quads
    boundary: BoundaryFacets
    nx: int
    ny: int = 0
    bounds: tuple = ()

    @property
    def n_nodes(self):
        return self.coords.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def dx(self):
        lo, hi = self.bounds[0]
        return (hi - lo) / self.nx

    @property
    def dy(self):
        lo, hi = self.bounds[1]
        return (hi - lo) / self.ny

    @property
    def boundary_nodes(self):
        return np.unique(self.boundary.node)

    def validate(self):
        """Check structural invariants; raises AssertionError on violation."""
        npe = 2 if self.dimension == 1 else 4
        assert self.elements.shape[1] == npe
        for el in self.elements:
            assert len(set(el.tolist())) == npe
            assert el.min() >= 0 and el.max() < self.n_nodes
        if self.dimension == 2:
            # counterclockwise orientation: positive cross products
            p = self.coords[self.elements]
            for a, bq, c in ((0, 1, 2), (1, 2, 3), (2, 3, 0)):
                v1 = p[:, bq] - p[:, a]
                v2 = p[:, c] - p[:, bq]
                assert np.all(v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0] > 0)

    def tag_boundary(self, velocity):
        """Assign inflow/outflow tags from a reference velocity vector."""
        v = np.atleast_1d(np.asarray(velocity, dtype=float))
        vn = self.boundary.normal @ v
        self.boundary.tag = np.where(vn < 0.0, INFLOW, OUTFLOW).astype(np.int64)


def build_structured_mesh(domain_bounds, nx, ny=None):
    """Build a uniform segment (1D) or quadrilateral (2D) mesh.

    Parameters
    ----------
    domain_bounds : (lo, hi) in 1D or ((xlo, xhi), (ylo, yhi)) in 2D
    nx, ny : element counts per direction; ny omitted/None selects 1D.
    """
    if ny is None:
        (lo, hi) = domain_bounds
        if nx < 1:
            raise ConfigError(f"nx must be >= 1, got {nx}")
        if not hi > lo:
            raise ConfigError(f"degenerate bounds [{lo}, {hi}]")
        x = np.linspace(lo, hi, nx + 1)
        coords = x[:, None]
        elements = np.column_stack([np.arange(nx), np.arange(1, nx + 1)])
        boundary = BoundaryFacets(
            node=np.array([0, nx], dtype=np.int64),
            normal=np.array([[-1.0], [1.0]]),
            weight=np.array([1.0, 1.0]),
            tag=np.zeros(2, dtype=np.int64),
        )
        return Mesh(1, coords, elements.astype(np.int64), boundary,
                    nx=nx, bounds=((lo, hi),))

    (xlo, xhi), (ylo, yhi) = domain_bounds
    if nx < 1 or ny < 1:
        raise ConfigError(f"nx, ny must be >= 1, got {nx}, {ny}")
    if not (xhi > xlo and yhi > ylo):
        raise ConfigError("degenerate domain bounds")
    xs = np.linspace(xlo, xhi, nx + 1)
    ys = np.linspace(ylo, yhi, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    coords = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    elements = np.empty((nx * ny, 4), dtype=np.int64)
    k = 0
    for j in range(ny):
        for i in range(nx):
            elements[k] = (nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1))
            k += 1

    dx = (xhi - xlo) / nx
    dy = (yhi - ylo) / ny
    bnode, bnormal, bweight = [], [], []

    def add_edge(n0, n1, normal, length):
        for n in (n0, n1):
            bnode.append(n)
            bnormal.append(normal)
            bweight.append(0.5 * length)

    for i in range(nx):  # bottom (n = -y) and top (n = +y)
        add_edge(nid(i, 0), nid(i + 1, 0), (0.0, -1.0), dx)
        add_edge(nid(i, ny), nid(i + 1, ny), (0.0, 1.0), dx)
    for j in range(ny):  # left (n = -x) and right (n = +x)
        add_edge(nid(0, j), nid(0, j + 1), (-1.0, 0.0), dy)
        add_edge(nid(nx, j), nid(nx, j + 1), (1.0, 0.0), dy)

    boundary = BoundaryFacets(
        node=np.asarray(bnode, dtype=np.int64),
        normal=np.asarray(bnormal, dtype=float),
        weight=np.asarray(bweight, dtype=float),
        tag=np.zeros(len(bnode), dtype=np.int64),
    )
    return Mesh(2, coords, elements, boundary, nx=nx, ny=ny,
                bounds=((xlo, xhi), (ylo, yhi)))
