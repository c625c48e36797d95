"""Mesh construction and finite-element operator assembly."""

import numpy as np
import pytest
import sympy as sym

from bathyrec.errors import ConfigError
from bathyrec.fem import assemble_dg_gradient, assemble_operators
from bathyrec.mesh import build_structured_mesh


@pytest.fixture(scope="module")
def ops1d():
    return assemble_operators(build_structured_mesh((0.0, 25.0), 100))


@pytest.fixture(scope="module")
def ops2d():
    return assemble_operators(build_structured_mesh(((0.0, 25.0), (0.0, 25.0)), 10, 10))


def test_mesh_1d_counts():
    mesh = build_structured_mesh((0.0, 25.0), 100)
    assert mesh.n_nodes == 101
    assert mesh.n_elements == 100
    assert mesh.dx == pytest.approx(0.25)


def test_mesh_smallest():
    mesh = build_structured_mesh((0.0, 1.0), 1)
    assert mesh.n_nodes == 2
    assert mesh.n_elements == 1


def test_mesh_2d_counts():
    mesh = build_structured_mesh(((0.0, 25.0), (0.0, 25.0)), 50, 50)
    assert mesh.n_nodes == 2601
    assert mesh.n_elements == 2500
    boundary = mesh.boundary_nodes
    assert len(boundary) == 4 * 50  # nodes on the four sides, corners once


def test_mesh_rejects_bad_input():
    with pytest.raises(ConfigError):
        build_structured_mesh((0.0, 1.0), 0)
    with pytest.raises(ConfigError):
        build_structured_mesh((1.0, 0.0), 4)
    with pytest.raises(ConfigError):
        build_structured_mesh(((0.0, 1.0), (0.0, 1.0)), 3, -1)


def test_mesh_validate_invariants():
    for mesh in (build_structured_mesh((0.0, 2.0), 7),
                 build_structured_mesh(((0.0, 2.0), (0.0, 3.0)), 4, 5)):
        mesh.validate()
        npe = mesh.elements.shape[1]
        for el in mesh.elements:
            assert len(set(el.tolist())) == npe


def test_1d_local_mass_entries(ops1d):
    # interior node: m_i = dx, off-diagonal m_ij = dx/6
    assert ops1d.ml[50] == pytest.approx(0.25)
    assert ops1d.mc[50, 51] == pytest.approx(0.25 / 6.0)
    assert ops1d.ml[0] == pytest.approx(0.125)


def test_1d_gradient_entries_vs_symbolic(ops1d):
    # oracle: exact symbolic integration of phi_i * phi_j' on one element
    x, dx = sym.symbols("x dx", positive=True)
    phi0 = 1 - x / dx
    phi1 = x / dx
    c01 = sym.integrate(phi0 * sym.diff(phi1, x), (x, 0, dx))
    c00 = sym.integrate(phi0 * sym.diff(phi0, x), (x, 0, dx))
    assert float(c01) == pytest.approx(0.5)
    assert ops1d.cmat[0][50, 51] == pytest.approx(float(c01))
    assert ops1d.cmat[0][50, 49] == pytest.approx(-0.5)
    assert ops1d.cmat[0][0, 0] == pytest.approx(float(c00))


def test_2d_local_matrices_vs_symbolic():
    # oracle: symbolic integration on one hx-by-hy element
    ops = assemble_operators(build_structured_mesh(((0.0, 2.0), (0.0, 3.0)), 1, 1))
    xs, ys = sym.symbols("xs ys")
    hx, hy = 2.0, 3.0
    basis = [(1 - xs) * (1 - ys), xs * (1 - ys), xs * ys, (1 - xs) * ys]
    for a in range(4):
        for bq in range(4):
            m_ref = sym.integrate(basis[a] * basis[bq], (xs, 0, 1), (ys, 0, 1)) * hx * hy
            assert ops.mc[a if a < 2 else 5 - a, bq if bq < 2 else 5 - bq] == \
                pytest.approx(float(m_ref), abs=1e-14)
            cx_ref = sym.integrate(basis[a] * sym.diff(basis[bq], xs), (xs, 0, 1),
                                   (ys, 0, 1)) * hy
            i = a if a < 2 else 5 - a       # CCW local order -> node ids
            j = bq if bq < 2 else 5 - bq
            assert ops.cmat[0][i, j] == pytest.approx(float(cx_ref), abs=1e-14)


@pytest.mark.parametrize("fixture", ["ops1d", "ops2d"])
def test_row_sum_and_volume(fixture, request):
    ops = request.getfixturevalue(fixture)
    row_sums = np.asarray(ops.mc.sum(axis=1)).ravel()
    assert np.abs(row_sums - ops.ml).max() <= 1e-13 * ops.ml.max()
    volume = 25.0 if fixture == "ops1d" else 625.0
    assert ops.ml.sum() == pytest.approx(volume, rel=1e-12)
    assert np.all(ops.ml > 0.0)


@pytest.mark.parametrize("fixture", ["ops1d", "ops2d"])
def test_graph_laplacian_annihilates_constants(fixture, request):
    ops = request.getfixturevalue(fixture)
    ones = np.ones(ops.n_nodes)
    assert np.abs(ops.laplacian @ ones).max() <= 1e-13


def test_c_skew_symmetry_interior_pairs(ops2d):
    mesh = ops2d.mesh
    interior = ~np.isin(np.arange(mesh.n_nodes), mesh.boundary_nodes)
    for k in range(len(ops2d.erow)):
        i, j = ops2d.erow[k], ops2d.ecol[k]
        if interior[i] and interior[j]:
            assert np.abs(ops2d.ec[k] + ops2d.ec[ops2d.etrans[k]]).max() <= 1e-13


def test_c_pair_sum_equals_boundary_integral(ops1d):
    # c_ij + c_ji equals the boundary integral of phi_i phi_j n
    n = ops1d.n_nodes
    c = ops1d.cmat[0]
    assert c[0, 0] + c[0, 0] == pytest.approx(-1.0)       # left end, n = -1
    assert c[n - 1, n - 1] * 2 == pytest.approx(1.0)      # right end, n = +1
    assert c[0, 1] + c[1, 0] == pytest.approx(0.0, abs=1e-14)


def test_boundary_mass(ops1d, ops2d):
    assert ops1d.mgamma[0] == pytest.approx(1.0)
    assert ops1d.mgamma[-1] == pytest.approx(1.0)
    assert np.all(ops1d.mgamma[1:-1] == 0.0)
    # 2D: edge midside node gets dx, corner gets dx/2 + dy/2
    mesh = ops2d.mesh
    corner = 0
    assert ops2d.mgamma[corner] == pytest.approx(0.5 * mesh.dx + 0.5 * mesh.dy)
    assert ops2d.mgamma.sum() == pytest.approx(4 * 25.0, rel=1e-12)


def test_transpose_edge_lookup(ops2d):
    assert np.all(ops2d.erow[ops2d.etrans] == ops2d.ecol)
    assert np.all(ops2d.ecol[ops2d.etrans] == ops2d.erow)


def test_per_edge_access_helper(ops1d):
    k = ops1d.edge_index(50, 51)
    assert ops1d.erow[k] == 50 and ops1d.ecol[k] == 51
    with pytest.raises(KeyError):
        ops1d.edge_index(0, 50)


def test_dg_gradient_annihilates_constants(ops2d):
    ones = np.ones(ops2d.n_nodes)
    assert np.abs(ops2d.dg.matrix @ ones).max() == 0.0


def test_dg_gradient_1d_linear_field():
    mesh = build_structured_mesh((0.0, 25.0), 4)
    dg = assemble_dg_gradient(mesh)
    vals = (dg.matrix @ mesh.coords[:, 0]) / dg.weights
    assert np.abs(vals - 1.0).max() <= 1e-13


def test_dg_gradient_1d_vs_symbolic_element():
    # oracle: A entries = int psi_i phi_j' on one element
    mesh = build_structured_mesh((0.0, 2.0), 1)
    dg = assemble_dg_gradient(mesh)
    x = sym.Symbol("x")
    dxe = 2.0
    phi = [1 - x / dxe, x / dxe]
    psi = [1 - x / dxe, x / dxe]
    for i in range(2):
        for j in range(2):
            ref = float(sym.integrate(psi[i] * sym.diff(phi[j], x), (x, 0, dxe)))
            assert dg.matrix[i, j] == pytest.approx(ref, abs=1e-14)


def test_dg_gradient_2d_affine_and_shape():
    mesh = build_structured_mesh(((0.0, 1.0), (0.0, 1.0)), 1, 1)
    dg = assemble_dg_gradient(mesh)
    assert dg.matrix.shape == (4 * 2, 4)
    mesh = build_structured_mesh(((0.0, 25.0), (0.0, 25.0)), 5, 5)
    dg = assemble_dg_gradient(mesh)
    field = 3.0 * mesh.coords[:, 0] - 2.0 * mesh.coords[:, 1]
    vals = dg.matrix @ field
    gx = vals[0::2] / dg.weights
    gy = vals[1::2] / dg.weights
    assert np.abs(gx - 3.0).max() <= 1e-12
    assert np.abs(gy + 2.0).max() <= 1e-12


def test_dg_quadrature_weights(ops2d):
    dg = ops2d.dg
    assert np.all(dg.weights > 0.0)
    assert dg.weights.sum() == pytest.approx(625.0, rel=1e-12)
