#!/usr/bin/env python3
"""Compare the compiled edge kernels against the numpy fallback.

Times the artificial-diffusion, low-order, and limited high-order kernels on
the 1D channel and 2D square meshes, and cross-checks that both backends
produce identical right-hand sides.
"""

import argparse
import time

import numpy as np

from bathyrec.fem import assemble_operators
from bathyrec.forward import _kernels_py as numpy_kernels
from bathyrec.mesh import build_structured_mesh

try:
    from bathyrec.forward import _kernels as compiled_kernels
except ImportError:
    compiled_kernels = None


def make_case(dim, n):
    if dim == 1:
        mesh = build_structured_mesh((0.0, 25.0), n)
    else:
        mesh = build_structured_mesh(((0.0, 25.0), (0.0, 25.0)), n, n)
    ops = assemble_operators(mesh)
    rng = np.random.default_rng(0)
    nn = mesh.n_nodes
    h = 2.0 + 0.3 * rng.standard_normal(nn)
    hv = 4.0 + 0.5 * rng.standard_normal((nn, dim))
    b = 0.2 * rng.standard_normal(nn)
    return ops, h, hv, hv / h[:, None], b, rng.standard_normal(nn), \
        rng.standard_normal((nn, dim))


def run(module, ops, h, hv, v, b, hdot, hvdot, reps):
    g = 9.81
    n = len(h)
    dij = module.compute_dij(ops.eptr, ops.erow, ops.ecol, ops.ec, ops.etrans, h, v, g)
    times = {}
    for name, fn in (
        ("dij", lambda: module.compute_dij(ops.eptr, ops.erow, ops.ecol, ops.ec,
                                           ops.etrans, h, v, g)),
        ("alf", lambda: module.alf_edge_rhs(n, ops.erow, ops.ecol, ops.ec, dij,
                                            h, hv, v, b, g, 1.0, 1.0)),
        ("mcl", lambda: module.mcl_edge_rhs(n, ops.eptr, ops.erow, ops.ecol,
                                            ops.ec, ops.emij, ops.etrans, dij,
                                            h, hv, v, b, hdot, hvdot, g, 1.0, 1.0)),
    ):
        t0 = time.perf_counter()
        for _ in range(reps):
            out = fn()
        times[name] = (time.perf_counter() - t0) / reps
    return times, out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=50)
    args = ap.parse_args()

    for dim, n in ((1, 800), (2, 50), (2, 100)):
        case = make_case(dim, n)
        label = f"{dim}D n={n} ({len(case[0].erow)} edges)"
        t_py, out_py = run(numpy_kernels, *case, args.reps)
        line = f"{label:28s} numpy: " + " ".join(
            f"{k}={v * 1e3:8.3f}ms" for k, v in t_py.items())
        print(line)
        if compiled_kernels is None:
            print(f"{'':28s} compiled kernels not built")
            continue
        t_cy, out_cy = run(compiled_kernels, *case, args.reps)
        print(f"{'':28s} cython:" + " ".join(
            f" {k}={v * 1e3:8.3f}ms" for k, v in t_cy.items())
            + f"   speedup mcl x{t_py['mcl'] / t_cy['mcl']:.1f}")
        err = max(np.abs(out_py[0] - out_cy[0]).max(),
                  np.abs(out_py[1] - out_cy[1]).max())
        print(f"{'':28s} backend max deviation: {err:.2e}")


if __name__ == "__main__":
    main()
