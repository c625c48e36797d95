"""Field snapshot CSVs consumed by the plotting frontend and `report`.

Columns: x[,y],b,b_ref,h,hv_x[,hv_y],H in node order; errors.csv carries the
per-step diagnostics (step,t,J,db_norm,l2_error).
"""

import numpy as np

from .errors import ConfigError


def write_field_csv(path, mesh, b, b_ref, state):
    d = mesh.dimension
    H = state.h + b
    cols = [("x", mesh.coords[:, 0])]
    if d == 2:
        cols.append(("y", mesh.coords[:, 1]))
    cols += [("b", b), ("b_ref", b_ref), ("h", state.h), ("hv_x", state.hv[:, 0])]
    if d == 2:
        cols.append(("hv_y", state.hv[:, 1]))
    cols.append(("H", H))
    header = ",".join(name for name, _ in cols)
    data = np.column_stack([vals for _, vals in cols])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_field_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise ConfigError(f"{path}: {data.shape[1]} columns, header names {len(header)}")
    return {name: data[:, k] for k, name in enumerate(header)}


def write_errors_csv(path, records):
    with open(path, "w") as fh:
        fh.write("step,t,J,db_norm,l2_error\n")
        for r in records:
            fh.write(f"{r.step},{r.t:.17g},{r.objective:.17g},"
                     f"{r.db_norm:.17g},{r.l2_error:.17g}\n")


def write_convergence_csv(path, rows_by_method):
    """rows_by_method: list of (method, [ConvergenceRow])."""
    with open(path, "w") as fh:
        fh.write("method,dx,error,rate\n")
        for method, rows in rows_by_method:
            for r in rows:
                fh.write(f"{method},{r.dx:.17g},{r.error:.17g},{r.rate:.17g}\n")
