"""Command-line interface.

Subcommands: forward (truth run + observation dump), noise (perturb an
observation file), reconstruct (time-loop reconstruction), converge
(refinement study), report (recompute errors from saved fields).

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 optimizer non-convergence (with run.on_opt_failure = halt).
"""

import argparse
import os
import sys

import numpy as np

from .errors import (BathyrecError, ConfigError, ForwardSolveError,
                     LinearSolverError, OptimizerError)
from .fieldcsv import (read_field_csv, write_convergence_csv, write_errors_csv,
                       write_field_csv)
from .metrics import (convergence_study, l2_error, l2_error_vs_function,
                      run_reconstruction)
from .observations import (add_noise, generate_observations,
                           load_observations, save_observations)
from .runconfig import (apply_overrides, build_scenario, load_config,
                        serialize_scenario)
from .scenarios import SCENARIO_NAMES


def _add_common(parser):
    parser.add_argument("--config", help="path to a flat key=value config file")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE", help="config override (repeatable)")
    parser.add_argument("--scenario", choices=SCENARIO_NAMES,
                        help="scenario preset (alternative to config file)")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--deterministic", action="store_true",
                        help="assert bit-reproducible outputs (runs are "
                             "single-threaded and seeded either way)")


def _scenario_from_args(args):
    cfg = load_config(args.config) if args.config else {}
    if args.scenario:
        cfg.setdefault("scenario", args.scenario)
    cfg = apply_overrides(cfg, args.override)
    scen = build_scenario(cfg)
    if args.out:
        scen.output_dir = args.out
    return scen


def _prepare_outdir(scen):
    os.makedirs(scen.output_dir, exist_ok=True)
    with open(os.path.join(scen.output_dir, "run_config.txt"), "w") as fh:
        fh.write(serialize_scenario(scen))
    return scen.output_dir


def _observations_for(scen, ops):
    if scen.observations_path:
        return load_observations(scen.observations_path)
    obs = generate_observations(scen, ops)
    if scen.noise_sigma > 0.0:
        obs = add_noise(obs, scen.noise_sigma, scen.noise_seed, scen.noise_mode)
    return obs


def cmd_forward(args):
    scen = _scenario_from_args(args)
    outdir = _prepare_outdir(scen)
    ops = scen.build_operators()
    obs, final_state = generate_observations(scen, ops, return_state=True)
    path = os.path.join(outdir, "observations.txt")
    save_observations(obs, path)
    b_ref = scen.reference_bathymetry(ops.mesh.coords)
    write_field_csv(os.path.join(outdir, "fields_truth.csv"),
                    ops.mesh, b_ref, b_ref, final_state)
    print(f"wrote {path} ({obs.n_steps} steps, {ops.n_nodes} nodes)")
    return 0


def cmd_noise(args):
    scen = _scenario_from_args(args)
    outdir = _prepare_outdir(scen)
    src = args.input or scen.observations_path
    if not src:
        raise ConfigError("noise: provide --input or the 'observations' key")
    obs = load_observations(src)
    noisy = add_noise(obs, scen.noise_sigma, scen.noise_seed, scen.noise_mode)
    path = os.path.join(outdir, "observations_noisy.txt")
    save_observations(noisy, path)
    print(f"wrote {path} (sigma={scen.noise_sigma}, seed={scen.noise_seed}, "
          f"mode={scen.noise_mode})")
    return 0


def cmd_reconstruct(args):
    scen = _scenario_from_args(args)
    outdir = _prepare_outdir(scen)
    ops = scen.build_operators()
    obs = _observations_for(scen, ops)
    snapshots = scen.output_every if scen.output_every > 0 else 0
    run, _ = run_reconstruction(scen, observations=obs, ops=ops,
                                snapshot_every=snapshots)
    write_errors_csv(os.path.join(outdir, "errors.csv"), run.records)
    b_ref = scen.reference_bathymetry(ops.mesh.coords)
    for step, b_snap, state_snap in run.snapshots:
        write_field_csv(os.path.join(outdir, f"fields_step{step:06d}.csv"),
                        ops.mesh, b_snap, b_ref, state_snap)
    write_field_csv(os.path.join(outdir, "fields_final.csv"),
                    ops.mesh, run.b, b_ref, run.state)
    err_nodal = l2_error(run.b, b_ref, ops.ml)
    err_quad = l2_error_vs_function(run.b, scen.reference_bathymetry, ops.mesh)
    print(f"method={scen.method} steps={run.n_steps} "
          f"l2_error={err_quad:.6e} l2_error_nodal={err_nodal:.6e} "
          f"opt_failures={run.opt_failures}")
    return 0


def cmd_converge(args):
    scen = _scenario_from_args(args)
    outdir = _prepare_outdir(scen)
    meshes = [int(v) for v in args.meshes.split(",")]
    methods = args.methods.split(",") if args.methods else [scen.method]
    results = []
    for method in methods:
        rows = convergence_study(scen, meshes, method=method)
        results.append((method, rows))
        for r in rows:
            print(f"{method}  dx={r.dx:<10g} error={r.error:.6e} rate={r.rate:.3f}")
    write_convergence_csv(os.path.join(outdir, "convergence.csv"), results)
    print(f"wrote {os.path.join(outdir, 'convergence.csv')}")
    return 0


def cmd_report(args):
    total = 0
    for path in args.fields:
        data = read_field_csv(path)
        cols = set(data)
        if not {"x", "b", "b_ref"} <= cols:
            raise ConfigError(f"{path}: missing required columns (x, b, b_ref)")
        # reconstruct the lumped mass from the structured node coordinates
        if "y" in cols:
            xs = np.unique(data["x"])
            ys = np.unique(data["y"])
            dx, dy = np.diff(xs).mean(), np.diff(ys).mean()
            wx = np.where(np.isin(data["x"], (xs[0], xs[-1])), 0.5, 1.0)
            wy = np.where(np.isin(data["y"], (ys[0], ys[-1])), 0.5, 1.0)
            ml = dx * dy * wx * wy
        else:
            xs = np.unique(data["x"])
            dx = np.diff(xs).mean()
            ml = np.full(len(data["x"]), dx)
            ml[[0, -1]] = 0.5 * dx
        err = l2_error(data["b"], data["b_ref"], ml)
        print(f"{path}: l2_error_nodal={err:.6e}")
        total += 1
    return 0 if total else 2


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="bathyrec",
        description="Shallow-water forward runs and bathymetry reconstruction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="truth run, dump observations")
    _add_common(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("noise", help="perturb an observation file")
    _add_common(p)
    p.add_argument("--input", help="observation file to perturb")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("reconstruct", help="time-loop reconstruction")
    _add_common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("converge", help="mesh refinement study")
    _add_common(p)
    p.add_argument("--meshes", default="100,200,400,800",
                   help="comma-separated element counts")
    p.add_argument("--methods", default="",
                   help="comma-separated methods (default: config method)")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("report", help="recompute errors from field CSVs")
    p.add_argument("fields", nargs="+", help="field CSV paths")
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ForwardSolveError, LinearSolverError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except OptimizerError as exc:
        print(f"optimizer failure: {exc}", file=sys.stderr)
        return 4
    except BathyrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
