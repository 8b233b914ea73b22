"""Command-line entry point.

Usage::

    mhfem mesh      CONFIG | --preset NAME
    mhfem run       CONFIG | --preset NAME
    mhfem converge  CONFIG | --preset NAME
    mhfem validate  CONFIG | --preset NAME
    mhfem export    STATE.npz [--format vtk|csv] [-o PATH]

Exit status: 0 on success (a run that did not converge is still a success
and records its status), 2 on a configuration error, 3 on a numerical
failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import echo_config, load_config
from .errors import (ConfigError, DivergenceError, GeometryError, HorizonError, MhfemError,
                     ParseError, SolveError)
from .fespace import build_spaces, interpolate_pieces
from .harness.export import export_csv, export_vtk, write_table
from .harness.manufactured import manufactured_case
from .harness.studies import (build_mesh, cross_validate, manufactured_convergence, oracle_for,
                              rect_convergence)
from .mesh import gen_strip_bidomain, mesh_quality
from .mesh_io import read_mesh, write_mesh
from .oracle1d import write_csv as write_profile_csv
from .stepper import Simulation

log = logging.getLogger("mhfem")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _prepare(cfg):
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, cfg.output_dir / "config.resolved.ini")
    return cfg.output_dir


def _scenario_mesh(cfg):
    if cfg.scenario == "manufactured":
        n = int(cfg.study.get("levels", (10,))[0])
        n0 = n - 1 if cfg.study.get("conformity", "nonconformal") == "nonconformal" else n
        return gen_strip_bidomain(1.0, 1.0, 0.0, 1.0, n0, n, n, n)
    return build_mesh(cfg.mesh)


def cmd_mesh(cfg):
    """Write the scenario mesh and its quality report."""
    out = _prepare(cfg)
    mesh = _scenario_mesh(cfg)
    write_mesh(mesh, out / "mesh.txt")
    q = mesh_quality(mesh)
    with open(out / "quality.json", "w") as fh:
        json.dump({"n_vertices": mesh.n_vertices, "n_triangles": mesh.n_triangles,
                   "h": mesh.h, "sigma1": q.sigma1, "sigma2": q.sigma2,
                   "min_angle": q.min_angle}, fh, indent=2, sort_keys=True)
    return out / "mesh.txt"


def _save_state(path, state, status, mesh_file, kappa_value):
    np.savez(path, w=state.w, lam=state.lam, t=state.t, step_index=state.step_index,
             steady_metric=state.steady_metric, status=status, mesh=str(mesh_file),
             kappa=kappa_value)


def cmd_run(cfg):
    """Run one simulation; writes snapshots, the final state and histories."""
    out = _prepare(cfg)
    if cfg.scenario == "manufactured":
        return _run_manufactured(cfg, out)
    mesh = build_mesh(cfg.mesh)
    mesh_file = out / "mesh.txt"
    write_mesh(mesh, mesh_file)
    params = cfg.params()
    sim = Simulation(mesh, params, cfg.stepper_config(), ale=cfg.ale())
    f = cfg.initial_field()
    w0 = interpolate_pieces(f, f, sim.spaces)
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)

    def hook(state):
        export_vtk(sim.spaces, state.w, snaps / f"state_{state.step_index:06d}.vtk",
                   title=f"t = {float(state.t)!r}")

    res = sim.run(w0, hook=hook, record_population=True)
    _save_state(out / "final_state.npz", res.state, res.status, mesh_file, sim.kappa)
    export_vtk(sim.spaces, res.state.w, out / "final_state.vtk", title=f"t = {float(res.state.t)!r}")
    rows = [[k + 1, m, c] for k, (m, c) in enumerate(zip(res.metrics, res.constraint_residuals))]
    export_csv(rows, out / "metrics.csv", ["step", "steady_metric", "constraint_residual"])
    export_csv(zip(res.times, res.populations), out / "population.csv", ["t", "population"])
    report = {"status": res.status, "steps": res.state.step_index, "t": res.state.t,
              "steady_metric": res.state.steady_metric, "kappa": sim.kappa,
              "max_constraint_residual": max(res.constraint_residuals, default=0.0)}
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    log.info("run finished: %s after %d steps", res.status, res.state.step_index)
    return report


def _run_manufactured(cfg, out):
    m = cfg.model
    case = manufactured_case(float(m["kappa"]), float(m["d0"]), float(m["d1"]), m["c"],
                             tau=float(cfg.stepper.get("tau", 1.0)))
    mesh = _scenario_mesh(cfg)
    write_mesh(mesh, out / "mesh.txt")
    sim = Simulation(mesh, case.params, cfg.stepper_config(tau=case.tau), forcing=case.forcing,
                     react=False)
    state = sim.step(sim.initial_state(np.zeros(sim.spaces.n_w)))
    _save_state(out / "final_state.npz", state, "CONVERGED", out / "mesh.txt", case.kappa)
    export_vtk(sim.spaces, state.w, out / "final_state.vtk")
    report = {"status": "CONVERGED", "steps": 1, "kappa": case.kappa, "robin_b": case.robin_b}
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return report


def cmd_converge(cfg):
    """Order table for the manufactured or rectangle scenarios."""
    out = _prepare(cfg)
    levels = [int(n) for n in cfg.study.get("levels", (10, 20, 40, 80))]
    if cfg.scenario == "manufactured":
        m = cfg.model
        res = manufactured_convergence(levels, float(m["kappa"]), float(m["d0"]), float(m["d1"]),
                                       m["c"], cfg.study.get("conformity", "nonconformal"),
                                       float(cfg.stepper.get("tau", 1.0)))
    elif cfg.scenario == "rect_shift":
        res = rect_convergence(cfg.mesh, cfg.params(), cfg.stepper_config(), cfg.initial_field(),
                               levels, int(cfg.study.get("ref_level", 2 * levels[-1])))
    else:
        raise ConfigError(f"converge supports manufactured and rect_shift, not {cfg.scenario}")
    conformity = cfg.mesh.get("conformity", cfg.study.get("conformity", ""))
    title = f"{cfg.preset or cfg.scenario} ({conformity})"
    write_table(res.levels, res.report, out / "table.txt", out / "table.csv", title=title)
    statuses = [r.status for r in res.runs]
    with open(out / "report.json", "w") as fh:
        json.dump({"levels": res.levels, "l2_error": res.report.l2_error,
                   "h1_semi_error": res.report.h1_semi_error, "l2_order": res.report.l2_order,
                   "h1_order": res.report.h1_order, "statuses": statuses}, fh, indent=2,
                  sort_keys=True)
    return res


def cmd_validate(cfg):
    """Compare strip cuts on each refinement level with the 1D oracle."""
    if cfg.scenario != "strip_validation":
        raise ConfigError(f"validate needs the strip_validation scenario, not {cfg.scenario}")
    out = _prepare(cfg)
    st = cfg.study
    params = cfg.params()
    oracle = oracle_for(params, float(cfg.mesh["L"]), float(cfg.mesh["L_far"]),
                        float(st.get("oracle_h0", 1.25e-3)), float(st.get("oracle_tau", 1.25e-3)),
                        float(st.get("oracle_tol", 1e-3)), float(st.get("rc", 1.005)))
    write_profile_csv(oracle, out / "oracle.csv")
    levels = [int(v) for v in st.get("levels", (1, 2))]
    taus = [float(v) for v in st.get("taus", [cfg.stepper.get("tau", 0.1)] * len(levels))]
    if len(taus) != len(levels):
        raise ConfigError("[study] taus and levels must have the same length")
    rows = []
    results = []
    for level, tau in zip(levels, taus):
        mesh = build_mesh(cfg.mesh, level)
        cmp_ = cross_validate(mesh, params, cfg.stepper_config(tau=tau), cfg.initial_field(),
                              oracle, float(st.get("y_cut", 0.5 * (cfg.mesh["y0"] + cfg.mesh["y1"]))))
        export_csv(zip(cmp_.x, cmp_.fem, cmp_.oracle), out / f"cut_level{level}.csv",
                   ["x", "fem", "oracle"])
        rows.append([level, tau, mesh.h, cmp_.error, cmp_.status, cmp_.steps])
        results.append(cmp_)
    export_csv(rows, out / "validation.csv", ["level", "tau", "h", "e_inf", "status", "steps"])
    return results


def cmd_export(state_path, fmt="vtk", out_path=None):
    """Convert a saved final state to VTK or a nodal CSV table."""
    state_path = Path(state_path)
    try:
        data = np.load(state_path)
    except OSError as exc:
        raise ConfigError(f"cannot read state {state_path}: {exc}") from None
    mesh_path = Path(str(data["mesh"]))
    if not mesh_path.is_absolute() and not mesh_path.exists():
        mesh_path = state_path.parent / mesh_path.name
    mesh = read_mesh(mesh_path)
    spaces = build_spaces(mesh)
    w = data["w"]
    if w.shape != (spaces.n_w,):
        raise ConfigError(f"state has {len(w)} values but the mesh has {spaces.n_w} dofs")
    if fmt == "vtk":
        out_path = Path(out_path or state_path.with_suffix(".vtk"))
        export_vtk(spaces, w, out_path, title=f"t = {float(data['t'])!r}")
    elif fmt == "csv":
        out_path = Path(out_path or state_path.with_suffix(".csv"))
        rows = []
        for sp_ in spaces.spaces:
            vals = sp_.local(w)
            rows.extend([float(x), float(y), sp_.subdomain, float(v)]
                        for (x, y), v in zip(sp_.coords, vals))
        export_csv(rows, out_path, ["x", "y", "subdomain", "density"])
    else:
        raise ConfigError(f"unknown export format {fmt!r}")
    return out_path


def build_parser():
    ap = argparse.ArgumentParser(prog="mhfem", description="Hybrid finite element solver for "
                                 "moving-habitat reaction-diffusion models.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("mesh", "run", "converge", "validate"):
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", help="INI config file")
        p.add_argument("--preset", help="built-in preset (base for the config file)")
    p = sub.add_parser("export")
    p.add_argument("state", help="final_state.npz written by 'run'")
    p.add_argument("--format", choices=("vtk", "csv"), default="vtk")
    p.add_argument("-o", "--output")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "export":
            path = cmd_export(args.state, args.format, args.output)
            print(path)
            return EXIT_OK
        cfg = load_config(args.config, args.preset)
        if args.command == "mesh":
            print(cmd_mesh(cfg))
        elif args.command == "run":
            report = cmd_run(cfg)
            print(f"{report['status']} after {report['steps']} steps -> {cfg.output_dir}")
        elif args.command == "converge":
            cmd_converge(cfg)
            print((cfg.output_dir / "table.txt").read_text(), end="")
        elif args.command == "validate":
            for cmp_, level in zip(cmd_validate(cfg), cfg.study.get("levels", (1, 2))):
                print(f"level {level}: e_inf = {cmp_.error:.3e} ({cmp_.status})")
        return EXIT_OK
    except (ConfigError, ParseError, GeometryError, HorizonError) as exc:
        print(f"mhfem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolveError, DivergenceError) as exc:
        print(f"mhfem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MhfemError as exc:
        print(f"mhfem: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
