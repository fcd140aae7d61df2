"""Command-line entry point: ``qnvp <subcommand> [--config FILE] [--set k=v] [--output DIR]``.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from ..bounds import NormSpec, TimeSeriesSup, log_B, phi_psi, rate_field, rate_kinetic, weighted_sup_norm_log
from ..errors import NumericalError, UnknownSubcommand, ValidationError
from ..phase_space import PhaseGrid, read_field_csv, read_profile_csv, write_field_csv, write_profile_csv
from ..scaling import ScalingMap, field_rescale_identity_check, quasineutral_residual, rescale_solution
from ..transport import read_cloud_csv, wasserstein_entropic, wasserstein_exact
from ..vlasov import SolverConfig, Trajectory, evolve, landau_initial
from .config import load_config
from .persistence import Report, prepare_output, write_report
from .studies import run_study

SUBCOMMANDS = ("simulate", "wasserstein", "norms", "bounds", "verify-scaling", "study", "aset-report")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (dotted for nested tables)")
    common.add_argument("--output", default="out", help="output directory")
    common.add_argument("--force", action="store_true", help="overwrite a completed run")
    p = _Parser(prog="qnvp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command")
    sub.add_parser("simulate", parents=[common], help="run the Vlasov-Poisson solver")
    w = sub.add_parser("wasserstein", parents=[common], help="distance between two cloud CSV files")
    w.add_argument("cloud_a")
    w.add_argument("cloud_b")
    w.add_argument("--q", type=int, default=1)
    w.add_argument("--method", choices=("exact", "entropic"), default="exact")
    n = sub.add_parser("norms", parents=[common], help="weighted sup norm of a (t, sup) CSV series")
    n.add_argument("series")
    n.add_argument("--epsilon", type=float, default=1.0)
    sub.add_parser("bounds", parents=[common], help="tabulate rate predictions over eps_list")
    v = sub.add_parser("verify-scaling", parents=[common], help="check the rescaling on a simulate run")
    v.add_argument("run_dir")
    v.add_argument("--epsilon", type=float, required=True)
    sub.add_parser("study", parents=[common], help="run the study named in the config")
    sub.add_parser("aset-report", parents=[common], help="run the A-set membership report")
    return p


def _emit(record: dict) -> None:
    print(json.dumps(record, sort_keys=True))


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.set, require_file=False)
    p = {"alpha": 0.01, "wavenumber_index": 1, "z_shift": 0.0, "epsilon": 1.0, "snapshot_times": None,
         **cfg.params}
    out = prepare_output(args.output, args.force)
    started = time.time()
    g = cfg.grid
    grid = PhaseGrid(g.nx, g.nv, g.length, g.vmax)
    dt, t_end = cfg.solver.dt, cfg.solver.t_end
    snaps = p["snapshot_times"] or [round(t_end - i * dt, 12) for i in (2, 1, 0) if t_end - i * dt >= 0]
    f0 = landau_initial(p["alpha"], p["wavenumber_index"], p["z_shift"], grid)
    traj = evolve(f0, SolverConfig(grid, dt, t_end, p["epsilon"]), snaps)
    rep = Report("simulate")
    diag = rep.table("diagnostics", ["t", "mass", "kinetic_energy", "field_energy", "min_f"], "vlasov.evolve")
    for row in traj.diagnostics_array():
        diag.add(*row)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for i, (f, E) in enumerate(zip(traj.fields, traj.efields)):
        write_field_csv(snap_dir / f"f_{i:04d}.csv", f)
        write_profile_csv(snap_dir / f"E_{i:04d}.csv", E)
    rep.summary.update(n_snapshots=len(traj.fields), epsilon=p["epsilon"])
    write_report(rep, out, cfg.to_dict(), started)
    print(rep.summary_text(), end="")
    return 0


def _load_run(run_dir) -> Trajectory:
    d = Path(run_dir) / "snapshots"
    fs = sorted(d.glob("f_*.csv"))
    if not fs:
        raise ValidationError(f"no snapshots under {d}")
    traj = Trajectory()
    for f in fs:
        field = read_field_csv(f)
        E = read_profile_csv(d / f.name.replace("f_", "E_"))
        traj.times.append(field.time)
        traj.fields.append(field)
        traj.efields.append(E)
    return traj


def _uniform_tail(times) -> int:
    """Length of the longest run of equally spaced times ending at the last one."""
    d = np.diff(times)
    n = 1
    while n <= d.size and abs(d[-n] - d[-1]) <= 1e-9 * abs(d[-1]):
        n += 1
    return n if d.size else 1


def cmd_verify_scaling(args) -> int:
    traj = _load_run(args.run_dir)
    smap = ScalingMap.from_epsilon(args.epsilon, traj.fields[0].grid)
    h = rescale_solution(traj, smap)
    mass_error = max(abs(a.mass - b.mass) for a, b in zip(h.fields, traj.fields))
    record = {"epsilon": args.epsilon, "mass_error": mass_error}
    tail = _uniform_tail(h.times)
    if tail >= 3:
        record["pde_residual"], record["gauss_residual"] = quasineutral_residual(
            h.fields[-tail:], h.efields[-tail:], args.epsilon)
    En = np.stack([E.values for E in traj.efields])[None]
    Eq = np.stack([E.values for E in h.efields])[None]
    record["identity_errors"] = {
        f"l={l},k=0": field_rescale_identity_check(En, Eq, l, 0, smap)["rel_error"] for l in range(3)
    }
    _emit(record)
    return 0


def cmd_wasserstein(args) -> int:
    a, b = read_cloud_csv(args.cloud_a), read_cloud_csv(args.cloud_b)
    if args.method == "exact":
        value, plan = wasserstein_exact(a, b, args.q)
        residuals = [plan.row_residual, plan.col_residual]
    else:
        value, residuals = wasserstein_entropic(a, b, args.q), None
    _emit({"method": args.method, "q": args.q, "value": value, "residuals": residuals})
    return 0


def cmd_norms(args) -> int:
    cfg = load_config(args.config, args.set, require_file=False)
    data = np.loadtxt(args.series, delimiter=",", comments="#", ndmin=2)
    series = TimeSeriesSup(data[:, 0], data[:, 1])
    n = cfg.norm
    spec = NormSpec(a=n.a, t0=n.t0, k=n.k, m=n.m, epsilon=args.epsilon)
    log_norm, t_arg = weighted_sup_norm_log(series, spec)
    _emit({"norm_value_log": log_norm, "argmax_time": t_arg, "exponent": spec.exponent})
    return 0


def cmd_bounds(args) -> int:
    cfg = load_config(args.config, args.set, require_file=False)
    n = cfg.norm
    d = int(cfg.params.get("d", 1))
    K0 = int(cfg.params.get("K0", 1))
    z = float(cfg.params.get("z", 0.0))
    print("eps,log_B,log_rate_kinetic,log_rate_field_l1,log_phi,log_psi")
    for e in cfg.eps_list:
        if not 0 < e < 1:
            raise ValidationError("bounds need eps in (0, 1)")
        pp = phi_psi(e, z, d, K0)
        row = [e, log_B(e, n.a, n.m, n.t0), rate_kinetic(e, n.a, n.m, n.t0),
               rate_field(e, n.a, n.m, n.t0, 1), pp.log_phi, pp.log_psi]
        print(",".join(repr(float(x)) for x in row))
    return 0


def cmd_study(args, kind=None) -> int:
    overrides = list(args.set) + ([f'kind="{kind}"'] if kind else [])
    cfg = load_config(args.config, overrides, require_file=kind is None)
    out = prepare_output(args.output, args.force)
    started = time.time()
    rep = run_study(cfg)
    write_report(rep, out, cfg.to_dict(), started)
    print(rep.summary_text(), end="")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and not argv[0].startswith("-") and argv[0] not in SUBCOMMANDS:
            raise UnknownSubcommand(f"unknown subcommand {argv[0]!r}; choose from {', '.join(SUBCOMMANDS)}")
        args = _parser().parse_args(argv)
        if args.command is None:
            raise UnknownSubcommand(f"missing subcommand; choose from {', '.join(SUBCOMMANDS)}")
        handlers = {
            "simulate": cmd_simulate, "wasserstein": cmd_wasserstein, "norms": cmd_norms,
            "bounds": cmd_bounds, "verify-scaling": cmd_verify_scaling, "study": cmd_study,
            "aset-report": lambda a: cmd_study(a, kind="aset-report"),
        }
        return handlers[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
