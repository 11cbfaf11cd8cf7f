"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 ill-posed problem (initial value incompatible with the exponent).
"""

import argparse
import configparser
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis
from .errors import (FracvxError, IllConditioned, InvalidInitialValue, QuadratureFailure)
from .exponent import make_exponent
from .funclang import parse_expr
from .inversion import Composition, compose_residual
from .operators import Family, OperatorSpec, eval_forward
from .quadrature import default_grading, graded_mesh
from .solvers import AbelProblem, FdeProblem, solve_abel, solve_fde

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ILLPOSED = 0, 2, 3, 4

FAMILIES = {
    "abel-left": Family.ABEL_LEFT,
    "abel-right": Family.ABEL_RIGHT,
    "rl-left": Family.RL_LEFT,
    "rl-right": Family.RL_RIGHT,
    "tempered-left": Family.TEMPERED_LEFT,
    "tempered-right": Family.TEMPERED_RIGHT,
}

# flags every subcommand needs after config merging
REQUIRED = {
    "eval": ("family", "alpha", "g", "t"),
    "solve-abel": ("alpha", "f"),
    "solve-fde": ("alpha", "h"),
    "verify": (),
    "convergence": ("alpha", "f"),
}


class ConfigError(Exception):
    pass


def _worker_count():
    raw = os.environ.get("FRACVX_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"FRACVX_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; keys mirror flag names, flags win")
    common.add_argument("--dump-config", help="write the effective configuration here")
    common.add_argument("--out", help="output directory for CSV and summary files")

    parser = argparse.ArgumentParser(prog="fracvx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="forward operator value at t")
    p.add_argument("--family", choices=sorted(FAMILIES))
    p.add_argument("--alpha")
    p.add_argument("--g")
    p.add_argument("--t", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--accuracy", type=float, default=1e-10)

    for name, data in (("solve-abel", "f"), ("solve-fde", "h")):
        p = sub.add_parser(name, parents=[common], help=f"solve on a graded mesh ({data} data)")
        p.add_argument("--alpha")
        p.add_argument(f"--{data}")
        if name == "solve-fde":
            p.add_argument("--u0", type=float, default=0.0)
        p.add_argument("--T", type=float, default=1.0)
        p.add_argument("--N", type=int, default=256)
        p.add_argument("--r", type=float)

    p = sub.add_parser("verify", parents=[common], help="composition residuals and exponent experiments")
    p.add_argument("--alpha", default="0.5+0.2*t")
    p.add_argument("--g", default="1+t^2")
    p.add_argument("--N", type=int, default=128)
    p.add_argument("--experiment-N", type=int, default=256, help="mesh size for the experiments")

    p = sub.add_parser("convergence", parents=[common], help="order table for an Abel solve")
    p.add_argument("--alpha")
    p.add_argument("--f")
    p.add_argument("--exact", help="exact solution; self-convergence when omitted")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--Ns", type=_int_list, default=[32, 64, 128])
    p.add_argument("--r", type=float)
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        return action.choices[command]


def _apply_config(sub_parser, path, command):
    cfg = configparser.ConfigParser()
    cfg.optionxform = str  # keys are case-sensitive (--t vs --T)
    try:
        with open(path, encoding="utf-8") as fh:
            cfg.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for section in ("fracvx", command):
        if cfg.has_section(section):
            values.update(cfg.items(section))
    actions = {a.dest: a for a in sub_parser._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("config", "dump_config", "help"):
            raise ConfigError(f"unknown config key {key!r}")
        action = actions[dest]
        try:
            val = action.type(raw) if action.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
        if action.choices and val not in action.choices:
            raise ConfigError(f"{key} must be one of {sorted(action.choices)}")
        defaults[dest] = val
    sub_parser.set_defaults(**defaults)


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub_parser = _subparser(parser, args.command)
        _apply_config(sub_parser, args.config, args.command)
        args = parser.parse_args(argv)
    missing = [k for k in REQUIRED[args.command] if getattr(args, k, None) is None]
    if missing:
        _subparser(parser, args.command).print_usage(sys.stderr)
        raise ConfigError("missing required option(s): " + ", ".join("--" + m for m in missing))
    return args


def dump_config(args, path):
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    items = {}
    for key, val in sorted(vars(args).items()):
        if key in ("command", "config", "dump_config") or val is None:
            continue
        items[key] = ",".join(map(str, val)) if isinstance(val, list) else repr(val) \
            if isinstance(val, float) else str(val)
    cfg[args.command] = items
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        cfg.write(fh)


def _outdir(args):
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# --------------------------------------------------------------------------
# Subcommands


def cmd_eval(args):
    fam = FAMILIES[args.family]
    T = args.T if args.T is not None else max(1.0, args.t)
    allow_zero = not fam.is_abel
    spec = OperatorSpec(fam, make_exponent(args.alpha, T, allow_zero_at_origin=allow_zero),
                        args.sigma)
    val = eval_forward(spec, parse_expr(args.g), args.t, args.accuracy)
    print(repr(float(f"{val:.15g}")))
    return EXIT_OK


def _summary_from_grid(grid, header):
    lines = [header]
    for key, val in sorted(grid.diagnostics.items()):
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def cmd_solve_abel(args):
    e = make_exponent(args.alpha, args.T)
    r = args.r if args.r is not None else default_grading(e.alpha0, "abel")
    grid = solve_abel(AbelProblem(e, parse_expr(args.f)), graded_mesh(args.T, args.N, r))
    out = _outdir(args)
    grid.to_csv(out / "solution.csv")
    _write(out / "summary.txt", _summary_from_grid(grid, f"solve-abel N={args.N} r={r:g}"))
    return EXIT_OK


def cmd_solve_fde(args):
    e = make_exponent(args.alpha, args.T)
    problem = FdeProblem(e, parse_expr(args.h), args.u0)
    kind = "fde-i" if e.alpha0 < 1 else "fde-ii"
    r = args.r if args.r is not None else default_grading(e.alpha0, kind)
    grid = solve_fde(problem, graded_mesh(args.T, args.N, r))
    out = _outdir(args)
    grid.to_csv(out / "solution.csv")
    _write(out / "summary.txt", _summary_from_grid(grid, f"solve-fde N={args.N} r={r:g}"))
    return EXIT_OK


def cmd_verify(args):
    e = make_exponent(args.alpha, 1.0)
    g = parse_expr(args.g)
    workers = _worker_count()
    mesh_n, mesh_2n = graded_mesh(1.0, args.N), graded_mesh(1.0, 2 * args.N)
    jobs = [(w, m) for w in Composition for m in (mesh_n, mesh_2n)]

    def residual(job):
        return compose_residual(e, g, job[1], job[0])

    with ThreadPoolExecutor(max_workers=workers) as pool:
        res = list(pool.map(residual, jobs))
    lines = []
    rows = ["check,N,value,pass"]
    for k, which in enumerate(Composition):
        r1, r2 = res[2 * k], res[2 * k + 1]
        ok = r1 <= 1e-3 and r2 <= r1 / 1.5
        lines.append(f"composition-{which.value} residual(N)={r1:.3e} residual(2N)={r2:.3e} "
                     f"{'pass' if ok else 'fail'}")
        rows.append(f"composition-{which.value},{args.N},{r1:.17g},{int(ok)}")
        rows.append(f"composition-{which.value},{2 * args.N},{r2:.17g},{int(ok)}")
    results = analysis.run_experiments(N=args.experiment_N, workers=workers)
    lines += [res.summary_line() for res in results]
    out = _outdir(args)
    _write(out / "residuals.csv", "\n".join(rows) + "\n")
    _write(out / "experiments.csv", analysis.report_csv(results))
    for res in results:
        _write(out / f"{res.exp_id}.csv", res.csv)
    _write(out / "summary.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_convergence(args):
    e = make_exponent(args.alpha, args.T)
    f = parse_expr(args.f)
    Ns = sorted(args.Ns)
    r = args.r if args.r is not None else default_grading(e.alpha0, "abel")
    exact = parse_expr(args.exact) if args.exact else None
    sizes = Ns if exact is not None else Ns + [2 * Ns[-1]]

    def run(N):
        return solve_abel(AbelProblem(e, f), graded_mesh(args.T, N, r))

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        grids = list(pool.map(run, sizes))
    errors = []
    for k, N in enumerate(Ns):
        u = grids[k].weighted_u
        if exact is not None:
            t = grids[k].t
            ref = t ** (1.0 - e.alpha0) * exact(t)
        else:
            ref = grids[k + 1].weighted_u[::2]
        errors.append(float(np.nanmax(np.abs(u[1:] - ref[1:]))))
    est = analysis.estimate_order(errors, Ns)
    rows = ["N,error,order"]
    for k, N in enumerate(Ns):
        order = "" if k == 0 else "%.17g" % est.orders[k - 1]
        rows.append(f"{N},{errors[k]:.17g},{order}")
    out = _outdir(args)
    _write(out / "convergence.csv", "\n".join(rows) + "\n")
    summary = "convergence " + " ".join(f"{o:.3f}" for o in est.orders)
    _write(out / "summary.txt", summary + "\n")
    print(summary)
    return EXIT_OK


COMMANDS = {
    "eval": cmd_eval,
    "solve-abel": cmd_solve_abel,
    "solve-fde": cmd_solve_fde,
    "verify": cmd_verify,
    "convergence": cmd_convergence,
}


def run(argv=None):
    """Execute the CLI and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    except ConfigError as exc:
        print(f"fracvx: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.dump_config:
            dump_config(args, args.dump_config)
        return COMMANDS[args.command](args)
    except InvalidInitialValue as exc:
        print(f"fracvx: ill-posed problem: {exc}", file=sys.stderr)
        return EXIT_ILLPOSED
    except (QuadratureFailure, IllConditioned, FloatingPointError) as exc:
        print(f"fracvx: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FracvxError, ConfigError, ValueError, OSError) as exc:
        print(f"fracvx: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())
