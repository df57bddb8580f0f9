"""Command-line front end: ``isingecho {series,sweep,critical,oracle}``.

Every subcommand prints a JSON summary on stdout. Failures exit with status 2
and a JSON object ``{"error": <type>, "message": <text>}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .echo import TimeGrid, nyquist_dt
from .errors import AmbiguityError, IsingEchoError
from .spectrum import ChainConfig, mode_spectrum
from .sweep import detect_critical_point, emit_series, load_sweep_spec, run_sweep


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _chain_args(p, n_default=None):
    p.add_argument("--n-spins", "-N", type=int, default=n_default, required=n_default is None)
    p.add_argument("--J", type=float, default=1.0, help="exchange coupling (default 1)")
    p.add_argument("--delta", type=float, default=0.01, help="qubit coupling (default 0.01)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda-star", type=float, help="field seen by the |e> branch")
    g.add_argument("--lambda", dest="lam", type=float, help="field seen by the |g> branch")


def _config(args) -> ChainConfig:
    if args.lam is not None:
        return ChainConfig(J=args.J, lam=args.lam, delta=args.delta, n_spins=args.n_spins)
    return ChainConfig.from_lambda_star(args.lambda_star, args.delta, args.n_spins, args.J)


def _grid(config, t_end, dt):
    step = 0.5 * nyquist_dt(mode_spectrum(config)) if dt is None else dt
    return TimeGrid.span(t_end, step)


def _sweep_args(p):
    p.add_argument("--config", help="YAML sweep file (flags override its values)")
    p.add_argument("--n-values", type=_int_list, help="comma-separated ring sizes")
    r = p.add_mutually_exclusive_group()
    r.add_argument("--lambda-star-values", type=_float_list, help="comma-separated fields")
    r.add_argument("--lambda-star-range", type=float, nargs=3, metavar=("MIN", "MAX", "STEP"))
    p.add_argument("--J", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--dt", help="time step or 'auto'")
    p.add_argument("--t-max", dest="t_max_policy", help="truncation time or 'auto' (0.9 x recurrence time)")
    p.add_argument("--workers", type=int, help="worker processes (capped by $ISINGECHO_MAX_WORKERS)")
    p.add_argument("--out", help="sweep CSV path")


def _spec_from_args(args):
    values = args.lambda_star_values
    if args.lambda_star_range is not None:
        lo, hi, step = args.lambda_star_range
        values = {"min": lo, "max": hi, "step": step}
    return load_sweep_spec(
        args.config,
        n_values=args.n_values,
        lambda_star_values=values,
        J=args.J,
        delta=args.delta,
        dt=args.dt,
        t_max_policy=args.t_max_policy,
    )


def cmd_series(args):
    config = _config(args)
    grid = _grid(config, args.t_end, args.dt)
    summary = emit_series(config, grid, {"series": args.out, "oracle": args.oracle_out}, oracle=args.oracle)
    return {"lambda_star": config.lambda_star, "n_spins": config.n_spins, **summary}


def cmd_sweep(args):
    spec = _spec_from_args(args)
    result = run_sweep(spec, workers=args.workers)
    out = args.out or spec.outputs.get("sweep")
    if out:
        result.write_csv(out)
    return {
        "cells": len(result.rows),
        "errors": sum(bool(r.error) for r in result.rows),
        "output": out,
    }


def cmd_critical(args):
    spec = _spec_from_args(args)
    result = run_sweep(spec, workers=args.workers)
    out = args.out or spec.outputs.get("sweep")
    if out:
        result.write_csv(out)
    found = {}
    for n in spec.n_values:
        try:
            cp = detect_critical_point(result, n)
            found[str(n)] = {"lambda_star": cp.lambda_star, "blp": cp.blp, "markovian": cp.markovian}
        except AmbiguityError as exc:
            found[str(n)] = {"error": "AmbiguityError", "tied": exc.candidates}
    return {"critical_points": found, "output": out}


def cmd_oracle(args):
    from .oracle import even_sector_spectrum, oracle_echo
    from .echo import echo_series
    from .spectrum import even_sector_levels

    config = _config(args)
    grid = _grid(config, args.t_end, args.dt)
    series = echo_series(config, grid)
    ref = oracle_echo(config.n_spins, config.lam, config.delta, config.J, grid)
    levels = even_sector_levels(mode_spectrum(config), "g")
    dense = even_sector_spectrum(config.n_spins, config.lam, config.J)
    report = {
        "n_spins": config.n_spins,
        "lambda": config.lam,
        "delta": config.delta,
        "max_abs_dL": float(np.max(np.abs(series.L - ref.L))),
        "max_abs_dnu": float(np.max(np.abs(series.nu - ref.nu))),
        "max_abs_dlevel": float(np.max(np.abs(levels - dense))),
    }
    report["ok"] = report["max_abs_dL"] < 1e-8 and report["max_abs_dnu"] < 1e-8 and report["max_abs_dlevel"] < 1e-9
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isingecho", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("series", help="time series of one configuration as CSV")
    _chain_args(p)
    p.add_argument("--t-end", type=float, default=50.0)
    p.add_argument("--dt", type=float, help="time step (default: half the resolution bound)")
    p.add_argument("--out", required=True, help="series CSV path")
    p.add_argument("--oracle", action="store_true", help="also compare with exact diagonalization (N <= 12)")
    p.add_argument("--oracle-out", help="oracle comparison CSV path")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("sweep", help="measure over a (N, lambda*) grid")
    _sweep_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("critical", help="sweep and locate the Markovian field per N")
    _sweep_args(p)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("oracle", help="compare against exact diagonalization for a small ring")
    _chain_args(p, n_default=8)
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--dt", type=float)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "oracle", False) and not args.oracle_out:
        args.oracle_out = args.out.rsplit(".", 1)[0] + "_oracle.csv"
    try:
        summary = args.func(args)
    except (IsingEchoError, OSError, ValueError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    json.dump(summary, sys.stdout, indent=2)
    sys.stdout.write("\n")
    if args.command == "oracle" and not summary["ok"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
