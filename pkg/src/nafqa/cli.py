"""Command-line interface.

Subcommands: run, sweep, spin-glass, oracle-check.  Exit codes: 0 success,
2 configuration error, 3 ensemble-normalization failure, 4 numeric guard.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .lindblad import IntegrationError
from .noise_channels import NoiseModelError
from .operators import OperatorError
from .runner import (
    EXIT_CONFIG,
    EXIT_NORMALIZATION,
    EXIT_NUMERIC,
    EXIT_OK,
    ConfigError,
    RunConfig,
    parse_config,
    run,
    run_spin_glass_ensemble,
)
from .trajectories import JumpBudgetError, NormalizationError, TrajectoryError


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--mode", choices=("ideal", "noisy", "nafqa", "oracle", "qpd"))
    parser.add_argument("--problem", help="problem definition file")
    parser.add_argument("--noise", help="noise model file")
    parser.add_argument("--n", type=int, help="qubit count override")
    parser.add_argument("--layers", type=int)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--trajectories", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--controlled", help="comma-separated Pauli labels, 'all', or 'none'")
    parser.add_argument("--out", help="CSV output path")
    parser.add_argument("--shots", type=int)
    parser.add_argument("--zero-uncontrolled-lambda", dest="zero_uncontrolled_lambda",
                        action="store_true", default=None)
    parser.add_argument("--driver-sign", dest="driver_sign", type=int, choices=(1, -1))
    parser.add_argument("--workers", type=int)
    parser.add_argument("--substeps", type=int)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = parse_config(args.config) if args.config else RunConfig()
    overrides = {
        key: getattr(args, key)
        for key in (
            "mode", "problem", "noise", "n", "layers", "dt", "threshold",
            "trajectories", "seed", "controlled", "out", "shots",
            "zero_uncontrolled_lambda", "driver_sign", "workers", "substeps",
        )
        if getattr(args, key, None) is not None
    }
    return replace(config, **overrides)


def _cmd_run(args) -> int:
    result = run(_config_from_args(args))
    final = result.records[-1]
    print(f"layers={final.layer} r={final.r:.6f} phi={final.phi:.6f} delta={final.delta:.4f}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    base = _config_from_args(args)
    if base.out is None:
        raise ConfigError("sweep needs --out (a path pattern; the value is appended)")
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("no sweep values given")
    from .runner import _FIELD_TYPES, _coerce

    if args.param not in _FIELD_TYPES:
        raise ConfigError(f"unknown sweep parameter {args.param!r}")
    out = Path(base.out)
    for value in values:
        coerced = _coerce(args.param, value)
        path = out.with_name(f"{out.stem}_{args.param}{value}{out.suffix}")
        config = replace(base, **{args.param: coerced, "out": str(path)})
        result = run(config)
        final = result.records[-1]
        print(f"{args.param}={value}: r={final.r:.6f} delta={final.delta:.4f} -> {path}")
    return EXIT_OK


def _cmd_spin_glass(args) -> int:
    config = _config_from_args(args)
    if args.driver_sign is None:
        config = replace(config, driver_sign=-1)
    result = run_spin_glass_ensemble(config, args.instances, args.coupling_seed, n=args.qubits)
    r_final = result.aggregate["r_mean"][-1]
    r_err = result.aggregate["r_stderr"][-1]
    print(f"instances={args.instances} final r = {r_final:.6f} +/- {r_err:.6f}")
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    config = _config_from_args(args)
    trajectory_mode = config.mode if config.mode != "oracle" else "nafqa"
    traj = run(replace(config, mode=trajectory_mode, out=None))
    oracle = run(replace(config, mode="oracle", out=None))
    gaps = [
        abs(a.r - b.r) for a, b in zip(traj.records, oracle.records)
    ]
    worst = max(gaps)
    print(f"max |r_trajectory - r_oracle| = {worst:.6f} over {len(gaps)} layers")
    if worst > args.tolerance:
        print(f"exceeds tolerance {args.tolerance}", file=sys.stderr)
        return 1
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nafqa",
        description="Feedback-controlled open-system ground-state simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single experiment, one CSV")
    _add_config_flags(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="repeat a run over parameter values")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_sg = sub.add_parser("spin-glass", help="aggregate random spin-glass instances")
    _add_config_flags(p_sg)
    p_sg.add_argument("--instances", type=int, default=25)
    p_sg.add_argument("--coupling-seed", dest="coupling_seed", type=int, default=7)
    p_sg.add_argument("--qubits", type=int, default=3)
    p_sg.set_defaults(fn=_cmd_spin_glass)

    p_oc = sub.add_parser("oracle-check", help="trajectory run vs dense oracle")
    _add_config_flags(p_oc)
    p_oc.add_argument("--tolerance", type=float, default=0.02)
    p_oc.set_defaults(fn=_cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, NoiseModelError, OperatorError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NormalizationError as exc:
        print(f"normalization failure: {exc}", file=sys.stderr)
        return EXIT_NORMALIZATION
    except (JumpBudgetError, IntegrationError, TrajectoryError) as exc:
        print(f"numeric guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
