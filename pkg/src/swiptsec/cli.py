"""Command-line front end.

Subcommands:

* ``run``            sweep experiment, CSV output
* ``oracle-check``   small-instance consistency suite against the oracles
* ``dump-channels``  write one channel realization as CSV

Exit codes: 0 success, 1 validation error (bad flags or config), 2 runtime
failure (including oracle-check finding violations).
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone

from .channels import GeometryParams, dump_channels_csv, generate
from .core import CsiMode, SystemParams, ValidationError
from .experiments import (
    SCHEMES,
    SweepKind,
    aggregate,
    apply_overrides,
    build_experiment_config,
    dbm_to_watts,
    describe_config_keys,
    emit_csv,
    parse_config_file,
    run_experiment,
)
from .verification import check_all_traces, check_oracle_sandwich, run_oracle_batch


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swiptsec",
        description="Secure SWIPT-OFDMA harvested-power experiments",
        exit_on_error=False)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep experiment",
                         exit_on_error=False)
    run.add_argument("--config", help="key=value config file")
    run.add_argument("--out", help="output CSV path")
    run.add_argument("--seed", type=int, help="base seed")
    run.add_argument("--trials", type=int)
    run.add_argument("--schemes", help="comma-separated scheme subset")
    run.add_argument("--sweep",
                     help="ctarget=v1,v2,... or pt_dbm=v1,v2,...")
    run.add_argument("--k", type=int, help="number of users")
    run.add_argument("--n", type=int, help="number of subcarriers")
    run.add_argument("--csi", choices=["full", "stat"])
    run.add_argument("--workers", type=int)
    run.add_argument("--print-config-keys", action="store_true",
                     help="list config file keys and exit")

    check = sub.add_parser("oracle-check",
                           help="run the small-instance oracle suite",
                           exit_on_error=False)
    check.add_argument("--instances", type=int, default=20)
    check.add_argument("--seed", type=int, default=20260101)
    check.add_argument("--ctarget", type=float, default=1.3)

    dump = sub.add_parser("dump-channels",
                          help="write one channel realization as CSV",
                          exit_on_error=False)
    dump.add_argument("--k", type=int, default=8)
    dump.add_argument("--n", type=int, default=128)
    dump.add_argument("--seed", type=int, default=1)
    dump.add_argument("--out", required=True)
    dump.add_argument("--pt-dbm", type=float, default=30.0)
    dump.add_argument("--noise-dbm", type=float, default=-30.0)
    dump.add_argument("--cell-radius", type=float, default=10.0)
    dump.add_argument("--eve-distance", type=float, default=10.0)
    return parser


def _cmd_run(args) -> int:
    if args.print_config_keys:
        print(describe_config_keys(), end="")
        return 0
    mapping = parse_config_file(args.config) if args.config else {}
    if args.sweep:
        if "=" not in args.sweep:
            raise ValidationError(
                "--sweep expects ctarget=... or pt_dbm=...")
        kind, values = args.sweep.split("=", 1)
        mapping["sweep"] = kind.strip()
        mapping["values"] = values
    if "sweep" not in mapping:
        raise ValidationError("no sweep given: pass --sweep or a config file")
    config = build_experiment_config(mapping)
    config = apply_overrides(
        config,
        base_seed=args.seed, trials=args.trials,
        schemes=tuple(args.schemes.split(",")) if args.schemes else None,
        num_users=args.k, num_subcarriers=args.n,
        csi_mode=CsiMode(args.csi) if args.csi else None,
        workers=args.workers,
        output_path=args.out)
    if not config.output_path:
        raise ValidationError("no output path: pass --out or set out= in "
                              "the config file")

    rows = run_experiment(config)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    emit_csv(rows, config.output_path, timestamp=stamp)
    print(f"wrote {len(rows)} rows to {config.output_path}")
    print(f"{'sweep':>10} {'scheme':>12} {'mean E_sum [W]':>16} "
          f"{'feas frac':>10} {'mean delta':>11}")
    for agg in aggregate(rows):
        delta = f"{agg.mean_delta:.4f}" if agg.mean_delta is not None else "-"
        print(f"{agg.sweep_value:>10.4g} {agg.scheme:>12} "
              f"{agg.mean_e_sum_w:>16.6e} {agg.feasible_fraction:>10.2f} "
              f"{delta:>11}")
    return 0


def _cmd_oracle_check(args) -> int:
    records = run_oracle_batch(args.instances, args.seed, args.ctarget)
    feasible = sum(r.solutions["ppa_oracle"].feasible for r in records)
    print(f"solved {len(records)} instances "
          f"({feasible} feasible at ctarget={args.ctarget})")
    failed = False
    for label, report in (("oracle sandwich", check_oracle_sandwich(records)),
                          ("trace invariants", check_all_traces(records))):
        total = sum(report.checks.values())
        print(f"[{'PASS' if report.ok else 'FAIL'}] {label}: {total} checks, "
              f"{len(report.failures)} violations")
        for message in report.failures:
            print(f"       {message}")
        failed = failed or not report.ok
    return 2 if failed else 0


def _cmd_dump_channels(args) -> int:
    import numpy as np

    geometry = GeometryParams(cell_radius_m=args.cell_radius,
                              eve_distance_m=args.eve_distance)
    params = SystemParams(
        num_users=args.k, num_subcarriers=args.n,
        total_power_w=dbm_to_watts(args.pt_dbm),
        noise_power_w=dbm_to_watts(args.noise_dbm),
        conversion_efficiency=0.4, secrecy_targets=np.zeros(args.k))
    dump_channels_csv(generate(params, geometry, args.seed), args.out)
    print(f"wrote channel realization (k={args.k}, n={args.n}, "
          f"seed={args.seed}) to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # unrecognized arguments, or --help
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "oracle-check":
            return _cmd_oracle_check(args)
        if args.command == "dump-channels":
            return _cmd_dump_channels(args)
        return 1
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"unexpected failure: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
