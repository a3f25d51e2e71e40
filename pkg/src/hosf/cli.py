"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from hosf import __version__
from hosf.coefficients import MAX_EXACT_J, PhysicalConstants, coefficient_table
from hosf.diagnostics import (
    WrapAroundError,
    conservation_report,
    decay_experiment,
    ej_truncation_report,
    truncation_csv,
    write_records_csv,
)
from hosf.grid import write_snapshot, write_snapshot_records
from hosf.propagation import NumericalError, run_simulation
from hosf.scenarios import (
    PRESETS,
    ConfigError,
    build_scenario,
    compare_orders,
    parse_scenario,
    resolve_config,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
RUN_KEYS = ("output_dir", "snapshot_every")

log = logging.getLogger("hosf")


def load_config(path: str | os.PathLike) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("", f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{p}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError("", f"{p}: top level must be an object")
    return raw


def validate_run_config(raw: dict, base: Path | None = None):
    """Resolve and validate a run config; returns (resolved dict, spec, output dir, snapshot cadence)."""
    cfg = resolve_config(raw, extra_keys=RUN_KEYS)
    scenario_part = {k: v for k, v in cfg.items() if k not in RUN_KEYS}
    scenario_part.pop("scenario", None)
    spec = parse_scenario(scenario_part, cfg.get("scenario", "custom"))

    out = cfg.get("output_dir", "hosf-out")
    if not isinstance(out, str) or not out:
        raise ConfigError("output_dir", "expected a non-empty path string")
    out_dir = Path(out)
    if base is not None and not out_dir.is_absolute():
        out_dir = base / out_dir
    _check_writable(out_dir)

    snap = cfg.get("snapshot_every")
    if snap is not None and (isinstance(snap, bool) or not isinstance(snap, int) or snap < 1):
        raise ConfigError("snapshot_every", "expected a positive integer or null")
    return cfg, spec, out_dir, snap


def _check_writable(path: Path):
    probe = path
    while not probe.exists():
        if probe.parent == probe:
            break
        probe = probe.parent
    if not probe.is_dir() or not os.access(probe, os.W_OK):
        raise ConfigError("output_dir", f"{path} is not writable")


def _manifest(cfg: dict, argv: list[str], wall: float, extra: dict) -> dict:
    return {
        "command": argv,
        "config": cfg,
        "versions": {
            "hosf": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "threads": os.environ.get("HOSF_THREADS", "1"),
        "wall_clock_seconds": wall,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        **extra,
    }


def cmd_run(args) -> int:
    raw = load_config(args.config)
    cfg, spec, out_dir, snap_every = validate_run_config(raw)
    if args.output_dir:
        out_dir = Path(args.output_dir)
        _check_writable(out_dir)
        cfg["output_dir"] = str(out_dir)
    scenario = build_scenario(spec)
    for w in scenario.warnings:
        log.warning(w)
    out_dir.mkdir(parents=True, exist_ok=True)
    snap_path = out_dir / "snapshots.bin"
    start = time.perf_counter()
    status, extra = EXIT_OK, {}
    with open(snap_path, "wb") as snaps:

        def on_snapshot(i, t, orbitals):
            write_snapshot_records(snaps, orbitals)

        try:
            traj = run_simulation(
                scenario.orbitals, spec.horizon, scenario.integrator, scenario.problem,
                diagnostics_every=spec.diagnostics_every,
                snapshot_every=snap_every, on_snapshot=on_snapshot,
            )
        except NumericalError as exc:
            log.error("numerical failure at t=%s: %s", exc.time, exc)
            if exc.last_good is not None:
                write_snapshot(out_dir / "last_good.bin", exc.last_good)
            status = EXIT_NUMERICAL
            extra = {"failure": str(exc), "failure_time": exc.time}
            traj = None
    if traj is not None:
        with open(out_dir / "diagnostics.csv", "w", newline="") as fh:
            write_records_csv(traj.records, fh)
        if len(traj.records) > 1:
            rep = conservation_report(traj)
            extra = {
                "steps": traj.steps,
                "dt": traj.dt,
                "max_norm_drift": rep.max_norm_drift,
                "max_overlap_drift": rep.max_overlap_drift,
                "energy_drift": rep.energy_drift,
            }
    wall = time.perf_counter() - start
    manifest = _manifest(cfg, ["run", str(args.config)], wall, extra)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if status == EXIT_OK:
        print(f"wrote {out_dir}")
    return status


def cmd_validate(args) -> int:
    raw = load_config(args.config)
    _, spec, out_dir, _ = validate_run_config(raw)
    print(f"ok: {spec.name}, dim={spec.grid.dim}, points={spec.grid.n}, J={spec.J}, "
          f"orbitals={spec.orbitals.count}, output_dir={out_dir}")
    return EXIT_OK


def cmd_coeffs(args) -> int:
    if args.jmax < 0 or args.jmax > MAX_EXACT_J:
        raise ConfigError("--jmax", f"must lie in [0, {MAX_EXACT_J}]")
    out = sys.stdout
    out.write("j,numerator,denominator,value\n")
    for j, num, den, value in coefficient_table(args.jmax):
        out.write(f"{j},{num},{den},{value!r}\n")
    return EXIT_OK


def cmd_truncation(args) -> int:
    if args.jmax < 1:
        raise ConfigError("--jmax", "must be >= 1")
    consts = PhysicalConstants(c=args.c)
    for v in args.speeds:
        if not 0 <= v < consts.c:
            raise ConfigError("--speeds", f"speed {v} must lie in [0, c)")
    sys.stdout.write(truncation_csv(ej_truncation_report(args.jmax, args.speeds, consts)))
    return EXIT_OK


def cmd_decay(args) -> int:
    if args.J < 1:
        raise ConfigError("--J", "must be >= 1")
    if args.dimension not in (1, 2, 3):
        raise ConfigError("--dimension", "must be 1, 2 or 3")
    try:
        run = decay_experiment(args.J, args.dimension)
    except WrapAroundError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        raise ConfigError("--J/--dimension", str(exc)) from None
    out = sys.stdout
    out.write("time,sup_norm,boundary_mass\n")
    for t, s, m in zip(run.times, run.sup_norms, run.boundary_mass):
        out.write(f"{t:.17g},{s:.17g},{m:.17g}\n")
    out.write(f"# exponent {run.exponent:.6f} expected {run.expected:.6f} residual {run.residual:.3e}\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    raw = load_config(args.config)
    cfg = resolve_config(raw, extra_keys=RUN_KEYS)
    part = {k: v for k, v in cfg.items() if k not in RUN_KEYS and k != "scenario"}
    spec = parse_scenario(part, cfg.get("scenario", "custom"))
    if not args.J or any(j < 1 for j in args.J):
        raise ConfigError("--J", "orders must be >= 1")
    result = compare_orders(spec, args.J)
    rows = result.rows()
    cols = list(rows[0])
    out = sys.stdout
    out.write(",".join(cols) + "\n")
    for row in rows:
        out.write(",".join(format(row[c], ".17g") for c in cols) + "\n")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # bad arguments are configuration errors, not argparse's default exit 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hosf", description="Higher-order Schrodinger and Hartree-Fock solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a simulation from a JSON config")
    p.add_argument("config")
    p.add_argument("--output-dir", help="override output_dir from the config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate-config", help="validate a JSON config without running")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("coeffs", help="print the expansion coefficients as CSV")
    p.add_argument("--jmax", type=int, default=4)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("truncation", help="relative error of the truncated dispersion relation")
    p.add_argument("--jmax", type=int, default=4)
    p.add_argument("--speeds", type=float, nargs="+", default=[0.1])
    p.add_argument("--c", type=float, default=1.0)
    p.set_defaults(func=cmd_truncation)

    p = sub.add_parser("decay", help="fit the dispersive decay exponent")
    p.add_argument("--J", type=int, default=1)
    p.add_argument("--dimension", type=int, default=1)
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("compare-orders", help="L2 deviations between orders J for one scenario")
    p.add_argument("config")
    p.add_argument("--J", type=int, nargs="+", default=[1, 2])
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("presets", help="list scenario presets")
    p.set_defaults(func=lambda a: print("\n".join(sorted(PRESETS))) or EXIT_OK)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
