"""Command-line harness for the benchmark suite.

Every subcommand loads the config, applies command-line overrides, makes
sure a calibration artifact exists in the output directory, runs one
benchmark (or all of them), and writes CSV tables plus a JSON metadata
sidecar.  Exit codes: 0 success, 2 configuration problem, 3 calibration
failure, 4 numerical failure during propagation or diagonalization.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, bench
from .bench import CalibrationError
from .config import ConfigError, RunConfig, load_config
from .dynamics import PropagationError
from .linalg import EigensolveError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CALIBRATION = 3
EXIT_NUMERICAL = 4

# dt overrides land on the section(s) a subcommand actually propagates with
_DT_SECTIONS = {
    "rx": ("rx",),
    "cz": ("cz",),
    "leakage": ("leakage",),
    "runtime": ("runtime",),
    "all": ("rx", "cz", "leakage", "runtime"),
}

_BENCHMARKS = {name: (runner, writer) for name, runner, writer in bench.BENCHMARK_STEPS}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pulsebench",
        description="Benchmark suite for the two-transmon fixed-bus device models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    names = ("calibrate",) + tuple(_BENCHMARKS) + ("all",)
    help_lines = {
        "calibrate": "sweep the circuit model and fit both reduced models",
        "static-sweep": "dressed energies, J, and zeta of all models across flux",
        "truncation": "convergence of each truncation axis toward the reference",
        "rx": "driven single-qubit benchmark with both spectator initializations",
        "cz": "conditional-phase accumulation under the flux pulse",
        "leakage": "population currents during the early CZ pulse",
        "runtime": "wall-clock build and propagation medians per model",
        "all": "run every subcommand in dependency order",
    }
    for name in names:
        p = sub.add_parser(name, help=help_lines[name])
        p.add_argument("--config", metavar="PATH", help="INI config file (defaults built in)")
        p.add_argument("--out", metavar="DIR", help="output directory (default from config)")
        p.add_argument("--flux-min", type=float, help="sweep grid lower edge")
        p.add_argument("--flux-max", type=float, help="sweep grid upper edge")
        p.add_argument("--flux-points", type=int, help="sweep grid size")
        p.add_argument("--dt", type=float, help="time step in ns for the propagated benchmark")
        p.add_argument(
            "--drive-frame",
            choices=("lab", "envelope"),
            help="carrier handling for the rx benchmark",
        )
    return parser


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    sweep_kwargs = {}
    if args.flux_min is not None:
        sweep_kwargs["flux_min"] = args.flux_min
    if args.flux_max is not None:
        sweep_kwargs["flux_max"] = args.flux_max
    if args.flux_points is not None:
        sweep_kwargs["flux_points"] = args.flux_points
    if sweep_kwargs:
        config = replace(config, sweep=replace(config.sweep, **sweep_kwargs))
    if args.drive_frame is not None:
        config = replace(config, rx=replace(config.rx, drive_frame=args.drive_frame))
    if args.dt is not None:
        sections = _DT_SECTIONS.get(args.subcommand)
        if not sections:
            raise ConfigError(f"--dt does not apply to '{args.subcommand}'")
        for attr in sections:
            config = replace(config, **{attr: replace(getattr(config, attr), dt=args.dt)})
    return config


def _dispatch(args: argparse.Namespace) -> int:
    config = apply_overrides(load_config(args.config), args)
    out_dir = Path(args.out) if args.out else Path(config.output.directory)

    if args.subcommand == "all":
        outputs = bench.run_all(config, out_dir)
        for name, files in outputs.items():
            for f in files:
                print(f"{name}: wrote {out_dir / f}")
        return EXIT_OK

    out_dir.mkdir(parents=True, exist_ok=True)
    if args.subcommand == "calibrate":
        result = bench.run_calibrate(config, out_dir)
        files = [config.output.artifact]
        if result.failures:
            for phi, msg in result.failures:
                print(f"warning: flux {phi:g} skipped: {msg}", file=sys.stderr)
    else:
        calibration = bench.ensure_calibration(config, out_dir)
        runner, writer = _BENCHMARKS[args.subcommand]
        result = runner(config, calibration)
        files = writer(out_dir, result)
    bench.write_sidecar(
        out_dir, args.subcommand, config, files,
        extras=bench.sidecar_extras(args.subcommand, result, config),
    )
    for f in files:
        print(f"wrote {out_dir / f}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (PropagationError, EigensolveError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
