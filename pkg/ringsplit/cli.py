"""
Command-line entry point.

    ringsplit simulate [--config PATH] [--out DIR] [--r0 R] [--a12 A] ...
    ringsplit sweep    [--config PATH] [--target S_1] [--r0-values 10,12,14] ...
    ringsplit analyze  timeseries.csv [--config PATH]
    ringsplit oracle   --r0 12
    ringsplit check

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ringsplit import __version__
from ringsplit.analysis import RunSummary, simulate, summarize
from ringsplit.artifacts import (
    SnapshotWriter,
    read_timeseries,
    sidecar_path,
    write_contours,
    write_summary,
    write_sweep,
    write_timeseries,
)
from ringsplit.config import (
    DEFAULT_D0,
    DEFAULT_M1,
    DEFAULT_M2,
    SEPARABILITY_LABELS,
    RunConfig,
    load_config,
    logger,
    resolve_threads,
)
from ringsplit.exceptions import ConfigError, RingSplitError
from ringsplit.model import model_spec_from_config
from ringsplit.observables import DEFAULT_REVIVAL_WINDOW
from ringsplit.oracle import (
    analytic_revival_difference,
    analytic_revival_time,
    fractional_revival_times,
    free_width,
    fringe_separation,
)
from ringsplit.selfcheck import report, run_checks
from ringsplit.sweep import extract_contours, max_separability_line, sweep, unnested_contours

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# Flags that map one-to-one onto configuration keys
OVERRIDE_FLAGS = {
    "r0": "r0",
    "a12": "a12",
    "d0": "d0",
    "n": "n",
    "step": "step",
    "dt": "dt",
    "n_steps": "n_steps",
    "sample_every": "sample_every",
}


def _parse_set(items: Optional[Sequence[str]]) -> Dict[str, str]:
    updates = {}
    problems = []
    for item in items or []:
        if "=" not in item:
            problems.append((0, f"--set expects key=value, got '{item}'"))
            continue
        key, value = (part.strip() for part in item.split("=", 1))
        updates[key] = value
    if problems:
        raise ConfigError(problems)
    return updates


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file, then ``--set`` pairs, then dedicated flags, then ``--out``."""
    config = load_config(args.config)
    updates: Dict[str, Any] = _parse_set(getattr(args, "set", None))
    for flag, key in OVERRIDE_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            updates[key] = value
    for flag in ("r0_values", "a12_values", "target", "levels", "snapshot_times", "snapshot_seconds"):
        value = getattr(args, flag, None)
        if value is not None:
            updates[flag] = value
    if getattr(args, "out", None) is not None:
        updates["out_dir"] = str(args.out)
    return config.override(**updates) if updates else config


def _print_summary(summary: RunSummary):
    print(f"📊 {summary.samples} samples up to t={summary.t_end:.3f}")
    for species, measured, analytic in ((1, summary.revival_time_1, summary.analytic_revival_1),
                                        (2, summary.revival_time_2, summary.analytic_revival_2)):
        shown = f"{measured:.3f}" if measured is not None else "not reached"
        print(f"   T_R,{species}: measured {shown}, analytic {analytic:.3f}")
    if summary.revival_difference is not None:
        print(f"   Delta T_R: {summary.revival_difference:.3f}")
    for label in SEPARABILITY_LABELS:
        if label in summary.separability:
            peak = summary.separability[label]
            print(f"   {label}: S={peak.value * 100:.1f}% at t={peak.time:.2f} ({peak.time_s:.3f} s), "
                  f"90% width {peak.width:.2f}")
    if summary.contrast_peaks:
        t, value = max(summary.contrast_peaks, key=lambda peak: peak[1])
        print(f"   max |AC1 - AC2| = {value:.3f} at t={t:.2f}")
    print(f"   max norm drift {summary.max_norm_drift:.2e}, max energy drift {summary.max_energy_drift:.2e}")


def cmd_simulate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    threads = resolve_threads(args.threads, config)
    out_dir = Path(config.output.out_dir)
    t_unit = 1.0 / config.physical.omega_perp
    times = list(config.output.snapshot_times) + [s / t_unit for s in config.output.snapshot_seconds]
    writer = SnapshotWriter(out_dir, times, config=config, t_unit=t_unit)

    print(f"🚀 Simulating r0={config.trap.r0}, a12={config.physical.a12} a11, "
          f"{config.numerics.n_steps} steps on {config.numerics.n}x{config.numerics.n}")
    run = simulate(config, workers=threads, callbacks=[writer] if times else [])
    write_timeseries(run.series, out_dir / "timeseries.csv", config=config)
    if writer.missed:
        logger.warning(f"⚠️ Snapshot times beyond the run were skipped: {writer.missed}")

    summary = summarize(run.spec, run.series)
    write_summary(summary, out_dir / "summary.json", config=config)
    _print_summary(summary)
    print(f"✅ Results written to {out_dir}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    threads = resolve_threads(args.threads, config)
    out_dir = Path(config.output.out_dir)

    result = sweep(config, threads=threads)
    write_sweep(result, out_dir / "sweep.csv", config=config)
    try:
        contours = extract_contours(result, config.sweep.levels)
    except RingSplitError as e:
        logger.warning(f"⚠️ Skipping contours: {str(e)}")
        contours = []
    for contour in unnested_contours(contours):
        logger.warning(f"⚠️ Closed {contour.level} contour at {contour.vertices[0]} lies outside every lower-level contour")
    write_contours(contours, out_dir / "contours.csv", config=config)

    print(f"📈 Maximum-separability line for {result.target}:")
    for r0, a12, value in max_separability_line(result):
        print(f"   r0={r0:g}: a12={a12:g} a11, yield {value * 100:.1f}%")
    failed = len(result.failed_cells)
    if failed:
        print(f"⚠️ {failed} cell(s) failed; see sweep.csv")
    print(f"✅ Results written to {out_dir}")
    return EXIT_OK if failed < len(result.cells) else EXIT_FAILURE


def cmd_analyze(args: argparse.Namespace) -> int:
    series_path = Path(args.timeseries)
    if args.config is None and sidecar_path(series_path).exists():
        args.config = sidecar_path(series_path)
    config = resolve_config(args)
    spec = model_spec_from_config(config)
    series = read_timeseries(series_path)

    summary = summarize(spec, series, window=args.window)
    _print_summary(summary)
    if args.out is not None:
        path = write_summary(summary, Path(config.output.out_dir) / "summary.json", config=config)
        print(f"✅ Summary written to {path}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    m1, m2, r0 = args.m1, args.m2, args.r0
    t1 = analytic_revival_time(r0, 1, args.p, m1, m2)
    t2 = analytic_revival_time(r0, 2, args.p, m1, m2)
    shown1, shown2 = round(t1, 3), round(t2, 3)
    print(f"T_R,1 = {shown1:.3f}")
    print(f"T_R,2 = {shown2:.3f}")
    # difference of the printed values so the three lines agree
    print(f"Delta T_R = {shown2 - shown1:.3f}")
    print(f"Delta T_R (unrounded) = {args.p * analytic_revival_difference(r0, m1, m2):.6f}")
    if args.t is not None:
        for species in (1, 2):
            print(f"w_t,{species}({args.t:g}) = {free_width(args.w_i, args.t, species, m1, m2):.6f}")
            if args.D is not None:
                print(f"fringe spacing,{species}({args.t:g}) = {fringe_separation(args.t, args.D, species, m1, m2):.6f}")
    if args.fractions:
        for p, q, t in fractional_revival_times(r0, 1, args.fractions, m1, m2):
            print(f"   {p}/{q} T_R,1 = {t:.3f}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    return EXIT_OK if report(run_checks()) else EXIT_FAILURE


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="Configuration file")
    parser.add_argument("--out", type=Path, help="Output directory")
    parser.add_argument("--threads", type=int, help="Worker threads (falls back to RINGSPLIT_THREADS)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override any configuration key")
    parser.add_argument("--r0", type=float, help="Ring radius [a_perp]")
    parser.add_argument("--a12", type=float, help="Interspecies scattering length [units of a11]")
    parser.add_argument("--d0", type=float, help="Initial peak waist [a_perp]")
    parser.add_argument("--n", type=int, help="Grid points per axis")
    parser.add_argument("--step", type=float, help="Grid spacing [a_perp]")
    parser.add_argument("--dt", type=float, help="Time step [1/omega_perp]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringsplit",
        description="Isotope separation of a binary condensate in a ring trap",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Run one evolution and write its time series")
    _common(p)
    p.add_argument("--n-steps", dest="n_steps", type=int, help="Number of time steps")
    p.add_argument("--sample-every", dest="sample_every", type=int, help="Steps between samples")
    p.add_argument("--snapshot-times", dest="snapshot_times", help="Comma list [1/omega_perp]")
    p.add_argument("--snapshot-seconds", dest="snapshot_seconds", help="Comma list [s]")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("sweep", help="Map a separability peak over (r0, a12)")
    _common(p)
    p.add_argument("--r0-values", dest="r0_values", help="Comma list of ring radii [a_perp]")
    p.add_argument("--a12-values", dest="a12_values", help="Comma list of a12 values [units of a11]")
    p.add_argument("--target", choices=SEPARABILITY_LABELS, help="Separability peak to map")
    p.add_argument("--levels", help="Comma list of contour levels")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("analyze", help="Recompute revivals and separability peaks from a time series")
    p.add_argument("timeseries", help="Time-series CSV written by simulate")
    _common(p)
    p.add_argument("--window", type=float, default=DEFAULT_REVIVAL_WINDOW, help="Revival search half-width")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("oracle", help="Print closed-form revival, width and fringe values")
    p.add_argument("--r0", type=float, required=True, help="Ring radius [a_perp]")
    p.add_argument("--p", type=int, default=1, help="Winding number")
    p.add_argument("--m1", type=float, default=DEFAULT_M1)
    p.add_argument("--m2", type=float, default=DEFAULT_M2)
    p.add_argument("--t", type=float, help="Time for the width and fringe formulas [1/omega_perp]")
    p.add_argument("--w-i", dest="w_i", type=float, default=DEFAULT_D0, help="Initial waist [a_perp]")
    p.add_argument("--D", type=float, help="Initial separation [a_perp]")
    p.add_argument("--fractions", type=int, default=0, metavar="Q", help="List fractional revivals up to p/Q")
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("check", help="Run the invariant self-test suite")
    p.set_defaults(handler=cmd_check)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"❌ {str(e)}", file=sys.stderr)
        return EXIT_USAGE
    except (RingSplitError, OSError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"❌ {str(e)}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
