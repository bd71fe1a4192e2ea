"""Command-line entry point.

    ssicl run <scenario> [--out DIR] [--format csv|table]
    ssicl sweep <scenario> --angles a0:a1:n --remnants r0:r1:m [--paired] [--out DIR]
    ssicl size-resistor <scenario> --i2 A --k FRAC

Exit codes: 0 success, 2 invalid input, 3 integrator fault.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from pathlib import Path

from .circuit import SimulationError
from .controller import size_limiter_resistor
from .scenario import (
    ScenarioError,
    emit_report,
    load_scenario,
    metrics_row,
    parse_grid,
    run_scenario,
    sweep,
)

EXIT_OK, EXIT_INVALID, EXIT_FAULT = 0, 2, 3

log = logging.getLogger("ssicl")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssicl", description="Solid-state inrush current limiter simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", type=Path, help="scenario YAML file")
        sp.add_argument("--format", choices=("csv", "table"), default="csv", help="report format on stdout")

    r = sub.add_parser("run", help="simulate one scenario")
    common(r)
    r.add_argument("--out", type=Path, help="directory for waveforms.csv and metrics.csv")

    s = sub.add_parser("sweep", help="energization angle x remnant flux grid")
    common(s)
    s.add_argument("--angles", required=True, help="start:stop:count in degrees")
    s.add_argument("--remnants", required=True, help="start:stop:count in per unit")
    s.add_argument("--paired", action="store_true", help="run every cell with and without the controller")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", type=Path, help="directory for sweep.csv")

    z = sub.add_parser("size-resistor", help="analytic limiter resistor estimate (advisory)")
    common(z)
    z.add_argument("--i2", type=float, required=True, help="maximum permitted inrush current (A)")
    z.add_argument("--k", type=float, required=True, help="fraction of the power cycle")
    return p


def _load(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError([f"{path}: {exc.strerror}"]) from exc
    return load_scenario(text)


def _cmd_run(args) -> int:
    s = _load(args.scenario)
    rec, metrics = run_scenario(s)
    row = metrics_row(
        metrics, s.name, math.degrees(s.circuit.energize_angle), s.core_calibration.remnant_pu
    )
    report = emit_report([row], args.format)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        rec.write_csv(args.out / "waveforms.csv")
        (args.out / "metrics.csv").write_text(emit_report([row], "csv"))
        log.info("wrote %s", args.out)
    sys.stdout.write(report)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    s = _load(args.scenario)
    try:
        angles, remnants = parse_grid(args.angles), parse_grid(args.remnants)
    except ValueError as exc:
        raise ScenarioError([str(exc)]) from exc
    report = sweep(s, angles, remnants, paired=args.paired, workers=args.workers)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "sweep.csv").write_text(emit_report(report, "csv"))
    sys.stdout.write(emit_report(report, args.format))
    return EXIT_OK


def _cmd_size(args) -> int:
    s = _load(args.scenario)
    c = s.circuit
    z, _ = c.impedance(c.series_r, c.series_l)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            r = size_limiter_resistor(c.series_l, args.k, c.period, c.v_peak, z, args.i2)
    except ValueError as exc:
        raise ScenarioError([str(exc)]) from exc
    for w in caught:
        log.warning("%s", w.message)
    rows = [("limiter_r_ohm", r), ("l_total_h", c.series_l), ("z_ohm", z), ("i2_a", args.i2), ("k", args.k)]
    if args.format == "csv":
        sys.stdout.write(",".join(k for k, _ in rows) + "\n" + ",".join(repr(v) for _, v in rows) + "\n")
    else:
        sys.stdout.write("".join(f"{k:>14}  {v:.6g}\n" for k, v in rows))
    sys.stdout.write("# advisory: confirm the value by simulation\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "size-resistor": _cmd_size}[args.command]
    try:
        return handler(args)
    except ScenarioError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SimulationError as exc:
        print(f"integrator fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
