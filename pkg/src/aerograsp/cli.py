"""Command-line front end: ``aerograsp {run,rms,verify,sweep}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .config import ConfigError, load_config, parse_override, resolve
from .simkernel import SimulationDiverged, run, sim_truth_bounds, uub_certify
from .traceio import COORDS, SchemaError, read_trace_csv, rms_row, rms_table, write_trace_csv
from .verify import DEFAULT_TOLERANCES, run_property_suite

log = logging.getLogger("aerograsp")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_FAILED = 0, 1, 2, 3


def _setup_logging():
    level = os.environ.get("SIM_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _run_overrides(args) -> List[str]:
    items = list(args.set or [])
    for flag in ("scenario", "controller", "case", "dt", "seed"):
        value = getattr(args, flag, None)
        if value is not None:
            items.append(f"{flag}={value}")
    return items


def _default_out(setup) -> Path:
    name = f"{setup.scenario}_{setup.controller}"
    if setup.scenario == "scenario2":
        name += f"_case{setup.case}"
    return Path(name + ".csv")


def _execute(setup, out: Path, certify: bool = True):
    """Run one configured simulation, write its CSV and return (trace, summary lines)."""
    meta = {"case": setup.case if setup.scenario == "scenario2" else None,
            "trim": setup.trim}
    try:
        trace = run(setup.spec, setup.controller, setup.params, setup.dt,
                    controller_cfg=setup.controller_cfg, baseline_cfg=setup.baseline_cfg,
                    trim=setup.trim)
    except SimulationDiverged as exc:
        write_trace_csv(exc.trace, out, meta)
        raise
    write_trace_csv(trace, out, meta)
    row = rms_row(trace.e)
    lines = [
        f"scenario={setup.scenario} controller={setup.controller} dt={setup.dt} rows={len(trace)}",
        f"grasp_times={trace.event_times('grasp')} drop_times={trace.event_times('drop')}",
        "rms " + " ".join(f"{c}={v:.4f}" for c, v in zip(COORDS, row)),
        f"khat_final={np.round(trace.khat[-1], 6).tolist()}",
    ]
    if certify and setup.controller == "proposed":
        bounds = sim_truth_bounds(setup.spec, setup.params, trace=trace,
                                  controller_cfg=setup.controller_cfg, trim=setup.trim)
        report = uub_certify(trace, bounds)
        lines.append(f"uub satisfied={report.satisfied} bound={report.lyapunov_bound:.4g} "
                     f"radius={report.radius:.4g} entry_time={report.entry_time:.3f}")
    lines.append(f"csv={out}")
    return trace, lines


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, _run_overrides(args))
        setup = resolve(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else _default_out(setup)
    try:
        _, lines = _execute(setup, out)
    except SimulationDiverged as exc:
        print(f"error: simulation diverged ({exc}); partial trace written to {out}",
              file=sys.stderr)
        return EXIT_DIVERGED
    print("\n".join(lines))
    return EXIT_OK


def cmd_rms(args) -> int:
    try:
        tables = [read_trace_csv(p) for p in args.paths]
        table = rms_table(tables, pair=args.pair)
    except (OSError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(table.format())
    if args.out:
        Path(args.out).write_text(table.to_csv())
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        tolerances = dict(parse_override(item) for item in (args.tol or []))
        results = run_property_suite(samples=args.samples, seed=args.seed, tolerances=tolerances)
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for res in results:
        print(res.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAILED if failed else EXIT_OK


def _sweep_one(job):
    cfg, out = job
    setup = resolve(cfg)
    try:
        _, lines = _execute(setup, Path(out), certify=False)
    except SimulationDiverged as exc:
        return out, [f"diverged: {exc}"], False
    return out, lines, True


def cmd_sweep(args) -> int:
    try:
        base = load_config(args.config, _run_overrides(args))
        cases = args.cases or [1, 2, 3]
        out_dir = Path(args.out or "sweep")
        jobs = []
        for case in cases:
            cfg = dict(base, case=case)
            setup = resolve(cfg)
            jobs.append((cfg, str(out_dir / _default_out(setup))))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(job) for job in jobs]
    ok = True
    for out, lines, success in results:
        print("\n".join(lines))
        ok &= success
    if not ok:
        return EXIT_DIVERGED
    table = rms_table([read_trace_csv(out) for out, _, _ in results])
    print(table.format())
    (out_dir / "rms_table.csv").write_text(table.to_csv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aerograsp",
                                     description="Aerial grasping simulation and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("--config", help="flat key-value YAML config file")
        p.add_argument("--scenario", choices=["scenario1", "scenario2"])
        p.add_argument("--controller", choices=["proposed", "baseline"])
        p.add_argument("--dt", type=float)
        p.add_argument("--seed", type=int, help="wind noise seed")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="config override (repeatable)")

    p_run = sub.add_parser("run", help="simulate one scenario and write the trace CSV")
    run_flags(p_run)
    p_run.add_argument("--case", type=int, choices=[1, 2, 3])
    p_run.add_argument("--out", help="output CSV path")
    p_run.set_defaults(func=cmd_run)

    p_rms = sub.add_parser("rms", help="RMS table from trace CSVs")
    p_rms.add_argument("paths", nargs="+")
    p_rms.add_argument("--pair", action="store_true",
                       help="first path is the baseline, second the proposed run")
    p_rms.add_argument("--out", help="write the table as CSV")
    p_rms.set_defaults(func=cmd_rms)

    p_ver = sub.add_parser("verify", help="run the randomized property suite")
    p_ver.add_argument("--samples", type=int, default=1000)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--tol", action="append", metavar="NAME=VALUE",
                       help=f"tolerance override, names: {', '.join(DEFAULT_TOLERANCES)}")
    p_ver.set_defaults(func=cmd_verify)

    p_sw = sub.add_parser("sweep", help="run several scenario cases")
    run_flags(p_sw)
    p_sw.add_argument("--cases", type=int, nargs="+", choices=[1, 2, 3])
    p_sw.add_argument("--jobs", type=int, default=1)
    p_sw.add_argument("--out", help="output directory")
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "sweep" and args.scenario is None:
        args.scenario = "scenario2"
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
