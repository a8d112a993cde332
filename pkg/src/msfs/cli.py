"""Command-line entry point: ``msfs run | sweep | verify``.

Exit codes: 0 success, 1 a verify table has failing entries, 2 configuration
error, 3 numerical divergence or HCA non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import config as cfgmod
from . import golden, harness
from .errors import ConfigError, InsufficientData, IntegrationDiverged, NonConvergence

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _load(args):
    raw = cfgmod.read_file(args.config) if args.config else {}
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"sweep.seed={args.seed}")
    return cfgmod.resolve(cfgmod.apply_overrides(raw, overrides))


def _provenance(full, **extra):
    from . import __version__

    doc = {"package": "msfs", "version": __version__, "config": cfgmod.render(full)}
    doc.update(extra)
    return doc


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(harness._jsonable(doc), fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_run(args):
    full = _load(args)
    spec = cfgmod.sweep_spec(full, single=True)
    points = spec.points()
    if len(points) != 1:
        raise ConfigError(f"run needs a single parameter point, the config describes {len(points)}")
    params = points[0]
    if spec.model == "hca":
        metrics, report = harness.run_hca(params, spec.max_cycles)
        print(report.summary())
        if args.out:
            behaviors = [[[b.label for b in row] for row in lvl] for lvl in report.behaviors]
            doc = {"provenance": _provenance(full), "params": params,
                   "p0": metrics["p0"], "p1": metrics["p1"], "p2": metrics["p2"],
                   "transient": report.transient, "cycle_length": report.cycle_length,
                   "macro_pattern": metrics["macro_pattern"], "behaviors": behaviors}
            _write_json(args.out, doc)
        return EXIT_OK
    seed = harness.derive_seed(spec.seed, params, 0)
    metrics, traj, system, report = harness.run_ho(spec.model, params, seed, spec.solver, spec.analysis)
    print(f"model={spec.model} " + " ".join(f"{k}={harness.fmt(v)}" for k, v in params.items()))
    print(report.summary() + f" oscillating={'yes' if report.behavior.oscillating else 'no'}")
    print(f"seed={seed}")
    if args.out:
        if str(args.out).endswith(".npz"):
            np.savez(args.out, times=traj.times, states=traj.states,
                     provenance=json.dumps(_provenance(full, seed=seed), sort_keys=True))
        else:
            doc = {"provenance": _provenance(full, seed=seed), "params": params, **report.as_dict()}
            _write_json(args.out, doc)
    return EXIT_OK


def cmd_sweep(args):
    full = _load(args)
    spec = cfgmod.sweep_spec(full)
    jobs = args.jobs if args.jobs is not None else harness.default_jobs()
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1", key="--jobs")
    out = args.out or "results.csv"
    t0 = time.perf_counter()
    rows = harness.run_sweep(spec, jobs=jobs)
    harness.export_csv(rows, out)
    stem = out[:-4] if out.endswith(".csv") else out
    harness.export_json(rows, stem + ".json", _provenance(full, seed=spec.seed))
    written = [out, stem + ".json"]
    varying = [k for k, v in spec.grid.items() if len(v) > 1]
    if spec.model != "hca" and set(varying) == {"f", "tau"}:
        harness.export_pivot(rows, stem + ".pivot.csv")
        written.append(stem + ".pivot.csv")
    elapsed = time.perf_counter() - t0
    errors = sum(1 for r in rows if r.error)
    print(f"{len(rows)} rows in {elapsed:.1f} s ({errors} with errors) -> {', '.join(written)}")
    return EXIT_OK


def cmd_verify(args):
    if args.table not in golden.TABLES:
        raise ConfigError(f"unknown table {args.table!r}; choose from {', '.join(golden.TABLES)}",
                          key=args.table)
    entries = golden.TABLES[args.table]()
    for name, ok, detail in entries:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    passed = sum(1 for _, ok, _ in entries if ok)
    print(f"{args.table}: {passed}/{len(entries)} pass")
    return EXIT_OK if passed == len(entries) else EXIT_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog="msfs", description="Multi-scale feedback simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="experiment config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--out", metavar="PATH", help="output file")
        p.add_argument("--seed", type=int, help="base seed (overrides sweep.seed)")

    p = sub.add_parser("run", help="one simulation, report to stdout")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="parameter sweep to CSV")
    common(p)
    p.add_argument("--jobs", type=int, help="worker processes (default: $MSFS_JOBS or 1)")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("verify", help="check a reference table")
    p.add_argument("table", help=", ".join(golden.TABLES))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientData as exc:
        print(f"config error: {exc} (increase solver.t_end or analysis.window)", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationDiverged, NonConvergence) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
