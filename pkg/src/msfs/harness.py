"""Seeded parameter sweeps over the oscillator and HCA models."""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import hca
from .analysis import AnalysisConfig, classify
from .dde import SolverConfig, integrate
from .errors import ConfigError, InsufficientData, IntegrationDiverged, NonConvergence
from .oscillators import CouplingSpec, build_flat, build_hierarchy

MODELS = ("ho-flat", "ho-hierarchy", "hca")
HO_PARAMS = ("coupling", "n", "levels", "children", "w", "f", "tau")
HCA_PARAMS = ("rules", "th0", "th1", "fq0", "fq1", "fq2")
PARAM_ORDER = HO_PARAMS + HCA_PARAMS
METRIC_COLUMNS = ("runs", "sync_fraction", "osc_fraction", "period_mean", "amplitude_mean",
                  "sync_time_mean", "p0", "p1", "p2", "macro_pattern", "error")


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian grid over ``grid`` (name -> values) with ``fixed`` parameters."""

    model: str
    grid: dict
    fixed: dict = field(default_factory=dict)
    runs: int = 1
    seed: int = 0
    solver: SolverConfig = SolverConfig()
    analysis: AnalysisConfig = AnalysisConfig()
    max_cycles: int = 10_000

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model kind {self.model!r}", key="model.kind")
        if self.runs < 1:
            raise ConfigError("sweep.runs must be >= 1", key="sweep.runs")
        allowed = HCA_PARAMS if self.model == "hca" else HO_PARAMS
        for name, values in self.grid.items():
            if name not in allowed:
                raise ConfigError(f"parameter {name!r} does not apply to {self.model}")
            if len(values) == 0:
                raise ConfigError(f"empty range for {name!r}", key=name)
        for name in self.fixed:
            if name not in allowed:
                raise ConfigError(f"parameter {name!r} does not apply to {self.model}")

    def points(self):
        names = [p for p in PARAM_ORDER if p in self.grid]
        out = []
        for combo in itertools.product(*(self.grid[n] for n in names)):
            params = dict(self.fixed)
            params.update(zip(names, combo))
            out.append({p: params[p] for p in PARAM_ORDER if p in params})
        return sorted(out, key=param_key)


def param_key(params):
    return tuple((p, params[p]) for p in PARAM_ORDER if p in params)


def derive_seed(base_seed, params, run_index) -> int:
    """Seed for one run, a fixed hash of (base seed, parameter point, run index)."""
    text = json.dumps([int(base_seed), {k: params[k] for k in sorted(params)}, int(run_index)],
                      sort_keys=True)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


@dataclass
class ResultRow:
    model: str
    params: dict
    runs: list
    sync_fraction: float | None = None
    osc_fraction: float | None = None
    period_mean: float | None = None
    amplitude_mean: float | None = None
    sync_time_mean: float | None = None
    p0: int | None = None
    p1: int | None = None
    p2: int | None = None
    macro_pattern: str | None = None
    error: str | None = None

    def metrics(self):
        return {
            "runs": len(self.runs),
            "sync_fraction": self.sync_fraction,
            "osc_fraction": self.osc_fraction,
            "period_mean": self.period_mean,
            "amplitude_mean": self.amplitude_mean,
            "sync_time_mean": self.sync_time_mean,
            "p0": self.p0,
            "p1": self.p1,
            "p2": self.p2,
            "macro_pattern": self.macro_pattern,
            "error": self.error,
        }

    def as_dict(self):
        return {"model": self.model, "params": self.params, **self.metrics(), "per_run": self.runs}


def _mean_present(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def aggregate(model, params, runs) -> ResultRow:
    """Aggregate per-run metrics; means skip runs where a metric is absent."""
    row = ResultRow(model, dict(params), list(runs))
    ok = [r for r in runs if r.get("error") is None]
    n = len(runs)
    if model == "hca":
        if ok:
            first = ok[0]
            row.p0, row.p1, row.p2 = first["p0"], first["p1"], first["p2"]
            row.macro_pattern = first["macro_pattern"]
    else:
        row.sync_fraction = sum(1 for r in ok if r["synchronized"]) / n
        row.osc_fraction = sum(1 for r in ok if r["oscillating"]) / n
        row.period_mean = _mean_present(r["period"] for r in ok)
        row.amplitude_mean = _mean_present(r["amplitude"] for r in ok)
        row.sync_time_mean = _mean_present(r["sync_time"] for r in ok)
    errors = sorted({r["error"] for r in runs if r.get("error")})
    row.error = "; ".join(errors) if errors else None
    return row


def build_system(model, params):
    coupling = CouplingSpec(params.get("coupling", "P"), float(params.get("f", 0.0)),
                            float(params.get("tau", 1.0)), float(params.get("w", 0.5)))
    if model == "ho-flat":
        return build_flat(int(params["n"]), coupling)
    return build_hierarchy(int(params["levels"]), int(params["children"]), coupling)


def run_ho(model, params, seed, solver=SolverConfig(), analysis=AnalysisConfig()):
    """One seeded oscillator run: (metrics dict, trajectory, system)."""
    system = build_system(model, params)
    rng = np.random.default_rng(seed)
    y0 = system.initial_state(rng)
    traj = integrate(system.rhs, system.delays, y0, solver)
    report = classify(traj, system.topology, analysis)
    metrics = {
        "seed": seed,
        "class": report.behavior.value,
        "oscillating": report.behavior.oscillating,
        "synchronized": report.behavior.synchronized,
        "period": report.period,
        "amplitude": report.amplitude,
        "sync_time": report.sync_time,
        "error": None,
    }
    return metrics, traj, system, report


def hca_config_from(params):
    return hca.standard_config(params.get("rules", "diamond"), float(params.get("th0", 0.1)),
                            float(params.get("th1", 0.7)),
                            (params.get("fq0", 1), params.get("fq1", 1), params.get("fq2", 1)))


def run_hca(params, max_cycles=10_000):
    report = hca.run_to_convergence(hca_config_from(params), max_cycles)
    p = report.level_periods
    metrics = {
        "p0": p[0], "p1": p[1], "p2": p[2],
        "macro_pattern": report.macro.label if report.macro else None,
        "transient": report.transient,
        "error": None,
    }
    return metrics, report


def run_point(spec: SweepSpec, params) -> ResultRow:
    runs = []
    if spec.model == "hca":
        try:
            metrics, _ = run_hca(params, spec.max_cycles)
        except NonConvergence as exc:
            metrics = {"error": str(exc)}
        runs.append(metrics)
    else:
        for r in range(spec.runs):
            seed = derive_seed(spec.seed, params, r)
            try:
                metrics = run_ho(spec.model, params, seed, spec.solver, spec.analysis)[0]
            except (IntegrationDiverged, InsufficientData) as exc:
                metrics = {"seed": seed, "error": f"{type(exc).__name__}: {exc}"}
            runs.append(metrics)
    return aggregate(spec.model, params, runs)


def _run_point_args(args):
    return run_point(*args)


def run_sweep(spec: SweepSpec, jobs=1) -> list:
    """One row per grid point, sorted by parameter tuple whatever the execution order."""
    points = spec.points()
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_point_args, [(spec, p) for p in points]))
    else:
        rows = [run_point(spec, p) for p in points]
    return sorted(rows, key=lambda r: param_key(r.params))


def default_jobs():
    try:
        return max(1, int(os.environ.get("MSFS_JOBS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# export


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def columns(rows):
    present = {p for r in rows for p in r.params}
    return ["model"] + [p for p in PARAM_ORDER if p in present] + list(METRIC_COLUMNS)


def export_csv(rows, path):
    if not rows:
        raise ConfigError("nothing to export: the result table is empty")
    rows = sorted(rows, key=lambda r: param_key(r.params))
    cols = columns(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            record = {"model": r.model, **r.params, **r.metrics()}
            w.writerow([fmt(record.get(c)) for c in cols])
    return path


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def export_json(rows, path, provenance=None):
    if not rows:
        raise ConfigError("nothing to export: the result table is empty")
    rows = sorted(rows, key=lambda r: param_key(r.params))
    doc = {"provenance": provenance or {}, "columns": columns(rows),
           "rows": [_jsonable(r.as_dict()) for r in rows]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def pivot(rows, value="sync_fraction", row_param="f", col_param="tau"):
    """(row values, column values, matrix) with both axes ascending."""
    rvals = sorted({r.params[row_param] for r in rows})
    cvals = sorted({r.params[col_param] for r in rows})
    mat = [[None] * len(cvals) for _ in rvals]
    for r in rows:
        i = rvals.index(r.params[row_param])
        j = cvals.index(r.params[col_param])
        if mat[i][j] is not None:
            raise ConfigError(f"pivot on ({row_param}, {col_param}) is ambiguous: "
                              f"several rows share a cell; fix the other parameters first")
        mat[i][j] = getattr(r, value)
    return rvals, cvals, mat


def export_pivot(rows, path, value="sync_fraction", row_param="f", col_param="tau"):
    rvals, cvals, mat = pivot(rows, value, row_param, col_param)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{row_param}\\{col_param}"] + [fmt(c) for c in cvals])
        for rv, line in zip(rvals, mat):
            w.writerow([fmt(rv)] + [fmt(v) for v in line])
    return path
