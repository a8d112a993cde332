"""Experiment configuration files.

INI-style sections ``[model] [ho] [hca] [solver] [analysis] [sweep]``; each
key is addressed by its dotted name, e.g. ``ho.tau`` or ``solver.t_end``.
Unknown sections or keys are rejected, missing keys take the defaults below.

Value syntax for sweepable keys:

* ``a,b,c`` - explicit list
* ``start:stop:step`` - inclusive numeric range (``ho.f_range``, ``ho.tau_range``)
* ``hca.fq`` - dash-separated levels, each a value, list (``1,3``) or
  inclusive range (``1..5``), e.g. ``1-1..5-1..5``
"""

from __future__ import annotations

import configparser
import io
from decimal import Decimal, InvalidOperation

from .analysis import AnalysisConfig
from .dde import SolverConfig
from .errors import ConfigError
from .harness import SweepSpec

DEFAULTS = {
    "model.kind": "hca",
    "ho.coupling": "PP",
    "ho.n": "4",
    "ho.levels": "2",
    "ho.children": "64",
    "ho.w": "0.5",
    "ho.f": "2",
    "ho.tau": "5",
    "ho.f_range": "",
    "ho.tau_range": "",
    "hca.rules": "diamond",
    "hca.th0": "0.1",
    "hca.th1": "0.7",
    "hca.fq": "1-1-1",
    "hca.max_cycles": "10000",
    "solver.h": "0.05",
    "solver.t_end": "500",
    "analysis.eps_osc": "0.01",
    "analysis.eps_sync": "0.05",
    "analysis.sync_tail": "0.25",
    "analysis.phase_tol": "0.05",
    "analysis.window": "0.5",
    "analysis.min_periods": "5",
    "sweep.runs": "1",
    "sweep.seed": "0",
}
SECTIONS = sorted({k.split(".")[0] for k in DEFAULTS})


def read_file(path):
    """Dotted-key mapping of the raw string values in a config file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}", key=str(path)) from None
    return parse_text(text, source=str(path))


def parse_text(text, source="<config>"):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_file(io.StringIO(text), source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    raw = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]", key=section)
        for key, value in cp.items(section):
            dotted = f"{section}.{key}"
            if dotted not in DEFAULTS:
                raise ConfigError(f"{source}: unknown key {dotted}", key=dotted)
            raw[dotted] = value.strip()
    return raw


def apply_overrides(raw, overrides):
    """Apply ``KEY=VALUE`` strings as if they were written in the file."""
    out = dict(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE", key=item)
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key}", key=key)
        out[key] = value
    return out


def resolve(raw):
    """Complete mapping of every key, file values over defaults."""
    full = dict(DEFAULTS)
    full.update(raw)
    return full


def render(full):
    """Resolved configuration back in file syntax, one section per prefix."""
    lines = []
    for section in ("model", "ho", "hca", "solver", "analysis", "sweep"):
        lines.append(f"[{section}]")
        for key in DEFAULTS:
            if key.startswith(section + "."):
                lines.append(f"{key.split('.', 1)[1]} = {full[key]}")
        lines.append("")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# typed accessors


def _num(key, text, kind=float):
    try:
        if kind is int:
            v = int(text)
        else:
            v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}", key=key) from None
    return v


def _list(key, text, kind=float):
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"{key}: empty value", key=key)
    return [_num(key, s, kind) for s in items]


def parse_range(key, text):
    """``start:stop:step`` (inclusive) or comma list; exact decimal stepping."""
    text = text.strip()
    if ":" not in text:
        return _list(key, text)
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected start:stop:step, got {text!r}", key=key)
    try:
        start, stop, step = (Decimal(p.strip()) for p in parts)
    except InvalidOperation:
        raise ConfigError(f"{key}: expected start:stop:step, got {text!r}", key=key) from None
    if step <= 0:
        raise ConfigError(f"{key}: step must be > 0", key=key)
    vals = []
    v = start
    while v <= stop:
        vals.append(float(v))
        v += step
    if not vals:
        raise ConfigError(f"{key}: empty range {text!r}", key=key)
    return vals


def parse_fq(text, key="hca.fq"):
    """Per-level frequency choices from ``1-3-2`` style patterns."""
    parts = text.strip().split("-")
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected three dash-separated levels, got {text!r}", key=key)
    levels = []
    for part in parts:
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = _num(key, lo, int), _num(key, hi, int)
            vals = list(range(lo, hi + 1))
        else:
            vals = _list(key, part, int)
        if not vals:
            raise ConfigError(f"{key}: empty frequency range in {text!r}", key=key)
        if any(v < 1 for v in vals):
            raise ConfigError(f"{key}: frequencies must be >= 1", key=key)
        levels.append(vals)
    return levels


def _coupling(text):
    vals = [s.strip().upper() for s in text.split(",") if s.strip()]
    for v in vals:
        if v not in ("PP", "NN", "P", "N"):
            raise ConfigError(f"ho.coupling: expected PP or NN, got {v!r}", key="ho.coupling")
    if not vals:
        raise ConfigError("ho.coupling: empty value", key="ho.coupling")
    return [v[0] + v[0] if len(v) == 1 else v for v in vals]


def solver_config(full):
    return SolverConfig(_num("solver.h", full["solver.h"]), _num("solver.t_end", full["solver.t_end"]))


def analysis_config(full):
    return AnalysisConfig(
        eps_osc=_num("analysis.eps_osc", full["analysis.eps_osc"]),
        eps_sync=_num("analysis.eps_sync", full["analysis.eps_sync"]),
        sync_tail=_num("analysis.sync_tail", full["analysis.sync_tail"]),
        phase_tol=_num("analysis.phase_tol", full["analysis.phase_tol"]),
        window=_num("analysis.window", full["analysis.window"]),
        min_periods=_num("analysis.min_periods", full["analysis.min_periods"], int),
    )


def sweep_spec(full, single=False) -> SweepSpec:
    """Build the sweep described by a resolved config.

    With ``single=True`` every sweep range collapses to the single-run keys
    (``ho.f``, ``ho.tau``), as used by the ``run`` command.
    """
    kind = full["model.kind"].strip().lower()
    runs = _num("sweep.runs", full["sweep.runs"], int)
    seed = _num("sweep.seed", full["sweep.seed"], int)
    common = dict(runs=runs, seed=seed, solver=solver_config(full), analysis=analysis_config(full),
                  max_cycles=_num("hca.max_cycles", full["hca.max_cycles"], int))
    if kind == "hca":
        rules = [s.strip().lower() for s in full["hca.rules"].split(",") if s.strip()]
        fq = parse_fq(full["hca.fq"])
        grid = {
            "rules": rules,
            "th0": _list("hca.th0", full["hca.th0"]),
            "th1": _list("hca.th1", full["hca.th1"]),
            "fq0": fq[0], "fq1": fq[1], "fq2": fq[2],
        }
        for name, vals in grid.items():
            if not vals:
                raise ConfigError(f"empty range for {name}", key=f"hca.{name}")
        return SweepSpec("hca", grid, {}, **common)
    if kind not in ("ho-flat", "ho-hierarchy"):
        raise ConfigError(f"model.kind: unknown model {kind!r}", key="model.kind")
    f_vals = _list("ho.f", full["ho.f"])
    tau_vals = _list("ho.tau", full["ho.tau"])
    if not single:
        if full["ho.f_range"]:
            f_vals = parse_range("ho.f_range", full["ho.f_range"])
        if full["ho.tau_range"]:
            tau_vals = parse_range("ho.tau_range", full["ho.tau_range"])
    grid = {"coupling": _coupling(full["ho.coupling"]), "f": f_vals, "tau": tau_vals}
    if kind == "ho-flat":
        grid["n"] = _list("ho.n", full["ho.n"], int)
    else:
        grid["levels"] = _list("ho.levels", full["ho.levels"], int)
        grid["children"] = _list("ho.children", full["ho.children"], int)
        grid["w"] = _list("ho.w", full["ho.w"])
    if single:
        for name, vals in grid.items():
            if len(vals) != 1:
                raise ConfigError(f"run needs a single value for {name}, got {len(vals)}", key=f"ho.{name}")
    return SweepSpec(kind, grid, {}, **common)
