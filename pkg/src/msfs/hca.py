"""Hierarchical cellular automata with activation frequencies.

Levels are stacked CAs. Every CA below the top is mapped to one cell of a CA
one level up: its abstract state (live fraction >= threshold) becomes that
cell's state, and that cell's state comes back down as the CA's goal, which
selects the expansive (goal 1) or regressive (goal 0) rule. The top CA runs
a static inversion rule.

A cycle visits levels bottom to top. Cycles are numbered from 1 and level k
is active on cycles divisible by ``Fq_k``. An active level pulls abstract
states from the level below (the bottom level keeps its own state), reads
goals from the level above, selects its rule and executes it. An inactive
level does nothing at all that cycle.

Start-up: until a middle-level CA has first been live it sends goal 1 down;
the top CA sends goal 1 until it executes for the first time.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np

from .errors import ConfigError, NonConvergence

VON_NEUMANN = "von_neumann"
MOORE = "moore"
BOUNDED = "bounded"
TOROIDAL = "toroidal"


def neighbor_count(cells, neighborhood=VON_NEUMANN, toroidal=False):
    """Live-neighbour counts over the last two axes; leading axes are a batch."""
    c = cells.astype(np.int8)
    if neighborhood == VON_NEUMANN:
        offsets = ((-1, 0), (1, 0), (0, -1), (0, 1))
    elif neighborhood == MOORE:
        offsets = tuple((di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0))
    else:
        raise ConfigError(f"unknown neighborhood {neighborhood!r}")
    if toroidal:
        return sum(np.roll(c, (di, dj), axis=(-2, -1)) for di, dj in offsets)
    h, w = c.shape[-2:]
    pad = np.zeros(c.shape[:-2] + (h + 2, w + 2), dtype=np.int8)
    pad[..., 1:-1, 1:-1] = c
    return sum(pad[..., 1 - di:1 - di + h, 1 - dj:1 - dj + w] for di, dj in offsets)


@dataclass(frozen=True)
class Rule:
    """Outer-totalistic binary rule: birth and survival sets of neighbour counts."""

    name: str
    birth: frozenset
    survival: frozenset
    neighborhood: str = VON_NEUMANN

    @property
    def max_neighbors(self) -> int:
        return 4 if self.neighborhood == VON_NEUMANN else 8

    def apply(self, cells, toroidal=False):
        counts = neighbor_count(cells, self.neighborhood, toroidal)
        k = np.arange(self.max_neighbors + 1)
        born = np.isin(k, sorted(self.birth))[counts]
        stays = np.isin(k, sorted(self.survival))[counts]
        return np.where(cells, stays, born)


@dataclass(frozen=True)
class InvertRule:
    """Static top-level rule: every cell flips."""

    name: str = "invert"

    def apply(self, cells, toroidal=False):
        return ~cells


@dataclass(frozen=True)
class RulePair:
    expansive: Rule
    regressive: Rule
    inversible: bool = False

    def select(self, goal):
        return set_active_rule(goal, self)


def _rule(name, birth, survival, nb=VON_NEUMANN):
    return Rule(name, frozenset(birth), frozenset(survival), nb)


ALL_VN = range(5)
DIAMOND = RulePair(
    _rule("diamond-expand", birth=range(1, 5), survival=ALL_VN),
    _rule("diamond-regress", birth=(), survival=(3, 4)),
    inversible=True,
)
LINE = RulePair(
    _rule("line-expand", birth=range(1, 5), survival=ALL_VN),
    _rule("line-regress", birth=(), survival=(4,)),
    inversible=True,
)
# Null -> Core -> Cross -> Full forward, Full -> Core -> Null backward
L1_PAIR = RulePair(
    _rule("l1-expand", birth=range(1, 5), survival=ALL_VN),
    _rule("l1-regress", birth=(), survival=(4,)),
    inversible=False,
)
RULE_SETS = {
    # name: (bottom rule pair, bottom boundary, initial pattern preset)
    "diamond": (DIAMOND, BOUNDED, "center-cell"),
    "line": (LINE, TOROIDAL, "center-row"),
}


@dataclass(frozen=True)
class Grid:
    cells: np.ndarray
    boundary: str = BOUNDED

    def __post_init__(self):
        cells = np.array(self.cells, dtype=bool)
        if cells.ndim != 2 or min(cells.shape) < 1:
            raise ConfigError(f"grid must be 2-D and non-empty, got shape {cells.shape}")
        if self.boundary not in (BOUNDED, TOROIDAL):
            raise ConfigError(f"unknown boundary {self.boundary!r}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def height(self):
        return self.cells.shape[0]

    @property
    def width(self):
        return self.cells.shape[1]

    @property
    def live(self) -> int:
        return int(self.cells.sum())

    def __eq__(self, other):
        return (isinstance(other, Grid) and self.boundary == other.boundary
                and np.array_equal(self.cells, other.cells))

    def __hash__(self):
        return hash((self.cells.tobytes(), self.cells.shape, self.boundary))


def step_grid(grid: Grid, rule) -> Grid:
    """One synchronous update; the input grid is left untouched."""
    return Grid(rule.apply(grid.cells, grid.boundary == TOROIDAL), grid.boundary)


def live_fraction(cells):
    h, w = cells.shape[-2:]
    return cells.sum(axis=(-2, -1)) / float(h * w)


def abstract_state(grid, th: float):
    """1 iff the live fraction reaches ``th``; batched over leading axes for arrays."""
    cells = grid.cells if isinstance(grid, Grid) else np.asarray(grid, dtype=bool)
    out = live_fraction(cells) >= th
    return int(out) if np.ndim(out) == 0 else out


def set_active_rule(goal, pair: RulePair):
    return pair.expansive if goal else pair.regressive


def pattern(preset, height=21, width=21, coords=None):
    """Initial grid from a named preset or an explicit list of (row, col)."""
    g = np.zeros((height, width), dtype=bool)
    if preset == "center-cell":
        g[height // 2, width // 2] = True
    elif preset == "center-row":
        g[height // 2, :] = True
    elif preset == "empty":
        pass
    elif preset == "coords":
        for r, c in coords or ():
            g[r, c] = True
    else:
        raise ConfigError(f"unknown initial pattern {preset!r}", key="hca.init")
    return g


# --------------------------------------------------------------------------
# configuration and state


@dataclass(frozen=True)
class LevelSpec:
    """One level: a ``layout`` of CAs, each a ``grid_shape`` grid."""

    layout: tuple
    grid_shape: tuple
    boundary: str
    rules: object  # RulePair, or InvertRule at the top
    threshold: float | None
    fq: int


@dataclass(frozen=True)
class HcaConfig:
    levels: tuple
    initial: np.ndarray  # bottom pattern, copied into every bottom CA
    rule_set: str = ""

    def __post_init__(self):
        if len(self.levels) < 2:
            raise ConfigError("an HCA needs at least two levels")
        for k, lv in enumerate(self.levels):
            if not (isinstance(lv.fq, (int, np.integer)) and lv.fq >= 1):
                raise ConfigError(f"Fq_{k} must be an integer >= 1, got {lv.fq!r}", key="hca.fq")
            if k < len(self.levels) - 1 and not (0.0 < lv.threshold < 1.0):
                raise ConfigError(f"Th_{k} must lie in (0, 1), got {lv.threshold!r}", key=f"hca.th{k}")
        for k in range(len(self.levels) - 1):
            lo, hi = self.levels[k], self.levels[k + 1]
            if (hi.layout[0] * hi.grid_shape[0], hi.layout[1] * hi.grid_shape[1]) != tuple(lo.layout):
                raise ConfigError(f"level {k} CAs do not map one-to-one onto level {k + 1} cells")
        if tuple(np.shape(self.initial)) != tuple(self.levels[0].grid_shape):
            raise ConfigError("initial pattern does not match the bottom grid shape", key="hca.init")
        if not isinstance(self.levels[-1].rules, InvertRule):
            raise ConfigError("the top level must use the inversion rule")

    @property
    def fq(self):
        return tuple(lv.fq for lv in self.levels)

    @property
    def phase_period(self) -> int:
        return reduce(math.lcm, self.fq)


def standard_config(rule_set="diamond", th0=0.1, th1=0.7, fq=(1, 1, 1), initial=None):
    """Three-level HCA: 4x8 bottom CAs of 21x21 cells, a 4x8 middle CA, a 1-cell top."""
    try:
        pair, boundary, preset = RULE_SETS[rule_set]
    except KeyError:
        raise ConfigError(f"unknown rule set {rule_set!r}", key="hca.rules") from None
    if any(float(f) != int(f) for f in fq):
        raise ConfigError(f"frequencies must be integers, got {fq!r}", key="hca.fq")
    fq = tuple(int(f) for f in fq)
    if len(fq) != 3:
        raise ConfigError(f"expected three frequencies, got {fq!r}", key="hca.fq")
    levels = (
        LevelSpec((4, 8), (21, 21), boundary, pair, th0, fq[0]),
        LevelSpec((1, 1), (4, 8), BOUNDED, L1_PAIR, th1, fq[1]),
        LevelSpec((1, 1), (1, 1), BOUNDED, InvertRule(), None, fq[2]),
    )
    init = pattern(preset) if initial is None else np.asarray(initial, dtype=bool)
    return HcaConfig(levels, init, rule_set)


@dataclass(frozen=True)
class HcaState:
    """Full deterministic state between cycles.

    ``grids[k]`` has shape ``layout_k + grid_shape_k``. ``been_live[k]`` marks
    CAs that have been live at least once; ``executed[k]`` marks levels that
    have executed their rule at least once.
    """

    cycle: int
    grids: tuple
    been_live: tuple
    executed: tuple

    def key(self, phase_period) -> bytes:
        parts = [np.int64(self.cycle % phase_period).tobytes()]
        for g, b in zip(self.grids, self.been_live):
            parts.append(np.packbits(g).tobytes())
            parts.append(np.packbits(b).tobytes())
        parts.append(bytes(self.executed))
        return b"".join(parts)

    def same_as(self, other) -> bool:
        return (all(np.array_equal(a, b) for a, b in zip(self.grids, other.grids))
                and all(np.array_equal(a, b) for a, b in zip(self.been_live, other.been_live))
                and self.executed == other.executed)


def initial_state(config: HcaConfig) -> HcaState:
    grids = []
    for k, lv in enumerate(config.levels):
        shape = tuple(lv.layout) + tuple(lv.grid_shape)
        if k == 0:
            g = np.broadcast_to(config.initial, shape).copy()
        else:
            g = np.zeros(shape, dtype=bool)
        grids.append(g)
    been_live = tuple(g.any(axis=(-2, -1)) for g in grids)
    return HcaState(0, tuple(grids), been_live, tuple(False for _ in grids))


def _to_macro_cells(abstract, hi: LevelSpec):
    """Reshape a level's (R, C) abstract states into the next level's CA grids."""
    R, C = hi.layout
    h, w = hi.grid_shape
    return abstract.reshape(R, h, C, w).transpose(0, 2, 1, 3)


def _goals_from_macro(macro_grids, lo: LevelSpec):
    """Inverse of ``_to_macro_cells``: one goal per CA of the lower level."""
    R, C, h, w = macro_grids.shape
    return macro_grids.transpose(0, 2, 1, 3).reshape(lo.layout)


def run_cycle(state: HcaState, config: HcaConfig) -> HcaState:
    """Advance one cycle; the returned state carries ``cycle + 1``."""
    cycle = state.cycle + 1
    grids = list(state.grids)
    been_live = list(state.been_live)
    executed = list(state.executed)
    levels = config.levels
    top = len(levels) - 1
    for k, lv in enumerate(levels):
        if cycle % lv.fq:
            continue
        cells = grids[k]
        if k > 0:
            below = levels[k - 1]
            cells = _to_macro_cells(abstract_state(grids[k - 1], below.threshold), lv)
        toroidal = lv.boundary == TOROIDAL
        if k == top:
            cells = lv.rules.apply(cells, toroidal)
        else:
            if k + 1 == top:
                fallback = not executed[k + 1]
                macro = np.ones_like(grids[k + 1]) if fallback else grids[k + 1]
            else:
                macro = grids[k + 1] | ~been_live[k + 1][..., None, None]
            goals = _goals_from_macro(macro, lv)
            grown = lv.rules.expansive.apply(cells, toroidal)
            shrunk = lv.rules.regressive.apply(cells, toroidal)
            cells = np.where(goals[..., None, None], grown, shrunk)
        grids[k] = cells
        executed[k] = True
        been_live[k] = been_live[k] | cells.any(axis=(-2, -1))
    return HcaState(cycle, tuple(grids), tuple(been_live), tuple(executed))


# --------------------------------------------------------------------------
# convergence


@dataclass(frozen=True)
class Behavior:
    """Terminal behaviour of one CA over the detected system cycle."""

    kind: str  # "dead", "stuck" or "oscillating"
    live: int = 0  # live cells when stuck
    period: int = 1
    live_counts: tuple = ()  # live cells per cycle over one period

    @property
    def label(self) -> str:
        if self.kind == "dead":
            return "S0"
        if self.kind == "stuck":
            return f"S{self.live}"
        return f"O{self.period}"

    def __str__(self):
        return self.label


def _min_period(seq):
    n = len(seq)
    for p in range(1, n + 1):
        if n % p == 0 and all(np.array_equal(seq[i], seq[(i + p) % n]) for i in range(n)):
            return p
    return n


def _behavior(seq) -> Behavior:
    p = _min_period(seq)
    counts = tuple(int(s.sum()) for s in seq[:p])
    if p == 1:
        return Behavior("dead") if counts[0] == 0 else Behavior("stuck", live=counts[0], live_counts=counts)
    return Behavior("oscillating", period=p, live_counts=counts)


@dataclass(frozen=True)
class MacroPattern:
    corner: str
    border: str
    core: str
    heterogeneous: bool = False
    groups: dict = field(default_factory=dict, compare=False)

    @property
    def label(self) -> str:
        return f"{self.corner}-{self.border}-{self.core}"

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class ConvergenceReport:
    config: HcaConfig
    transient: int  # cycles before the first state of the cycle
    cycle_length: int  # system period in cycles
    behaviors: tuple  # per level: array (layout) of Behavior
    level_periods: tuple  # period of each level's whole state
    cycle_states: tuple  # HcaState snapshots over one system period
    macro: MacroPattern | None = None

    @property
    def periods(self):
        return self.level_periods

    def bottom(self, i, j) -> Behavior:
        return self.behaviors[0][i][j]

    def summary(self) -> str:
        p = " ".join(f"P{k}={v}" for k, v in enumerate(self.level_periods))
        fq = "-".join(str(f) for f in self.config.fq)
        lines = [f"Fq={fq} transient={self.transient} cycle={self.cycle_length} {p}"]
        if self.macro is not None:
            lines.append(f"macro-pattern (corner-border-core): {self.macro.label}"
                         + (" [heterogeneous]" if self.macro.heterogeneous else ""))
        return "\n".join(lines)


def run_to_convergence(config: HcaConfig, max_cycles: int = 10_000) -> ConvergenceReport:
    """Run until the full system state repeats, then characterize the cycle."""
    if max_cycles < 1:
        raise ConfigError("max_cycles must be >= 1", key="hca.max_cycles")
    pp = config.phase_period
    state = initial_state(config)
    seen = {}
    history = []
    hash_log = []
    for _ in range(max_cycles + 1):
        key = state.key(pp)
        if key in seen:
            start = seen[key]
            return _report(config, start, history[start:])
        seen[key] = len(history)
        history.append(state)
        hash_log.append(hashlib.blake2b(key, digest_size=8).hexdigest())
        state = run_cycle(state, config)
    raise NonConvergence(max_cycles, hash_log)


def _report(config, transient, cyc):
    behaviors = []
    level_periods = []
    for k, lv in enumerate(config.levels):
        seqs = [s.grids[k] for s in cyc]
        level_periods.append(_min_period(seqs))
        R, C = lv.layout
        behaviors.append(tuple(
            tuple(_behavior([g[i, j] for g in seqs]) for j in range(C)) for i in range(R)))
    report = ConvergenceReport(config, transient, len(cyc), tuple(behaviors),
                               tuple(level_periods), tuple(cyc))
    if min(config.levels[0].layout) >= 3:
        report = replace(report, macro=classify_macro_pattern(report))
    return report


def bottom_groups(layout=(4, 8)):
    """Positional groups of the bottom layout: corners, borders, core."""
    R, C = layout
    groups = {"corner": [], "border": [], "core": []}
    for i in range(R):
        for j in range(C):
            edge_r = i in (0, R - 1)
            edge_c = j in (0, C - 1)
            key = "corner" if edge_r and edge_c else "border" if edge_r or edge_c else "core"
            groups[key].append((i, j))
    return groups


def classify_macro_pattern(report: ConvergenceReport) -> MacroPattern:
    """Group behaviours of corners, borders and core; flags divergence instead of raising."""
    layout = report.config.levels[0].layout
    labels = {}
    hetero = False
    for name, members in bottom_groups(layout).items():
        seen = sorted({report.behaviors[0][i][j].label for i, j in members})
        hetero = hetero or len(seen) > 1
        labels[name] = seen
    pick = {k: v[0] if len(v) == 1 else "/".join(v) for k, v in labels.items()}
    return MacroPattern(pick["corner"], pick["border"], pick["core"], hetero, labels)


def replay_periodic(report: ConvergenceReport) -> bool:
    """Check that every level's period brings each cycle state back to itself."""
    cfg = report.config
    for start in report.cycle_states:
        s = start
        for _ in range(report.cycle_length):
            s = run_cycle(s, cfg)
        if not s.same_as(start):
            return False
    return True


# --------------------------------------------------------------------------
# period laws


@dataclass(frozen=True)
class PeriodPrediction:
    p01: int  # shared period of the bottom and middle levels
    p2: int  # period of the top level
    case01: str  # "common" or "exceptional"
    case2: str


def predict_period(fq0, fq1, fq2, a=2, b=2) -> PeriodPrediction:
    """Periods from the frequency laws.

    Bottom/middle: ``a*Fq1`` when Fq1 >= Fq2, else ``b*lcm(Fq)``.
    Top: ``a*Fq2`` when Fq2 >= Fq1, else ``b*lcm(Fq)``.
    """
    for f in (fq0, fq1, fq2):
        if f < 1:
            raise ConfigError(f"frequencies must be >= 1, got {f!r}", key="hca.fq")
    lcm = math.lcm(fq0, fq1, fq2)
    common01 = fq1 >= fq2
    common2 = fq2 >= fq1
    return PeriodPrediction(
        a * fq1 if common01 else b * lcm,
        a * fq2 if common2 else b * lcm,
        "common" if common01 else "exceptional",
        "common" if common2 else "exceptional",
    )


def fit_period_law(fq, p01, p2, coefficients=(1, 2, 3)):
    """Coefficients (for P0=P1, for P2) that make the laws match observed periods.

    Either entry is None when no coefficient in ``coefficients`` fits.
    """
    fq0, fq1, fq2 = fq
    fit01 = fit2 = None
    for c in coefficients:
        pred = predict_period(fq0, fq1, fq2, a=c, b=c)
        if fit01 is None and pred.p01 == p01:
            fit01 = c
        if fit2 is None and pred.p2 == p2:
            fit2 = c
    return fit01, fit2


# --------------------------------------------------------------------------
# sequence oracles


def expansion_sequence(pair: RulePair, start, boundary=BOUNDED, max_steps=1000):
    """Iterate the expansive rule from ``start`` until it stops changing."""
    toroidal = boundary == TOROIDAL
    seq = [np.asarray(start, dtype=bool)]
    for _ in range(max_steps):
        nxt = pair.expansive.apply(seq[-1], toroidal)
        if np.array_equal(nxt, seq[-1]):
            break
        seq.append(nxt)
    return seq


def regression_sequence(pair: RulePair, start, boundary=BOUNDED, max_steps=1000):
    toroidal = boundary == TOROIDAL
    seq = [np.asarray(start, dtype=bool)]
    for _ in range(max_steps):
        nxt = pair.regressive.apply(seq[-1], toroidal)
        if np.array_equal(nxt, seq[-1]):
            break
        seq.append(nxt)
    return seq
