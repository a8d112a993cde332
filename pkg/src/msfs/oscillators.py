"""Flat-ring and hierarchical networks of delay-coupled X/Y oscillators.

Every oscillator has an activator-like X and a repressor-like Y::

    dX/dt = (1 + PP (F u)^3) / (1 + (F u)^3 + (Y(t-2)/0.5)^3) - 0.5 X + 0.1
    dY/dt = (X(t-2)/0.5)^3 / (1 + (X(t-2)/0.5)^3)            - 0.5 Y + 0.1

``u`` is the delayed coupling input, ``PP`` is 1 for promoting (P) and
0 for inhibiting (N) coupling. In a ring ``u`` is the predecessor's X; in
a hierarchy it is the parent's X (bottom level), the children's mean X
(top level) or a W-weighted blend of both (middle levels).

State layout: ``y[:n]`` holds every X, ``y[n:]`` every Y, with oscillators
ordered level by level from the bottom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dde import DelaySpec
from .errors import ConfigError, InvalidTopology

INTERNAL_LAG = 2.0
HILL_N = 3
HALF_SAT = 0.5
DECAY = 0.5
BASAL = 0.1


def eval_gamma(parent_x, children_mean, w):
    """Blend of the parent's X and the children's mean X fed to a middle oscillator."""
    return w * parent_x + (1.0 - w) * children_mean


def eval_x_rhs(u, y_lag2, x_now, f, pp):
    """dX/dt for coupling input ``u`` (already delayed); vectorizes over arrays."""
    fu3 = (f * u) ** HILL_N
    return (1.0 + pp * fu3) / (1.0 + fu3 + (y_lag2 / HALF_SAT) ** HILL_N) - DECAY * x_now + BASAL


def eval_y_rhs(x_lag2, y_now):
    a = (x_lag2 / HALF_SAT) ** HILL_N
    return a / (1.0 + a) - DECAY * y_now + BASAL


@dataclass(frozen=True)
class CouplingSpec:
    """Coupling kind plus per-level strength and delay.

    ``strength`` and ``delay`` are either one value applied at every level
    or a sequence indexed by level (bottom first).
    """

    kind: str = "P"
    strength: float | tuple = 0.0
    delay: float | tuple = 1.0
    w: float = 0.5

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind in ("PP", "NN"):
            kind = kind[0]
        if kind not in ("P", "N"):
            raise ConfigError(f"coupling kind must be P or N, got {self.kind!r}", key="ho.coupling")
        object.__setattr__(self, "kind", kind)
        for name in ("strength", "delay"):
            val = getattr(self, name)
            vals = tuple(val) if isinstance(val, (list, tuple)) else (val,)
            for v in vals:
                if not (math.isfinite(v) and v >= 0):
                    raise ConfigError(f"coupling {name} must be finite and >= 0, got {v!r}")
            if isinstance(val, list):
                object.__setattr__(self, name, tuple(val))
        if not 0.0 <= self.w <= 1.0:
            raise ConfigError(f"w must lie in [0, 1], got {self.w!r}", key="ho.w")

    @property
    def pp(self) -> int:
        return 1 if self.kind == "P" else 0

    def level_strength(self, m):
        s = self.strength
        return float(s[m] if isinstance(s, tuple) else s)

    def level_delay(self, m):
        d = self.delay
        return float(d[m] if isinstance(d, tuple) else d)


@dataclass(frozen=True)
class Topology:
    """Ring of ``n`` peers, or a uniform tree of ``levels`` x ``children``."""

    shape: str
    n: int = 0
    levels: int = 1
    children: int = 1
    level_sizes: tuple = field(init=False)
    level_offsets: tuple = field(init=False)
    parent: tuple = field(init=False)

    def __post_init__(self):
        if self.shape == "flat":
            if self.n < 2:
                raise InvalidTopology(f"a flat network needs N >= 2 oscillators, got {self.n}")
            sizes = (self.n,)
            parent = tuple([-1] * self.n)
        elif self.shape == "hierarchy":
            if self.levels < 1 or self.children < 1:
                raise InvalidTopology(
                    f"a hierarchy needs M >= 1 and C >= 1, got M={self.levels}, C={self.children}")
            sizes = tuple(self.children ** (self.levels - 1 - m) for m in range(self.levels))
            offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
            parent = []
            for m, size in enumerate(sizes):
                for i in range(size):
                    parent.append(int(offsets[m + 1] + i // self.children) if m < self.levels - 1 else -1)
            parent = tuple(parent)
        else:
            raise InvalidTopology(f"unknown topology shape {self.shape!r}")
        offsets = tuple(int(x) for x in np.concatenate([[0], np.cumsum(sizes)[:-1]]))
        object.__setattr__(self, "level_sizes", sizes)
        object.__setattr__(self, "level_offsets", offsets)
        object.__setattr__(self, "parent", parent)

    @property
    def count(self) -> int:
        return sum(self.level_sizes)

    @property
    def n_levels(self) -> int:
        return len(self.level_sizes)

    def level_indices(self, m) -> np.ndarray:
        return np.arange(self.level_offsets[m], self.level_offsets[m] + self.level_sizes[m])

    def level_of(self, j) -> int:
        for m in reversed(range(self.n_levels)):
            if j >= self.level_offsets[m]:
                return m
        raise IndexError(j)

    def children_of(self, j) -> list:
        return [i for i, p in enumerate(self.parent) if p == j]

    def input_matrix(self, w) -> np.ndarray:
        """Row j gives oscillator j's coupling input as weights over all X."""
        n = self.count
        a = np.zeros((n, n))
        if self.shape == "flat":
            for i in range(n):
                a[i, (i - 1) % n] = 1.0  # i - 1 wraps to N - 1
            return a
        top = self.n_levels - 1
        for j in range(n):
            m = self.level_of(j)
            if top == 0:
                continue
            parent_row = np.zeros(n)
            mean_row = np.zeros(n)
            if m < top:
                parent_row[self.parent[j]] = 1.0
            if m > 0:
                kids = self.children_of(j)
                mean_row[kids] = 1.0 / len(kids)
            if m == 0:
                a[j] = parent_row
            elif m == top:
                a[j] = mean_row
            else:
                a[j] = eval_gamma(parent_row, mean_row, w)
        return a


class OscillatorSystem:
    """Right-hand side of a coupled oscillator network, ready for ``dde.integrate``."""

    def __init__(self, topology: Topology, coupling: CouplingSpec):
        self.topology = topology
        self.coupling = coupling
        n = topology.count
        self.n = n
        self.dim = 2 * n
        self.pp = coupling.pp
        self._a = topology.input_matrix(coupling.w)
        coupled = topology.n_levels > 1 or topology.shape == "flat"

        levels = range(topology.n_levels)
        self._f = np.zeros(n)
        level_delay = {}
        for m in levels:
            idx = topology.level_indices(m)
            self._f[idx] = coupling.level_strength(m) if coupled else 0.0
            level_delay[m] = coupling.level_delay(m)
        lags = {INTERNAL_LAG}
        lags.update(d for d in level_delay.values() if d > 0 and coupled)
        self.delays = DelaySpec(tuple(sorted(lags)))
        self._lag2 = self.delays.lags.index(INTERNAL_LAG)
        # group rows by delay so each group needs one delayed lookup
        self._groups = []
        if coupled:
            by_delay = {}
            for m in levels:
                by_delay.setdefault(level_delay[m], []).extend(topology.level_indices(m).tolist())
            for d, rows in sorted(by_delay.items()):
                rows = np.array(sorted(rows))
                slot = self.delays.lags.index(d) if d > 0 else None
                self._groups.append((slot, rows, self._a[rows]))
        self._single_group = len(self._groups) == 1 and len(self._groups[0][1]) == n

    def x_index(self, j) -> int:
        return j

    def y_index(self, j) -> int:
        return self.n + j

    def coupling_input(self, y, delayed):
        n = self.n
        if not self._groups:
            return np.zeros(n)
        if self._single_group:
            slot, _, a = self._groups[0]
            src = y if slot is None else delayed[slot]
            return a @ src[:n]
        u = np.zeros(n)
        for slot, rows, a in self._groups:
            src = y if slot is None else delayed[slot]
            u[rows] = a @ src[:n]
        return u

    def rhs(self, t, y, delayed):
        n = self.n
        lag2 = delayed[self._lag2]
        u = self.coupling_input(y, delayed)
        dx = eval_x_rhs(u, lag2[n:], y[:n], self._f, self.pp)
        dy = eval_y_rhs(lag2[:n], y[n:])
        return np.concatenate((dx, dy))

    __call__ = rhs

    def initial_state(self, rng) -> np.ndarray:
        """X uniform on (0, 1) per oscillator, every Y set to 1."""
        x = rng.uniform(0.0, 1.0, self.n)
        return np.concatenate((x, np.ones(self.n)))


def build_flat(n: int, coupling: CouplingSpec) -> OscillatorSystem:
    """Ring of ``n`` oscillators; oscillator i is driven by oscillator i - 1."""
    return OscillatorSystem(Topology("flat", n=n), coupling)


def build_hierarchy(levels: int, children: int, coupling: CouplingSpec) -> OscillatorSystem:
    return OscillatorSystem(Topology("hierarchy", levels=levels, children=children), coupling)


def single_oscillator() -> OscillatorSystem:
    """One uncoupled oscillator (a one-level hierarchy)."""
    return build_hierarchy(1, 1, CouplingSpec())
