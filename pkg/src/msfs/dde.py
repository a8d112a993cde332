"""Fixed-step method-of-steps solver for DDEs with constant delays.

Each step is a classical RK4 step. Delayed states are read from the
constant-history function for ``t - lag <= 0`` and otherwise from a cubic
Hermite interpolant built from the node values and node derivatives
already computed, so a step never looks past the integration front as
long as ``h <= min(lags)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, IntegrationDiverged, OutOfRange

# rhs(t, y, delayed) -> dy/dt, where delayed[j] is the state at t - lags[j]
RHS = Callable[[float, np.ndarray, Sequence[np.ndarray]], np.ndarray]


@dataclass(frozen=True)
class DelaySpec:
    lags: tuple[float, ...]

    def __post_init__(self):
        lags = tuple(float(x) for x in self.lags)
        if not lags:
            raise ConfigError("at least one lag is required", key="lags")
        for lag in lags:
            if not math.isfinite(lag) or lag <= 0:
                raise ConfigError(f"lags must be finite and > 0, got {lag!r}", key="lags")
        object.__setattr__(self, "lags", lags)

    @property
    def max_lag(self) -> float:
        return max(self.lags)


@dataclass(frozen=True)
class SolverConfig:
    h: float = 0.05
    t_end: float = 500.0

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ConfigError(f"solver.h must be > 0, got {self.h!r}", key="solver.h")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ConfigError(f"solver.t_end must be > 0, got {self.t_end!r}", key="solver.t_end")


class ConstantHistory:
    """History function equal to a fixed state for every t <= 0."""

    def __init__(self, state):
        self.state = np.array(state, dtype=float)
        self.state.setflags(write=False)

    def __call__(self, t):
        return self.state

    def __repr__(self):
        return f"ConstantHistory({self.state.tolist()!r})"


def hermite(theta, dt, y0, y1, m0, m1):
    """Cubic Hermite interpolant on one step, ``theta`` in [0, 1]."""
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + theta
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    return h00 * y0 + (h10 * dt) * m0 + h01 * y1 + (h11 * dt) * m1


class Trajectory:
    """Dense solution on [0, t_end]: mesh nodes, node derivatives, history.

    Arrays are read-only so a trajectory can be shared between workers.
    """

    def __init__(self, times, states, derivs, history, lags):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self.derivs = np.asarray(derivs, dtype=float)
        for arr in (self.times, self.states, self.derivs):
            arr.setflags(write=False)
        self.history = history
        self.lags = tuple(lags)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def _locate(self, t):
        times = self.times
        k = int(np.searchsorted(times, t, side="right")) - 1
        return min(max(k, 0), len(times) - 1)

    def sample(self, t: float) -> np.ndarray:
        """State at time ``t``; exact at mesh nodes, Hermite in between."""
        t = float(t)
        lo = -max(self.lags) if self.lags else 0.0
        if t < lo or t > self.t_end or math.isnan(t):
            raise OutOfRange(f"t={t!r} outside [{lo:g}, {self.t_end:g}]")
        if t < 0:
            return np.array(self.history(t), dtype=float)
        k = self._locate(t)
        t0 = self.times[k]
        if t == t0:
            return self.states[k].copy()
        dt = self.times[k + 1] - t0
        return hermite((t - t0) / dt, dt, self.states[k], self.states[k + 1],
                       self.derivs[k], self.derivs[k + 1])

    def sample_many(self, ts) -> np.ndarray:
        return np.array([self.sample(t) for t in ts])

    def component(self, idx, t_start=0.0, t_stop=None):
        """Node times and values of one or more components in a window."""
        t_stop = self.t_end if t_stop is None else t_stop
        mask = (self.times >= t_start) & (self.times <= t_stop)
        return self.times[mask], self.states[mask][:, idx]


def _mesh(h, t_end):
    n = int(math.floor(t_end / h + 1e-9))
    times = h * np.arange(n + 1, dtype=float)
    if t_end - times[-1] > 1e-9 * h:
        times = np.append(times, t_end)
    else:
        times[-1] = t_end if n > 0 else times[-1]
    return times


def integrate(rhs: RHS, delays: DelaySpec, history, config: SolverConfig) -> Trajectory:
    """Integrate ``y' = rhs(t, y, [y(t - lag) for lag in delays.lags])`` on [0, t_end].

    ``history`` is either a callable of t (valid for t <= 0) or a state vector,
    which is taken as a constant history.
    """
    if not callable(history):
        history = ConstantHistory(history)
    lags = delays.lags
    h = config.h
    if h > min(lags):
        raise ConfigError(f"solver.h={h:g} exceeds the smallest lag {min(lags):g}", key="solver.h")

    y0 = np.array(history(0.0), dtype=float)
    if y0.ndim != 1:
        raise ConfigError("history must return a 1-D state vector", key="history")
    times = _mesh(h, config.t_end)
    n_nodes = len(times)
    dim = y0.shape[0]
    Y = np.empty((n_nodes, dim))
    F = np.empty((n_nodes, dim))
    Y[0] = y0
    F[:] = np.nan
    front = 0  # index of the last node whose value is known
    snap = 1e-9 * h

    def delayed_at(s):
        if s <= 0.0:
            return np.asarray(history(s), dtype=float)
        # uniform mesh except possibly the final step
        k = int(s / h)
        if k > front:
            k = front
        while k > 0 and times[k] > s:
            k -= 1
        while k < front and times[k + 1] <= s:
            k += 1
        t0 = times[k]
        if s - t0 <= snap or k == front:
            # s can overshoot the front by rounding only
            return Y[k]
        if times[k + 1] - s <= snap:
            return Y[k + 1]
        dt = times[k + 1] - t0
        return hermite((s - t0) / dt, dt, Y[k], Y[k + 1], F[k], F[k + 1])

    def lookup(t):
        return [delayed_at(t - lag) for lag in lags]

    f = rhs
    for n in range(n_nodes - 1):
        t = times[n]
        dt = times[n + 1] - t
        y = Y[n]
        k1 = np.asarray(f(t, y, lookup(t)), dtype=float)
        F[n] = k1
        half = lookup(t + 0.5 * dt)
        k2 = f(t + 0.5 * dt, y + (0.5 * dt) * k1, half)
        k3 = f(t + 0.5 * dt, y + (0.5 * dt) * k2, half)
        k4 = f(t + dt, y + dt * k3, lookup(t + dt))
        y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y_new)):
            raise IntegrationDiverged(float(times[n + 1]))
        Y[n + 1] = y_new
        front = n + 1
    F[-1] = np.asarray(f(times[-1], Y[-1], lookup(times[-1])), dtype=float)
    if not np.all(np.isfinite(F[-1])):
        raise IntegrationDiverged(float(times[-1]))
    return Trajectory(times, Y, F, history, lags)
