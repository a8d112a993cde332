"""Behaviour classification and period/amplitude/synchrony measurements."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .errors import ConfigError, InsufficientData


@dataclass(frozen=True)
class AnalysisConfig:
    """Thresholds for classification.

    eps_osc: peak-to-peak amplitude below which a signal is not oscillating.
    eps_sync: synchrony tolerance as a fraction of the measured amplitude.
    sync_tail: fraction of the run, ending at the window end, over which
        synchrony must hold.
    phase_tol: cross-level peak offset, as a fraction of the period, still
        counted as in phase.
    window: fraction of the run, ending at t_end, used for measurements.
    min_periods: periods the window must contain for a classification.
    """

    eps_osc: float = 0.01
    eps_sync: float = 0.05
    sync_tail: float = 0.25
    phase_tol: float = 0.05
    window: float = 0.5
    min_periods: int = 5

    def __post_init__(self):
        for name in ("eps_osc", "eps_sync", "phase_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"analysis.{name} must be > 0", key=f"analysis.{name}")
        for name in ("sync_tail", "window"):
            if not 0 < getattr(self, name) <= 1:
                raise ConfigError(f"analysis.{name} must lie in (0, 1]", key=f"analysis.{name}")
        if self.sync_tail > self.window:
            raise ConfigError("analysis.sync_tail cannot exceed analysis.window", key="analysis.sync_tail")


class BehaviorClass(enum.Enum):
    NO_OSCILLATION = "no-oscillation"
    UNSYNCHRONIZED = "unsynchronized"
    IN_PHASE = "synchronized-in-phase"
    OUT_OF_PHASE = "synchronized-out-of-phase"

    @property
    def oscillating(self) -> bool:
        return self is not BehaviorClass.NO_OSCILLATION

    @property
    def synchronized(self) -> bool:
        return self in (BehaviorClass.IN_PHASE, BehaviorClass.OUT_OF_PHASE)


@dataclass(frozen=True)
class BehaviorReport:
    behavior: BehaviorClass
    period: float | None
    amplitude: float | None
    sync_time: float | None
    window: tuple

    def as_dict(self):
        return {
            "class": self.behavior.value,
            "period": self.period,
            "amplitude": self.amplitude,
            "sync_time": self.sync_time,
            "window": list(self.window),
        }

    def summary(self) -> str:
        def fmt(v):
            return "-" if v is None else f"{v:.6g}"

        return (f"class={self.behavior.value} period={fmt(self.period)} "
                f"amplitude={fmt(self.amplitude)} sync_time={fmt(self.sync_time)} "
                f"window=[{self.window[0]:g}, {self.window[1]:g}]")


def _windowed(t, x, window):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t, x = t[mask], x[mask]
    if t.size == 0:
        raise InsufficientData("empty analysis window")
    return t, x


def _peaks(x):
    """Indices of the major maxima, ignoring ripples smaller than a quarter of the range."""
    span = float(np.ptp(x))
    if span == 0:
        return np.array([], dtype=int)
    idx, _ = find_peaks(x, prominence=0.25 * span)
    return idx


def _refine(t, x, i):
    """Sub-sample peak time from a parabola through three samples."""
    if i <= 0 or i >= len(x) - 1:
        return t[i]
    y0, y1, y2 = x[i - 1], x[i], x[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return t[i]
    return t[i] + 0.5 * (y0 - y2) / denom * (t[i + 1] - t[i])


def peak_times(t, x, window=None):
    t, x = _windowed(t, x, window)
    return np.array([_refine(t, x, i) for i in _peaks(x)])


def measure_amplitude(t, x, window=None, eps_osc=0.01):
    """Median over cycles of (cycle max - cycle min); None if not oscillating."""
    t, x = _windowed(t, x, window)
    if np.ptp(x) < eps_osc:
        return None
    idx = _peaks(x)
    if len(idx) < 2:
        return None
    amps = [np.ptp(x[a:b + 1]) for a, b in zip(idx[:-1], idx[1:])]
    amp = float(np.median(amps))
    return amp if amp >= eps_osc else None


def measure_period(t, x, window=None, eps_osc=0.01):
    """Mean interval between successive major maxima; None if not oscillating."""
    t, x = _windowed(t, x, window)
    if measure_amplitude(t, x, eps_osc=eps_osc) is None:
        return None
    peaks = peak_times(t, x)
    return float((peaks[-1] - peaks[0]) / (len(peaks) - 1))


def spread(states):
    """Per-sample max minus min across the columns of ``states``."""
    return states.max(axis=1) - states.min(axis=1)


def _level_x(trajectory, topology, m):
    return trajectory.states[:, topology.level_indices(m)]


def _window(trajectory, cfg, window):
    if window is not None:
        return tuple(float(v) for v in window)
    t_end = trajectory.t_end
    return (t_end * (1.0 - cfg.window), t_end)


def _bottom_stats(trajectory, topology, cfg, window):
    t = trajectory.times
    xb = _level_x(trajectory, topology, 0)
    amps, periods = [], []
    for col in xb.T:
        a = measure_amplitude(t, col, window, cfg.eps_osc)
        if a is not None:
            amps.append(a)
            p = measure_period(t, col, window, cfg.eps_osc)
            if p is not None:
                periods.append(p)
    return amps, periods


def is_synchronized(trajectory, topology, amplitude, cfg=AnalysisConfig(), window=None):
    """Bottom-level spread stays below eps_sync * amplitude over the tail of the window."""
    lo, hi = _window(trajectory, cfg, window)
    tail = (hi - cfg.sync_tail * trajectory.t_end, hi)
    t = trajectory.times
    mask = (t >= tail[0]) & (t <= tail[1])
    if not mask.any():
        raise InsufficientData("empty synchrony window")
    s = spread(_level_x(trajectory, topology, 0)[mask])
    return bool(s.max() < cfg.eps_sync * amplitude)


def phase_offset(t, lower, upper, period, window=None):
    """Median circular offset between the peaks of two signals, in periods (0..0.5)."""
    a = peak_times(t, lower, window)
    b = peak_times(t, upper, window)
    if len(a) == 0 or len(b) == 0:
        return None
    offs = []
    for tb in b:
        d = tb - a[np.argmin(np.abs(a - tb))]
        frac = (d / period) % 1.0
        offs.append(min(frac, 1.0 - frac))
    return float(np.median(offs))


def sync_time(trajectory, topology, amplitude=None, cfg=AnalysisConfig(), window=None):
    """Earliest time after which bottom-level synchrony holds through t_end."""
    if amplitude is None:
        amps, _ = _bottom_stats(trajectory, topology, cfg, _window(trajectory, cfg, window))
        if not amps:
            return None
        amplitude = float(np.median(amps))
    t = trajectory.times
    hi = _window(trajectory, cfg, window)[1]
    mask = t <= hi
    s = spread(_level_x(trajectory, topology, 0)[mask])
    bad = np.flatnonzero(s >= cfg.eps_sync * amplitude)
    if bad.size == 0:
        return float(t[0])
    last = bad[-1]
    if last >= s.size - 1:
        return None
    return float(t[last + 1])


def classify(trajectory, topology, cfg=AnalysisConfig(), window=None) -> BehaviorReport:
    win = _window(trajectory, cfg, window)
    amps, periods = _bottom_stats(trajectory, topology, cfg, win)
    if not amps:
        return BehaviorReport(BehaviorClass.NO_OSCILLATION, None, None, None, win)
    amplitude = float(np.median(amps))
    if not periods:
        raise InsufficientData("oscillation detected but no period could be measured")
    period = float(np.median(periods))
    if win[1] - win[0] < cfg.min_periods * period:
        raise InsufficientData(
            f"window of {win[1] - win[0]:g} holds fewer than {cfg.min_periods} periods of {period:g}")
    if not is_synchronized(trajectory, topology, amplitude, cfg, win):
        return BehaviorReport(BehaviorClass.UNSYNCHRONIZED, period, amplitude, None, win)
    behavior = BehaviorClass.IN_PHASE
    t = trajectory.times
    means = [_level_x(trajectory, topology, m).mean(axis=1) for m in range(topology.n_levels)]
    for lower, upper in zip(means[:-1], means[1:]):
        if measure_amplitude(t, upper, win, cfg.eps_osc) is None:
            continue
        off = phase_offset(t, lower, upper, period, win)
        if off is not None and off > cfg.phase_tol:
            behavior = BehaviorClass.OUT_OF_PHASE
            break
    st = sync_time(trajectory, topology, amplitude, cfg, win)
    return BehaviorReport(behavior, period, amplitude, st, win)
