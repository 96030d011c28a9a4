"""Jackhammer detector: frame SNR against a median noise floor, envelope
periodicity from a mean-removed autocorrelation, and a two-threshold
decision with dwell delays.

Two time scales are used. Decisions run on non-overlapping frames of
``frame_ms``; the periodicity envelope is sampled at the finer
``envelope_ms`` so that blow rates of 10-30 Hz show up as lags inside
``lag_range``.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .barrier import Ellipse, Obstacle

FLOOR_CLAMP = 1e-8


@dataclass(frozen=True)
class DetectorConfig:
    mu_on: float = 2.0
    mu_off: float = -1.0
    gamma_on: float = 0.22
    gamma_off: float = 0.12
    on_delay_ms: float = 180.0
    off_delay_ms: float = 400.0
    frame_ms: float = 100.0
    floor_window: int = 20
    envelope_ms: float = 5.0
    envelope_window: int = 40
    lag_range: tuple[int, int] = (6, 20)
    # envelopes with relative std below this are treated as constant
    flat_tol: float = 1e-3

    def __post_init__(self) -> None:
        if not self.mu_on > self.mu_off:
            raise ValueError("mu_on must exceed mu_off")
        if not self.gamma_on > self.gamma_off:
            raise ValueError("gamma_on must exceed gamma_off")
        if self.on_delay_ms < 0 or self.off_delay_ms < 0:
            raise ValueError("delays must be nonnegative")
        if self.floor_window < 2 or self.envelope_window < 2:
            raise ValueError("windows must hold at least 2 values")
        lo, hi = self.lag_range
        if not 1 <= lo <= hi:
            raise ValueError(f"bad lag range {self.lag_range}")
        if self.envelope_window < 2 * hi:
            raise ValueError("envelope_window must be at least twice the max lag")
        if not (self.frame_ms > 0 and 0 < self.envelope_ms <= self.frame_ms):
            raise ValueError("frame lengths must be positive with envelope_ms <= frame_ms")

    def frame_samples(self, sample_rate: float) -> int:
        return max(1, int(round(self.frame_ms * 1e-3 * sample_rate)))

    def envelope_samples(self, sample_rate: float) -> int:
        return max(1, int(round(self.envelope_ms * 1e-3 * sample_rate)))


@dataclass
class DetectorState:
    on: bool = False
    floor_buffer: deque = field(default_factory=deque)
    envelope_buffer: deque = field(default_factory=deque)
    pending_since: Optional[float] = None
    last_t: Optional[float] = None
    # last computed cues, kept for logging
    snr_db: float = 0.0
    f_peak: float = 0.0

    @classmethod
    def initial(cls, config: DetectorConfig) -> "DetectorState":
        return cls(
            floor_buffer=deque(maxlen=config.floor_window),
            envelope_buffer=deque(maxlen=config.envelope_window),
        )

    @property
    def z(self) -> int:
        return int(self.on)


def frame_rms(samples) -> float:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty frame")
    return float(np.sqrt(np.mean(x * x)))


def snr_db(e_current: float, floor_buffer: Iterable[float]) -> float:
    """``10 log10(E / median(floor))`` with the floor clamped away from zero."""
    buf = np.asarray(list(floor_buffer), dtype=float)
    if buf.size == 0:
        raise ValueError("noise floor buffer is empty")
    floor = max(float(np.median(buf)), FLOOR_CLAMP)
    return 10.0 * math.log10(max(e_current, FLOOR_CLAMP) / floor)


def periodicity_peak(envelope, lag_range: tuple[int, int], flat_tol: float = 0.0) -> float:
    """Largest normalized autocorrelation over ``lag_range`` (inclusive).

    The normalization divides by the full-window energy, so an exactly
    periodic envelope scores ``1 - lag / K`` rather than 1.
    """
    e = np.asarray(envelope, dtype=float)
    lo, hi = lag_range
    if e.size < 2 * hi:
        raise ValueError(f"envelope of {e.size} values is too short for max lag {hi}")
    d = e - e.mean()
    den = float(d @ d)
    scale = abs(float(e.mean()))
    if den == 0.0 or math.sqrt(den / e.size) <= flat_tol * scale:
        return 0.0
    return max(float(d[:-lag] @ d[lag:]) / den for lag in range(lo, hi + 1))


def detector_update(
    state: DetectorState,
    frame,
    t: float,
    config: DetectorConfig,
    sample_rate: float,
) -> tuple[DetectorState, int]:
    """Consume one frame starting at time ``t`` (seconds)."""
    if state.last_t is not None and t <= state.last_t:
        raise ValueError(f"time went backwards: {t} after {state.last_t}")
    x = np.asarray(frame, dtype=float)
    e_current = frame_rms(x)
    snr = snr_db(e_current, state.floor_buffer) if state.floor_buffer else 0.0
    state.floor_buffer.append(e_current)

    m = config.envelope_samples(sample_rate)
    for k in range(0, x.size - m + 1, m):
        state.envelope_buffer.append(frame_rms(x[k : k + m]))
    if len(state.envelope_buffer) >= config.envelope_window:
        f_peak = periodicity_peak(state.envelope_buffer, config.lag_range, config.flat_tol)
    else:
        f_peak = 0.0

    state = apply_decision(state, snr, f_peak, t, t + x.size / sample_rate, config)
    state.last_t = t
    state.snr_db = snr
    state.f_peak = f_peak
    return state, state.z


def apply_decision(
    state: DetectorState, snr: float, f_peak: float, t: float, t_end: float, config: DetectorConfig
) -> DetectorState:
    """Hysteresis on the two cues for the frame spanning ``[t, t_end)``.

    A switch fires once its condition has held over a span of at least the
    matching delay, measured from the start of the first qualifying frame to
    the end of the current one.
    """
    if state.on:
        switch = snr < config.mu_off and f_peak < config.gamma_off
        delay = config.off_delay_ms * 1e-3
    else:
        switch = snr >= config.mu_on and f_peak >= config.gamma_on
        delay = config.on_delay_ms * 1e-3
    if switch:
        if state.pending_since is None:
            state.pending_since = t
        # small slack so frame arithmetic in floats does not skip a frame
        if t_end - state.pending_since >= delay - 1e-9:
            state.on = not state.on
            state.pending_since = None
    else:
        state.pending_since = None
    return state


@dataclass(frozen=True)
class RiskTimeline:
    """Piecewise-constant risk signal: ``z`` holds from each ``t`` onward."""

    times: tuple[float, ...]
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("timeline needs matching, nonempty times and values")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("timeline times must increase")

    @classmethod
    def constant(cls, z: int = 0) -> "RiskTimeline":
        return cls((0.0,), (int(z),))

    def at(self, t: float) -> int:
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.values[max(i, 0)]

    def intervals_on(self) -> list[tuple[float, float]]:
        out = []
        start = None
        for t, z in zip(self.times, self.values):
            if z and start is None:
                start = t
            elif not z and start is not None:
                out.append((start, t))
                start = None
        if start is not None:
            out.append((start, math.inf))
        return out

    @property
    def transitions(self) -> int:
        return len(self.times) - 1

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "z"])
            for t, z in zip(self.times, self.values):
                w.writerow([repr(float(t)), z])

    @classmethod
    def from_csv(cls, path) -> "RiskTimeline":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or set(rows[0]) != {"t_s", "z"}:
            raise ValueError(f"{path}: expected a t_s,z risk timeline")
        return cls(tuple(float(r["t_s"]) for r in rows), tuple(int(r["z"]) for r in rows))


def detect_stream(
    samples, sample_rate: float, config: DetectorConfig = DetectorConfig()
) -> RiskTimeline:
    """Run the detector over a whole recording; a trailing partial frame is dropped."""
    if not sample_rate > 0:
        raise ValueError(f"sample rate must be positive, got {sample_rate}")
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ValueError("detector expects mono samples")
    n = config.frame_samples(sample_rate)
    state = DetectorState.initial(config)
    times, values = [0.0], [0]
    for i in range(x.size // n):
        state, z = detector_update(state, x[i * n : (i + 1) * n], i * n / sample_rate, config, sample_rate)
        if z != values[-1]:
            times.append((i + 1) * n / sample_rate)
            values.append(z)
    return RiskTimeline(tuple(times), tuple(values))


def inflate(obstacle: Obstacle, z: int) -> tuple[float, tuple[float, float]]:
    """Obstacle geometry under risk state ``z``: ``(r_eff, (a, b))``.

    Circles grow additively by ``d_base``; ellipses scale both axes by
    ``r_eff / r`` which keeps the aspect ratio.
    """
    r_eff = obstacle.effective_radius(z)
    if isinstance(obstacle.shape, Ellipse):
        scale = r_eff / obstacle.r
        b = obstacle.r * scale
        return r_eff, (obstacle.shape.aspect * obstacle.r * scale, b)
    return r_eff, (r_eff, r_eff)
