"""Adaptive frame pacing.

A frame consists of its work (the "net delay") followed by a computed wait.
The governor records the last 10 seconds of frame times and net delays,
fits a degree-5 polynomial to the net delays, and sets the wait to the
target interval minus the predicted next net delay, floored at 1 ms. The
prediction is scaled by how full the 10-second window is, so the governor
compensates gently while it is still learning and fully once the window is
populated; measured rates therefore ramp up over the first seconds and hold
the target thereafter.
"""

from __future__ import annotations

import time
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .errors import DomainError, InsufficientDataError, OrderingError

#: Minimum inter-frame wait, seconds.
MIN_WAIT = 0.001

#: Seconds of history the delay queues retain.
WINDOW_SECONDS = 10.0

#: Below this many samples a degree-5 fit is under-determined; use the mean.
MIN_FIT_SAMPLES = 6


class Clock(Protocol):
    """Injectable time source so pacing is testable off the wall clock."""

    def now(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class WallClock:
    """Monotonic wall-clock time."""

    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class SimulatedClock:
    """Deterministic clock whose time advances only via sleep()."""

    def __init__(self, start: float = 0.0) -> None:
        self._now = start

    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float) -> None:
        if seconds < 0:
            raise DomainError(f"cannot sleep {seconds!r} s")
        self._now += seconds


#: Queries may extrapolate this far beyond the fitted span (normalized
#: units); a quintic carries no information further out, and x^5 would
#: amplify coefficient noise without the clamp.
EXTRAPOLATION_MARGIN = 0.25


@dataclass(frozen=True)
class DelayPredictor:
    """Degree-5 polynomial over affinely normalized time.

    ``coefficients`` are highest-power-first over x in [-1, 1]. Queries are
    clamped to slightly beyond the fitted span, so predictions are finite
    and bounded for any finite query time.
    """

    coefficients: tuple[float, ...]
    t_lo: float
    t_hi: float

    def predict(self, t: float) -> float:
        if self.t_hi > self.t_lo:
            x = 2.0 * (t - self.t_lo) / (self.t_hi - self.t_lo) - 1.0
            lo, hi = -1.0 - EXTRAPOLATION_MARGIN, 1.0 + EXTRAPOLATION_MARGIN
            x = min(max(x, lo), hi)
        else:
            x = 0.0
        return float(np.polyval(self.coefficients, x))


class PacerState:
    """Delay bookkeeping and wait computation for one frame loop.

    Keeps three FIFO queues capped at 10 seconds' worth of frames: frame
    start times, net delays (work durations), and total delays (differences
    between consecutive frame starts; the total delays are diagnostics and
    do not feed the prediction).
    """

    def __init__(self, target_rate: float) -> None:
        if not 0.0 < target_rate <= 1000.0:
            raise DomainError(f"target_rate must be in (0, 1000], got {target_rate!r}")
        self.target_rate = float(target_rate)
        self.interval = 1.0 / self.target_rate
        self.window_len = max(1, int(round(WINDOW_SECONDS * self.target_rate)))
        self.times: deque[float] = deque(maxlen=self.window_len)
        self.net_delays: deque[float] = deque(maxlen=self.window_len)
        self.delays: deque[float] = deque(maxlen=self.window_len)

    def record_frame(self, t: float, net_delay: float) -> None:
        """Record one frame's start time and work duration."""
        if net_delay < 0:
            raise DomainError(f"net_delay must be >= 0, got {net_delay!r}")
        if self.times and t <= self.times[-1]:
            raise OrderingError(f"frame time {t!r} does not increase past {self.times[-1]!r}")
        self.delays.append(t - self.times[-1] if self.times else 0.0)
        self.times.append(t)
        self.net_delays.append(net_delay)

    def fit_predictor(self) -> DelayPredictor:
        """Least-squares degree-5 fit of net delays against frame times.

        Time is normalized to [-1, 1] before fitting (raw seconds raised to
        the 5th power are badly conditioned). With fewer than 6 samples, or
        when the system is degenerate, falls back to the mean net delay as a
        degree-0 fit.
        """
        n = len(self.times)
        if n == 0:
            raise InsufficientDataError("no frames recorded yet")
        ts = np.asarray(self.times, dtype=float)
        ys = np.asarray(self.net_delays, dtype=float)
        t_lo = float(ts[0])
        t_hi = float(ts[-1])
        mean = float(ys.mean())
        if n < MIN_FIT_SAMPLES or t_hi <= t_lo:
            return _constant_predictor(mean, t_lo, t_hi)
        x = 2.0 * (ts - t_lo) / (t_hi - t_lo) - 1.0
        design = np.vander(x, MIN_FIT_SAMPLES)
        coeffs, _, rank, _ = np.linalg.lstsq(design, ys, rcond=None)
        if rank < MIN_FIT_SAMPLES or not np.all(np.isfinite(coeffs)):
            return _constant_predictor(mean, t_lo, t_hi)
        return DelayPredictor(tuple(float(c) for c in coeffs), t_lo, t_hi)

    def predict_net_delay(self, t: float) -> float:
        """Predicted net delay at time t, weighted by window fullness.

        The regression is only trusted in proportion to how much of the
        10-second window it has seen; a sparse window predicts conservatively
        (closer to zero compensation).
        """
        raw = self.fit_predictor().predict(t)
        return raw * (len(self.times) / self.window_len)

    def next_interval(self, t: float) -> float:
        """Wait before the next frame: target interval minus predicted work.

        The prediction is clamped into [0, interval - 1 ms], so the result
        always lies in [1 ms, interval].
        """
        predicted = self.predict_net_delay(t)
        hi = max(self.interval - MIN_WAIT, 0.0)
        clamped = min(max(predicted, 0.0), hi)
        wait = self.interval - clamped
        # Guard the bounds against 1-ulp rounding in the subtraction.
        return min(max(wait, MIN_WAIT), self.interval)


def _constant_predictor(mean: float, t_lo: float, t_hi: float) -> DelayPredictor:
    return DelayPredictor((0.0, 0.0, 0.0, 0.0, 0.0, mean), t_lo, t_hi)


@dataclass
class PaceSample:
    """Per-second measurement of the running loop."""

    t: float
    rate: float
    avg_net_ms: float


@dataclass
class PaceTrace:
    """Everything a paced run produced: per-frame log and per-second samples."""

    target_rate: float
    frame_times: list[float] = field(default_factory=list)
    net_delays: list[float] = field(default_factory=list)
    samples: list[PaceSample] = field(default_factory=list)

    def rate_at(self, t: float, window: float = 1.0) -> float:
        """Frame rate over the trailing ``window`` seconds before t.

        Measured as the inverse mean inter-frame interval of the frames
        started within (t - window, t]; integer frame counts cannot resolve
        sub-frame rate differences.
        """
        lo = bisect_right(self.frame_times, t - window)
        hi = bisect_right(self.frame_times, t)
        k = hi - lo
        if k < 2:
            return float(k) / window
        span = self.frame_times[hi - 1] - self.frame_times[lo]
        return (k - 1) / span if span > 0 else float(k) / window

    def avg_net_ms_at(self, t: float, window: float = 1.0) -> float:
        lo = bisect_right(self.frame_times, t - window)
        hi = bisect_right(self.frame_times, t)
        if hi == lo:
            return 0.0
        return 1000.0 * sum(self.net_delays[lo:hi]) / (hi - lo)

    def sample_at(self, t: float) -> PaceSample:
        sample = PaceSample(t, self.rate_at(t), self.avg_net_ms_at(t))
        self.samples.append(sample)
        return sample


def run_paced_loop(
    target_rate: float,
    frame_work: Callable[[float], float],
    clock: Clock,
    duration: float,
    sample_every: float = 1.0,
) -> PaceTrace:
    """Run a frame loop at ``target_rate`` until ``duration`` elapses.

    Each iteration runs ``frame_work(t)`` (which returns the frame's net
    delay in seconds), makes sure the clock has advanced by that much,
    records the frame, then waits the governor's interval. The trace is
    sampled every ``sample_every`` seconds of clock time.
    """
    state = PacerState(target_rate)
    trace = PaceTrace(target_rate=target_rate)
    start = clock.now()
    next_sample = start + sample_every
    while True:
        t0 = clock.now()
        if t0 - start >= duration:
            break
        net = frame_work(t0)
        if net < 0:
            raise DomainError(f"frame_work returned a negative net delay: {net!r}")
        elapsed = clock.now() - t0
        if net > elapsed:
            clock.sleep(net - elapsed)
        trace.frame_times.append(t0)
        trace.net_delays.append(net)
        state.record_frame(t0, net)
        wait = state.next_interval(clock.now())
        clock.sleep(wait)
        while next_sample <= clock.now() and next_sample - start <= duration:
            trace.sample_at(next_sample)
            next_sample += sample_every
    return trace
