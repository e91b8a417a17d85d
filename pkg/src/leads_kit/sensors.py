"""Signal-level sensor decoding.

Wheel speed comes from a Hall-switch pulse train: the raw level trace is
normalized to falling edges (a magnet can sit in the detection range for
several ticks), the interval between pulses gives the speed, and bounce
pulses are dropped by comparing each reading against the speed predicted
from accelerometer data. IMU readings are corrected for gravity using the
yaw/pitch/roll rotation matrix.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import OrderingError

#: km/h per (cm / s): 1 cm/s = 0.036 km/h.
SPEED_CONSTANT_KMH = 0.036

#: Default world-frame gravity, m/s^2 (z up).
GRAVITY = (0.0, 0.0, -9.81)


@dataclass(frozen=True)
class WheelConfig:
    """Geometry and decode parameters for one wheel's pulse sensor.

    ``circumference_cm`` is the rolling circumference in centimeters and
    ``magnet_count`` the number of equally spaced magnets. The decoded speed
    is ``speed_constant * circumference_cm / (interval_s * magnet_count)``;
    the default constant 0.036 yields km/h for cm and seconds.
    ``dropout_threshold`` is the outlier-rejection factor.
    """

    circumference_cm: float
    magnet_count: int = 1
    speed_constant: float = SPEED_CONSTANT_KMH
    dropout_threshold: float = 1.5

    def __post_init__(self) -> None:
        if self.circumference_cm <= 0:
            raise ValueError("circumference_cm must be positive")
        if self.magnet_count < 1:
            raise ValueError("magnet_count must be >= 1")
        if self.speed_constant <= 0:
            raise ValueError("speed_constant must be positive")
        if self.dropout_threshold <= 0:
            raise ValueError("dropout_threshold must be positive")


def load_pulse_csv(path: str) -> list[tuple[float, int]]:
    """Read a (t, level) pulse log; level accepts 0/1 or low/high labels."""
    import csv

    from .errors import ParseError

    rows: list[tuple[float, int]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, 1):
            if not row or row[0].strip().lower() in ("t", "time"):
                continue  # header or blank
            try:
                t = float(row[0])
                raw = row[1].strip().lower()
                level = {"high": 1, "low": 0, "1": 1, "0": 0}[raw]
            except (IndexError, KeyError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad pulse row {row!r}") from exc
            rows.append((t, level))
    return rows


def normalize_pulses(levels: Iterable[tuple[float, int]]) -> list[float]:
    """Timestamps of high-to-low transitions in an ordered level trace.

    ``levels`` holds (t, level) pairs with level 1 for high (switch off) and
    0 for low (switch on). Repeated lows emit nothing; a leading low with no
    prior high is not an edge.
    """
    pulses: list[float] = []
    prev_level = None
    prev_t = None
    for t, level in levels:
        if prev_t is not None and t <= prev_t:
            raise OrderingError(f"pulse levels must be ordered in t, got {t!r} after {prev_t!r}")
        if prev_level == 1 and level == 0:
            pulses.append(t)
        prev_level = level
        prev_t = t
    return pulses


def wheel_speed(config: WheelConfig, t_prev: float, t_curr: float) -> float:
    """Speed in km/h from two consecutive pulse timestamps."""
    interval = t_curr - t_prev
    if interval <= 0:
        raise OrderingError(f"pulse interval must be positive, got {interval!r}")
    return config.speed_constant * config.circumference_cm / (interval * config.magnet_count)


def decode_pulse_train(config: WheelConfig, pulses: Sequence[float]) -> list[tuple[float, float]]:
    """(t, km/h) samples from a normalized pulse train, stamped at the later pulse."""
    return [
        (pulses[i], wheel_speed(config, pulses[i - 1], pulses[i]))
        for i in range(1, len(pulses))
    ]


def predict_speed(v0: float, a0: float, a1: float, t0: float, t1: float) -> float:
    """Speed in km/h at t1 from speed at t0 plus a trapezoidal accel integral.

    Accelerations are m/s^2; the 1.8 factor is the trapezoid's 1/2 combined
    with the 3.6 m/s -> km/h conversion.
    """
    if t1 <= t0:
        raise OrderingError(f"t1 must exceed t0, got {t0!r} -> {t1!r}")
    return v0 + 1.8 * (a0 + a1) * (t1 - t0)


def dropout_filter(
    config: WheelConfig, samples: Sequence[tuple[float, float, float]]
) -> list[tuple[float, float, float]]:
    """Remove bounce readings from (t, speed km/h, accel m/s^2) samples.

    A reading is dropped when it disagrees with the acceleration-predicted
    speed by more than ``dropout_threshold`` times the predicted change;
    comparisons always anchor on the last kept sample so one bounce cannot
    poison the rest of the train. The first sample is always kept, as is any
    sample whose predicted change is exactly zero.
    """
    if not samples:
        return []
    ts = [s[0] for s in samples]
    for i in range(1, len(ts)):
        if ts[i] <= ts[i - 1]:
            raise OrderingError(f"samples must be ordered in t, got {ts[i]!r} after {ts[i-1]!r}")
    vs = [s[1] for s in samples]
    accs = [s[2] for s in samples]
    kept = _kernels.dropout_keep(ts, vs, accs, config.dropout_threshold)
    return [samples[i] for i in kept]


def merge_wheel_speeds(
    trip,
    samples: Sequence[tuple[float, float]],
    channel: str = "front_wheel_speed",
    tolerance: float = 0.05,
):
    """Fill a wheel-speed channel from decoded (t, km/h) samples.

    Each frame missing ``channel`` takes the nearest decoded sample within
    ``tolerance`` seconds; present values are kept. Returns a new trip.
    """
    from .model import Trip

    frames = list(trip.frames)
    times = [t for t, _ in samples]
    for i, frame in enumerate(frames):
        if getattr(frame, channel) is not None or not samples:
            continue
        k = bisect_left(times, frame.t)
        candidates = [j for j in (k - 1, k) if 0 <= j < len(samples)]
        best = min(candidates, key=lambda j: abs(times[j] - frame.t))
        if abs(times[best] - frame.t) <= tolerance:
            frames[i] = frame.with_channels(**{channel: samples[best][1]})
    return Trip(
        frames,
        name=trip.name,
        recorded_at=trip.recorded_at,
        config=trip.config,
        media_events=list(trip.media_events),
    )


def rotation_x(roll: float) -> np.ndarray:
    c, s = math.cos(roll), math.sin(roll)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(pitch: float) -> np.ndarray:
    c, s = math.cos(pitch), math.sin(pitch)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_matrix(orientation: Sequence[float]) -> np.ndarray:
    """World-from-sensor rotation for (yaw, pitch, roll): Rz @ Ry @ Rx."""
    yaw, pitch, roll = orientation
    return rotation_z(yaw) @ rotation_y(pitch) @ rotation_x(roll)


def compensate_gravity(
    orientation: Sequence[float],
    a_measured: Sequence[float],
    gravity: Sequence[float] = GRAVITY,
) -> np.ndarray:
    """Linear acceleration: measured reading minus gravity seen by the sensor.

    The sensor-frame gravity is R^T @ g where R is the orientation's
    rotation matrix; a resting sensor reading exactly R^T @ g compensates to
    the zero vector for any orientation.
    """
    rt = rotation_matrix(orientation).T
    return np.asarray(a_measured, dtype=float) - rt @ np.asarray(gravity, dtype=float)


def sensor_frame_gravity(
    orientation: Sequence[float], gravity: Sequence[float] = GRAVITY
) -> np.ndarray:
    """Gravity expressed in the sensor's frame (R^T @ g)."""
    return rotation_matrix(orientation).T @ np.asarray(gravity, dtype=float)
