"""Core domain types and numeric conventions.

Time is seconds (float64) relative to trip start. Integration is the left
Riemann sum and differentiation the forward difference, so integrating a
derivative telescopes back to the endpoint difference exactly.

Missing channels are ``None``, never sentinel values: downstream passes must
be able to tell "absent" from "zero".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Iterable, Iterator, Sequence

from .errors import DomainError, InsufficientDataError, OrderingError, ParseError

Vec3 = tuple[float, float, float]

# Channels constrained to [0, 1].
FRACTION_CHANNELS = ("throttle", "brake")
# Channels constrained to >= 0.
SPEED_CHANNELS = (
    "front_wheel_speed",
    "rear_wheel_speed",
    "fl",
    "fr",
    "rl",
    "rr",
    "gps_ground_speed",
    "speed",
)
VECTOR_CHANNELS = ("accel", "orientation")

#: Fixed column order for CSV export; vector channels are flattened.
CSV_COLUMNS = (
    "t",
    "front_wheel_speed",
    "rear_wheel_speed",
    "fl",
    "fr",
    "rl",
    "rr",
    "throttle",
    "brake",
    "steering_angle",
    "accel_forward",
    "accel_lateral",
    "accel_vertical",
    "yaw",
    "pitch",
    "roll",
    "gps_lat",
    "gps_lon",
    "gps_ground_speed",
    "mileage",
    "obstacle_distance",
    "speed",
)


@dataclass(frozen=True, slots=True)
class TelemetryFrame:
    """One timestamped sample of all vehicle channels.

    Every channel except ``t`` is optional. Units: speeds in km/h, fractions
    in [0, 1], steering in degrees (+right), ``accel`` in m/s^2 as
    (forward, lateral +right, vertical), ``orientation`` as (yaw, pitch,
    roll) in radians, GPS in degrees, ``mileage`` in km,
    ``obstacle_distance`` in meters.
    """

    t: float
    front_wheel_speed: float | None = None
    rear_wheel_speed: float | None = None
    fl: float | None = None
    fr: float | None = None
    rl: float | None = None
    rr: float | None = None
    throttle: float | None = None
    brake: float | None = None
    steering_angle: float | None = None
    accel: Vec3 | None = None
    orientation: Vec3 | None = None
    gps_lat: float | None = None
    gps_lon: float | None = None
    gps_ground_speed: float | None = None
    mileage: float | None = None
    obstacle_distance: float | None = None
    speed: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise DomainError(f"frame timestamp must be finite, got {self.t!r}")
        for name in FRACTION_CHANNELS:
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
        for name in SPEED_CHANNELS:
            value = getattr(self, name)
            if value is not None and value < 0.0:
                raise DomainError(f"{name} must be >= 0, got {value!r}")
        for name in VECTOR_CHANNELS:
            value = getattr(self, name)
            if value is None:
                continue
            if len(value) != 3:
                raise DomainError(f"{name} must have 3 components, got {value!r}")
            object.__setattr__(self, name, (float(value[0]), float(value[1]), float(value[2])))

    def present_channels(self) -> tuple[str, ...]:
        """Names of channels that carry a value (excluding ``t``)."""
        return tuple(
            f.name for f in fields(self) if f.name != "t" and getattr(self, f.name) is not None
        )

    def with_channels(self, **channels: Any) -> "TelemetryFrame":
        """Copy of this frame with the given channels set."""
        return replace(self, **channels)

    def to_json_dict(self) -> dict[str, Any]:
        """JSON-ready dict; absent channels are omitted, vectors become lists."""
        out: dict[str, Any] = {"t": self.t}
        for f in fields(self):
            if f.name == "t":
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            out[f.name] = list(value) if f.name in VECTOR_CHANNELS else value
        return out

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "TelemetryFrame":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"unknown frame fields: {sorted(unknown)}")
        if "t" not in data:
            raise ParseError("frame is missing 't'")
        kwargs = dict(data)
        for name in VECTOR_CHANNELS:
            if kwargs.get(name) is not None:
                kwargs[name] = tuple(kwargs[name])
        return cls(**kwargs)

    def csv_row(self) -> list[Any]:
        """Values in :data:`CSV_COLUMNS` order; absent channels become ''."""
        accel = self.accel or (None, None, None)
        orientation = self.orientation or (None, None, None)
        flat = {
            "accel_forward": accel[0],
            "accel_lateral": accel[1],
            "accel_vertical": accel[2],
            "yaw": orientation[0],
            "pitch": orientation[1],
            "roll": orientation[2],
        }
        row = []
        for col in CSV_COLUMNS:
            value = flat[col] if col in flat else getattr(self, col)
            row.append("" if value is None else value)
        return row


@dataclass
class Trip:
    """An ordered sequence of telemetry frames plus recording metadata.

    Frames must be strictly increasing in ``t``; duplicates are rejected at
    construction.
    """

    frames: list[TelemetryFrame]
    name: str = "trip"
    recorded_at: str | None = None
    config: dict[str, Any] | None = None
    media_events: list[tuple[float, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        last = None
        for i, frame in enumerate(self.frames):
            if last is not None and frame.t <= last:
                raise OrderingError(
                    f"frame {i}: t={frame.t!r} does not increase past {last!r}"
                )
            last = frame.t
        last_event = None
        for t, _label in self.media_events:
            if last_event is not None and t <= last_event:
                raise OrderingError(f"media event at t={t!r} does not increase past {last_event!r}")
            last_event = t

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[TelemetryFrame]:
        return iter(self.frames)

    @property
    def duration(self) -> float:
        if not self.frames:
            return 0.0
        return self.frames[-1].t - self.frames[0].t

    def series(self, channel: str) -> list[tuple[float, float]]:
        """(t, value) pairs for the frames where ``channel`` is present.

        Vector components are addressed as ``accel_forward`` etc. per the CSV
        column names.
        """
        pairs: list[tuple[float, float]] = []
        for frame in self.frames:
            value = frame_channel(frame, channel)
            if value is not None:
                pairs.append((frame.t, value))
        return pairs

    def save_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for frame in self.frames:
                fh.write(json.dumps(frame.to_json_dict()) + "\n")

    def save_csv(self, path: str) -> None:
        """Fixed-column CSV (see :data:`CSV_COLUMNS`); absent channels blank."""
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for frame in self.frames:
                writer.writerow(frame.csv_row())

    @classmethod
    def load_jsonl(cls, path: str, name: str | None = None) -> "Trip":
        frames = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
                try:
                    frames.append(TelemetryFrame.from_json_dict(data))
                except (ParseError, DomainError, TypeError) as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from exc
        return cls(frames, name=name or path)


_VECTOR_COMPONENTS = {
    "accel_forward": ("accel", 0),
    "accel_lateral": ("accel", 1),
    "accel_vertical": ("accel", 2),
    "yaw": ("orientation", 0),
    "pitch": ("orientation", 1),
    "roll": ("orientation", 2),
}


def frame_channel(frame: TelemetryFrame, channel: str) -> float | None:
    """Scalar channel accessor that also resolves vector components."""
    if channel in _VECTOR_COMPONENTS:
        name, index = _VECTOR_COMPONENTS[channel]
        vec = getattr(frame, name)
        return None if vec is None else vec[index]
    return getattr(frame, channel)


def _check_ordering(ts: Sequence[float]) -> None:
    for i in range(1, len(ts)):
        if ts[i] <= ts[i - 1]:
            raise OrderingError(f"timestamps must strictly increase: t[{i}]={ts[i]!r} <= {ts[i-1]!r}")


def integrate_left(series: Iterable[tuple[float, float]]) -> float:
    """Left Riemann sum of an ordered (t, value) series.

    Returns sum(f(t_i) * (t_{i+1} - t_i)); zero for an empty or single-point
    series. Raises :class:`OrderingError` on non-monotone timestamps.
    """
    pairs = list(series)
    _check_ordering([t for t, _ in pairs])
    total = 0.0
    for (t0, v0), (t1, _) in zip(pairs, pairs[1:]):
        total += v0 * (t1 - t0)
    return total


def differentiate_forward(
    series: Iterable[tuple[float, float]],
) -> list[tuple[float, float]]:
    """Forward-difference derivative of an ordered (t, value) series.

    The slope over [t_i, t_{i+1}] is stamped at t_i, so the output has one
    point fewer than the input. Requires at least two points.
    """
    pairs = list(series)
    if len(pairs) < 2:
        raise InsufficientDataError("differentiation needs at least 2 points")
    _check_ordering([t for t, _ in pairs])
    return [
        (t0, (v1 - v0) / (t1 - t0))
        for (t0, v0), (t1, v1) in zip(pairs, pairs[1:])
    ]
