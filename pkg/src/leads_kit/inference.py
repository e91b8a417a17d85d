"""Offline inference passes that fill missing telemetry channels.

Each inference derives one target channel from others: wheel speeds, the
accelerometer, mileage, or GPS. A pipeline applies them in caller-given
order; a channel that is already present is never overwritten, so running
a pass over complete data is a no-op. These passes integrate and
differentiate with the shared left-Riemann/forward-difference conventions
and are meant for post-processing, not the live loop.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Any, Iterable, Iterator, Sequence

from .errors import ConfigError, DomainError
from .geo import path_distances_km
from .model import TelemetryFrame, Trip

MS2_TO_KMH = 3.6  # 1 m/s^2 sustained for 1 s adds 3.6 km/h


class Inference(ABC):
    """One derivation rule: inputs -> a single output channel.

    ``window`` is the number of consecutive frames the pass holds at once.
    ``values`` yields (frame_index, value) for every frame the rule can
    compute, whether or not the channel is present there; the pipeline
    enforces the no-overwrite rule.
    """

    name: str
    provides: str
    window: int = 2

    @property
    def provenance_label(self) -> str:
        return self.name

    @abstractmethod
    def values(self, frames: Sequence[TelemetryFrame]) -> Iterator[tuple[int, Any]]: ...


def safe_speed(frame: TelemetryFrame) -> float | None:
    """Lower of the two wheel speeds, or None if either is absent.

    The slower wheel is the safe estimate: a slipping wheel over-reads.
    """
    if frame.front_wheel_speed is None or frame.rear_wheel_speed is None:
        return None
    return min(frame.front_wheel_speed, frame.rear_wheel_speed)


class SafeSpeed(Inference):
    name = "safe_speed"
    provides = "speed"
    window = 1

    def values(self, frames: Sequence[TelemetryFrame]) -> Iterator[tuple[int, float]]:
        for i, frame in enumerate(frames):
            value = safe_speed(frame)
            if value is not None:
                yield i, value


class SpeedByAcceleration(Inference):
    """Integrate forward acceleration from a speed anchor.

    The anchor is the first present speed (else 0 at the first acceleration
    sample); frames before the anchor are left alone since the left-Riemann
    convention only integrates forward.
    """

    name = "speed_by_acceleration"
    provides = "speed"

    def values(self, frames: Sequence[TelemetryFrame]) -> Iterator[tuple[int, float]]:
        anchor_t, anchor_v = _first_present(frames, "speed")
        speed = None
        prev_t = None
        prev_a = None
        for i, frame in enumerate(frames):
            if frame.accel is None:
                continue
            if anchor_t is not None and frame.t < anchor_t:
                continue
            if speed is None:
                speed = anchor_v if anchor_v is not None else 0.0
            elif prev_t is not None:
                speed += MS2_TO_KMH * prev_a * (frame.t - prev_t)
            prev_t = frame.t
            prev_a = frame.accel[0]
            yield i, speed


class SpeedByMileage(Inference):
    """Forward difference of the mileage channel, stamped at the left frame."""

    name = "speed_by_mileage"
    provides = "speed"

    def values(self, frames: Sequence[TelemetryFrame]) -> Iterator[tuple[int, float]]:
        prev = None
        for i, frame in enumerate(frames):
            if frame.mileage is None:
                continue
            if prev is not None:
                j, t0, s0 = prev
                yield j, (frame.mileage - s0) / (frame.t - t0) * 3600.0
            prev = (i, frame.t, frame.mileage)


class SpeedByGpsGround(Inference):
    name = "speed_by_gps_ground"
    provides = "speed"
    window = 1

    def values(self, frames: Sequence[TelemetryFrame]) -> Iterator[tuple[int, float]]:
        for i, frame in enumerate(frames):
            if frame.gps_ground_speed is not None:
                yield i, frame.gps_ground_speed


class MileageByGpsPosition(Inference):
    """Cumulative great-circle distance along the GPS fixes, from s0.

    s0 is the first present mileage anywhere in the trip (else 0) and is
    assigned to the first fix.
    """

    name = "mileage_by_gps_position"
    provides = "mileage"

    def values(self, frames: Sequence[TelemetryFrame]) -> Iterator[tuple[int, float]]:
        _, s0 = _first_present(frames, "mileage")
        if s0 is None:
            s0 = 0.0
        prev = None
        total = s0
        for i, frame in enumerate(frames):
            if frame.gps_lat is None or frame.gps_lon is None:
                continue
            if prev is not None:
                total += path_distances_km(
                    [prev[0], frame.gps_lat], [prev[1], frame.gps_lon]
                )[0]
            prev = (frame.gps_lat, frame.gps_lon)
            yield i, total


class SpeedByGpsPosition(Inference):
    """GPS-position speed: literally mileage-from-GPS then speed-from-mileage.

    Implemented as that exact composition (on a scratch copy, publishing
    only the speed channel) so the equivalence is identical by
    construction.
    """

    name = "speed_by_gps_position"
    provides = "speed"

    def values(self, frames: Sequence[TelemetryFrame]) -> Iterator[tuple[int, float]]:
        scratch = list(frames)
        for i, value in MileageByGpsPosition().values(scratch):
            if scratch[i].mileage is None:
                scratch[i] = scratch[i].with_channels(mileage=value)
        yield from SpeedByMileage().values(scratch)


class AccelBySpeed(Inference):
    """Forward difference of speed, as the forward component of ``accel``.

    Speed is a scalar, so reversing shows up as positive forward
    acceleration; the provenance label carries a scalar-derived flag. The
    lateral and vertical components are filled with zeros because ``accel``
    is stored as one vector channel.
    """

    name = "accel_by_speed"
    provides = "accel"

    @property
    def provenance_label(self) -> str:
        return f"{self.name} (scalar-derived)"

    def values(self, frames: Sequence[TelemetryFrame]) -> Iterator[tuple[int, tuple]]:
        prev = None
        for i, frame in enumerate(frames):
            if frame.speed is None:
                continue
            if prev is not None:
                j, t0, v0 = prev
                rate = (frame.speed - v0) / (frame.t - t0) / MS2_TO_KMH
                yield j, (rate, 0.0, 0.0)
            prev = (i, frame.t, frame.speed)


class MileageBySpeed(Inference):
    """Left-Riemann integral of speed from s0 (first present mileage, else 0)."""

    name = "mileage_by_speed"
    provides = "mileage"

    def values(self, frames: Sequence[TelemetryFrame]) -> Iterator[tuple[int, float]]:
        _, s0 = _first_present(frames, "mileage")
        total = s0 if s0 is not None else 0.0
        prev = None
        for i, frame in enumerate(frames):
            if frame.speed is None:
                continue
            if prev is not None:
                t0, v0 = prev
                total += v0 * (frame.t - t0) / 3600.0
            prev = (frame.t, frame.speed)
            yield i, total


def realign_visual(trip: Trip, latency: float) -> Trip:
    """Shift media-event timestamps back by the capture/encode latency.

    Sensor frames are untouched; ordering of the shifted events is
    re-validated by the Trip constructor.
    """
    if not math.isfinite(latency):
        raise DomainError(f"latency must be finite, got {latency!r}")
    events = [(t - latency, label) for t, label in trip.media_events]
    return Trip(
        list(trip.frames),
        name=trip.name,
        recorded_at=trip.recorded_at,
        config=trip.config,
        media_events=events,
    )


_REGISTRY: dict[str, type[Inference]] = {
    cls.name: cls
    for cls in (
        SafeSpeed,
        SpeedByAcceleration,
        SpeedByMileage,
        SpeedByGpsGround,
        MileageByGpsPosition,
        SpeedByGpsPosition,
        AccelBySpeed,
        MileageBySpeed,
    )
}

INFERENCE_NAMES = tuple(_REGISTRY)


def resolve(spec: "str | Inference") -> Inference:
    if isinstance(spec, Inference):
        return spec
    try:
        return _REGISTRY[spec]()
    except KeyError:
        raise ConfigError(
            f"unknown inference {spec!r}; expected one of {sorted(_REGISTRY)}"
        ) from None


def run_pipeline(
    trip: Trip,
    inferences: Iterable["str | Inference"],
    cache_limit: int | None = None,
) -> tuple[Trip, dict[str, str]]:
    """Apply inferences in order; returns the filled trip and provenance.

    Every pass streams the frames once holding only its own window of
    state; ``cache_limit`` (frames) must cover the largest window. Present
    channels are never overwritten. Provenance maps each channel to the
    first inference that actually filled it somewhere.
    """
    passes = [resolve(s) for s in inferences]
    max_window = max((p.window for p in passes), default=1)
    if cache_limit is not None and cache_limit < max_window:
        raise ConfigError(
            f"cache_limit {cache_limit} is below the largest inference window {max_window}"
        )
    frames = list(trip.frames)
    provenance: dict[str, str] = {}
    for p in passes:
        filled_any = False
        for i, value in p.values(frames):
            if getattr(frames[i], p.provides) is None:
                try:
                    frames[i] = frames[i].with_channels(**{p.provides: value})
                except DomainError:
                    # A derived value outside the channel's domain (e.g. a
                    # negative scalar speed from a shrinking odometer) is
                    # unrepresentable; leave the channel absent there.
                    continue
                filled_any = True
        if filled_any and p.provides not in provenance:
            provenance[p.provides] = p.provenance_label
    result = Trip(
        frames,
        name=trip.name,
        recorded_at=trip.recorded_at,
        config=trip.config,
        media_events=list(trip.media_events),
    )
    return result, provenance


def _first_present(
    frames: Sequence[TelemetryFrame], channel: str
) -> tuple[float, float] | tuple[None, None]:
    for frame in frames:
        value = getattr(frame, channel)
        if value is not None:
            return frame.t, value
    return None, None
