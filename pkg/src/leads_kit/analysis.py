"""Trip-level baking and lap-level splitting.

Baking is one pass over the trip that collects per-channel extrema/means,
the duration, the total mileage, and the GPS polyline (the map). Lap
splitting places a collision volume at the start/finish point: crossing
into it from outside marks a lap boundary, with a minimum lap duration so
GPS jitter at the gate cannot double-count a crossing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError, InsufficientDataError
from .geo import haversine_km, path_length_km
from .model import CSV_COLUMNS, Trip, frame_channel

#: Scalar stat channels: everything in the CSV layout except the time base.
STAT_CHANNELS = tuple(c for c in CSV_COLUMNS if c != "t")


@dataclass(frozen=True)
class ChannelStats:
    minimum: float
    maximum: float
    mean: float
    count: int


@dataclass
class TripSummary:
    duration: float
    total_mileage_km: float
    channel_stats: dict[str, ChannelStats]
    map_polyline: list[tuple[float, float]]
    frame_count: int


@dataclass(frozen=True)
class CollisionVolume:
    """Geodesic circle whose entry marks a lap boundary."""

    center_lat: float
    center_lon: float
    radius_m: float = 10.0
    min_lap_duration_s: float = 10.0

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise DomainError("radius_m must be positive")
        if self.min_lap_duration_s <= 0:
            raise DomainError("min_lap_duration_s must be positive")

    def contains(self, lat: float, lon: float) -> bool:
        return haversine_km(self.center_lat, self.center_lon, lat, lon) * 1000.0 <= self.radius_m


@dataclass
class LapSplit:
    """Frame-index ranges produced by lap splitting.

    ``laps`` holds [start, end) index pairs between consecutive boundaries;
    ``warmup`` is the stretch before the first boundary when the trip starts
    outside the volume; ``tail`` is the incomplete stretch after the last
    boundary.
    """

    laps: list[tuple[int, int]] = field(default_factory=list)
    warmup: tuple[int, int] | None = None
    tail: tuple[int, int] | None = None


@dataclass
class LapStats:
    index: int
    start_t: float
    duration: float
    distance_km: float
    speed_min: float | None
    speed_max: float | None
    speed_mean: float | None


def bake(trip: Trip) -> TripSummary:
    """One pass over the trip: extrema, means, mileage, and the map."""
    if not trip.frames:
        raise InsufficientDataError("cannot bake an empty trip")
    minimums: dict[str, float] = {}
    maximums: dict[str, float] = {}
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    polyline: list[tuple[float, float]] = []
    for frame in trip.frames:
        for channel in STAT_CHANNELS:
            value = frame_channel(frame, channel)
            if value is None:
                continue
            if channel not in counts:
                minimums[channel] = maximums[channel] = value
                sums[channel] = value
                counts[channel] = 1
            else:
                if value < minimums[channel]:
                    minimums[channel] = value
                if value > maximums[channel]:
                    maximums[channel] = value
                sums[channel] += value
                counts[channel] += 1
        if frame.gps_lat is not None and frame.gps_lon is not None:
            polyline.append((frame.gps_lat, frame.gps_lon))
    stats = {
        channel: ChannelStats(
            minimums[channel], maximums[channel], sums[channel] / counts[channel], counts[channel]
        )
        for channel in counts
    }
    return TripSummary(
        duration=trip.duration,
        total_mileage_km=_total_mileage(trip, polyline),
        channel_stats=stats,
        map_polyline=polyline,
        frame_count=len(trip.frames),
    )


def _total_mileage(trip: Trip, polyline: Sequence[tuple[float, float]]) -> float:
    """Mileage channel span when recorded, else the GPS path length."""
    series = trip.series("mileage")
    if len(series) >= 2:
        return series[-1][1] - series[0][1]
    if len(polyline) >= 2:
        return path_length_km([p[0] for p in polyline], [p[1] for p in polyline])
    return 0.0


def default_volume(trip: Trip, radius_m: float = 10.0, min_lap_duration_s: float = 10.0) -> CollisionVolume:
    """Collision volume centered on the trip's first GPS fix."""
    for frame in trip.frames:
        if frame.gps_lat is not None and frame.gps_lon is not None:
            return CollisionVolume(frame.gps_lat, frame.gps_lon, radius_m, min_lap_duration_s)
    raise InsufficientDataError("trip has no GPS fixes to center the collision volume on")


def split_laps(trip: Trip, volume: CollisionVolume) -> LapSplit:
    """Split a trip into laps at entries into the collision volume.

    A boundary fires on the transition from outside to inside, and only if
    at least ``min_lap_duration_s`` has passed since the previous boundary
    (edge triggering plus the duration guard absorb GPS jitter at the
    gate). Starting inside the volume counts as the first boundary. The
    stretch after the last boundary is the incomplete tail.
    """
    fixes = [
        (i, frame.t, frame.gps_lat, frame.gps_lon)
        for i, frame in enumerate(trip.frames)
        if frame.gps_lat is not None and frame.gps_lon is not None
    ]
    if not fixes:
        raise InsufficientDataError("trip has no GPS fixes to split")
    boundaries: list[int] = []  # frame indices
    last_boundary_t: float | None = None
    inside_prev = False
    for n, (i, t, lat, lon) in enumerate(fixes):
        inside = volume.contains(lat, lon)
        entered = inside and (n == 0 or not inside_prev)
        if entered and (last_boundary_t is None or t - last_boundary_t >= volume.min_lap_duration_s):
            boundaries.append(i)
            last_boundary_t = t
        inside_prev = inside
    split = LapSplit()
    end = len(trip.frames)
    if not boundaries:
        split.tail = (0, end)
        return split
    if boundaries[0] > 0:
        split.warmup = (0, boundaries[0])
    split.laps = [(a, b) for a, b in zip(boundaries, boundaries[1:])]
    split.tail = (boundaries[-1], end)
    return split


def lap_stats(trip: Trip, split: LapSplit) -> list[LapStats]:
    """Per-lap duration, distance, and speed statistics."""
    out: list[LapStats] = []
    for k, (a, b) in enumerate(split.laps):
        frames = trip.frames[a : b + 1]  # boundary frame closes the lap
        start_t = frames[0].t
        duration = frames[-1].t - frames[0].t
        lats = [f.gps_lat for f in frames if f.gps_lat is not None and f.gps_lon is not None]
        lons = [f.gps_lon for f in frames if f.gps_lat is not None and f.gps_lon is not None]
        distance = path_length_km(lats, lons) if len(lats) >= 2 else 0.0
        speeds = [f.speed for f in frames if f.speed is not None]
        out.append(
            LapStats(
                index=k,
                start_t=start_t,
                duration=duration,
                distance_km=distance,
                speed_min=min(speeds) if speeds else None,
                speed_max=max(speeds) if speeds else None,
                speed_mean=sum(speeds) / len(speeds) if speeds else None,
            )
        )
    return out


def best_lap_index(stats: Sequence[LapStats]) -> int | None:
    """Index of the shortest-duration lap, or None without complete laps."""
    if not stats:
        return None
    best = 0
    for k in range(1, len(stats)):
        if stats[k].duration < stats[best].duration:
            best = k
    return best
