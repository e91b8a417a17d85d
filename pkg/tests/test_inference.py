import math
import random

import pytest

from leads_kit.errors import ConfigError, DomainError
from leads_kit.geo import haversine_km
from leads_kit.inference import (
    INFERENCE_NAMES,
    realign_visual,
    run_pipeline,
    safe_speed,
)
from leads_kit.model import TelemetryFrame, Trip


def trip_of(frames):
    return Trip(list(frames))


def _circle_fix(center, radius_m, angle):
    lat0, lon0 = center
    m_per_deg = 111194.9
    lat = lat0 + (radius_m / m_per_deg) * math.cos(angle)
    lon = lon0 + (radius_m / (m_per_deg * math.cos(math.radians(lat0)))) * math.sin(angle)
    return lat, lon


class TestSafeSpeed:
    @pytest.mark.parametrize("front,rear,expected", [(10, 12, 10), (12, 10, 10), (7, 7, 7)])
    def test_minimum_of_wheels(self, front, rear, expected):
        frame = TelemetryFrame(t=0.0, front_wheel_speed=front, rear_wheel_speed=rear)
        assert safe_speed(frame) == expected

    def test_missing_channel_skips(self):
        assert safe_speed(TelemetryFrame(t=0.0, front_wheel_speed=10.0)) is None

    def test_pipeline_fills_speed(self):
        trip = trip_of(
            TelemetryFrame(t=float(i), front_wheel_speed=20.0 + i, rear_wheel_speed=21.0)
            for i in range(3)
        )
        filled, provenance = run_pipeline(trip, ["safe_speed"])
        assert [f.speed for f in filled] == [20.0, 21.0, 21.0]
        assert provenance == {"speed": "safe_speed"}


class TestSpeedByAcceleration:
    def test_unit_accel_from_rest(self):
        trip = trip_of(
            TelemetryFrame(t=float(i), accel=(1.0, 0.0, 0.0)) for i in range(11)
        )
        filled, _ = run_pipeline(trip, ["speed_by_acceleration"])
        assert filled.frames[-1].speed == pytest.approx(36.0)
        assert filled.frames[0].speed == 0.0

    def test_zero_accel_holds_anchor(self):
        frames = [TelemetryFrame(t=0.0, accel=(0.0, 0.0, 0.0), speed=25.0)]
        frames += [TelemetryFrame(t=float(i), accel=(0.0, 0.0, 0.0)) for i in range(1, 5)]
        filled, _ = run_pipeline(trip_of(frames), ["speed_by_acceleration"])
        assert all(f.speed == 25.0 for f in filled)

    def test_derivative_round_trip(self):
        rng = random.Random(9)
        accels = [rng.uniform(-2, 2) for _ in range(50)]
        frames = [
            TelemetryFrame(
                t=i * 0.5, accel=(a, 0.0, 0.0), speed=200.0 if i == 0 else None
            )  # anchor high enough that the integral never goes negative
            for i, a in enumerate(accels)
        ]
        filled, _ = run_pipeline(trip_of(frames), ["speed_by_acceleration"])
        speeds = [(f.t, f.speed) for f in filled]
        for (t0, v0), (t1, v1), a in zip(speeds, speeds[1:], accels):
            assert (v1 - v0) / (t1 - t0) / 3.6 == pytest.approx(a, abs=1e-6)


class TestSpeedByMileage:
    def test_unit_conversion(self):
        trip = trip_of([TelemetryFrame(t=0.0, mileage=0.0), TelemetryFrame(t=60.0, mileage=1.0)])
        filled, _ = run_pipeline(trip, ["speed_by_mileage"])
        assert filled.frames[0].speed == pytest.approx(60.0)
        assert filled.frames[1].speed is None  # forward difference has n-1 points

    def test_constant_mileage_zero_speed(self):
        trip = trip_of(TelemetryFrame(t=float(i), mileage=5.0) for i in range(4))
        filled, _ = run_pipeline(trip, ["speed_by_mileage"])
        assert [f.speed for f in filled.frames[:-1]] == [0.0, 0.0, 0.0]

    def test_linear_mileage_constant_speed(self):
        trip = trip_of(TelemetryFrame(t=float(i), mileage=0.01 * i) for i in range(10))
        filled, _ = run_pipeline(trip, ["speed_by_mileage"])
        for f in filled.frames[:-1]:
            assert f.speed == pytest.approx(36.0)


class TestSpeedByGpsGround:
    def test_copies_channel(self):
        trip = trip_of([TelemetryFrame(t=0.0, gps_ground_speed=42.0), TelemetryFrame(t=1.0)])
        filled, _ = run_pipeline(trip, ["speed_by_gps_ground"])
        assert filled.frames[0].speed == 42.0
        assert filled.frames[1].speed is None

    def test_present_speed_not_overwritten(self):
        trip = trip_of([TelemetryFrame(t=0.0, gps_ground_speed=42.0, speed=40.0)])
        filled, _ = run_pipeline(trip, ["speed_by_gps_ground"])
        assert filled.frames[0].speed == 40.0


class TestMileageByGpsPosition:
    def test_small_latitude_step(self):
        trip = trip_of(
            [
                TelemetryFrame(t=0.0, gps_lat=43.0, gps_lon=-79.0),
                TelemetryFrame(t=1.0, gps_lat=43.001, gps_lon=-79.0),
            ]
        )
        filled, _ = run_pipeline(trip, ["mileage_by_gps_position"])
        assert filled.frames[1].mileage * 1000 == pytest.approx(111.19, abs=0.05)

    def test_identical_fixes_zero_distance(self):
        trip = trip_of(
            TelemetryFrame(t=float(i), gps_lat=43.0, gps_lon=-79.0) for i in range(3)
        )
        filled, _ = run_pipeline(trip, ["mileage_by_gps_position"])
        assert [f.mileage for f in filled] == [0.0, 0.0, 0.0]

    def test_closed_loop_accumulates_perimeter(self):
        center = (43.95, -79.3)
        radius_m = 100.0
        points = []
        for k in range(41):  # one full loop, returning to start
            angle = 2 * math.pi * k / 40
            points.append(_circle_fix(center, radius_m, angle))
        trip = trip_of(
            TelemetryFrame(t=float(k), gps_lat=lat, gps_lon=lon)
            for k, (lat, lon) in enumerate(points)
        )
        filled, _ = run_pipeline(trip, ["mileage_by_gps_position"])
        total = filled.frames[-1].mileage
        # Path length approximates the circle's circumference, not zero.
        assert total * 1000 == pytest.approx(2 * math.pi * radius_m, rel=0.01)

    def test_anchors_on_existing_mileage(self):
        trip = trip_of(
            [
                TelemetryFrame(t=0.0, gps_lat=43.0, gps_lon=-79.0),
                TelemetryFrame(t=1.0, gps_lat=43.001, gps_lon=-79.0, mileage=5.0),
            ]
        )
        filled, _ = run_pipeline(trip, ["mileage_by_gps_position"])
        assert filled.frames[0].mileage == 5.0  # s0 assigned at the first fix
        assert filled.frames[1].mileage == 5.0  # present value kept


class TestSpeedByGpsPosition:
    def _random_trip(self, rng, n=40):
        frames = []
        t = 0.0
        lat, lon = 43.9, -79.4
        for _ in range(n):
            t += rng.uniform(0.2, 2.0)
            lat += rng.uniform(-1e-4, 1e-4)
            lon += rng.uniform(-1e-4, 1e-4)
            channels = {}
            if rng.random() < 0.9:
                channels = {"gps_lat": lat, "gps_lon": lon}
            if rng.random() < 0.2:
                channels["mileage"] = rng.uniform(0, 10)
            frames.append(TelemetryFrame(t=t, **channels))
        return trip_of(frames)

    def test_equals_two_step_composition_bitwise(self):
        rng = random.Random(31)
        for _ in range(25):
            trip = self._random_trip(rng)
            one_step, _ = run_pipeline(trip, ["speed_by_gps_position"])
            two_step, _ = run_pipeline(trip, ["mileage_by_gps_position", "speed_by_mileage"])
            assert [f.speed for f in one_step] == [f.speed for f in two_step]

    def test_stationary_fixes_zero_speed(self):
        trip = trip_of(
            TelemetryFrame(t=float(i), gps_lat=43.0, gps_lon=-79.0) for i in range(4)
        )
        filled, _ = run_pipeline(trip, ["speed_by_gps_position"])
        assert [f.speed for f in filled.frames[:-1]] == [0.0, 0.0, 0.0]

    def test_uniform_track_constant_speed(self):
        # Fixes on a meridian at constant spacing and interval.
        step_deg = 0.0001
        trip = trip_of(
            TelemetryFrame(t=float(i), gps_lat=43.0 + i * step_deg, gps_lon=-79.0)
            for i in range(20)
        )
        filled, _ = run_pipeline(trip, ["speed_by_gps_position"])
        speeds = [f.speed for f in filled.frames[:-1]]
        expected = haversine_km(43.0, -79.0, 43.0 + step_deg, -79.0) * 3600.0
        for v in speeds:
            assert v == pytest.approx(expected, rel=1e-6)


class TestAccelBySpeed:
    def test_unit_conversion(self):
        trip = trip_of([TelemetryFrame(t=0.0, speed=0.0), TelemetryFrame(t=10.0, speed=36.0)])
        filled, provenance = run_pipeline(trip, ["accel_by_speed"])
        assert filled.frames[0].accel == (1.0, 0.0, 0.0)
        assert provenance["accel"] == "accel_by_speed (scalar-derived)"

    def test_constant_speed_zero_accel(self):
        trip = trip_of(TelemetryFrame(t=float(i), speed=50.0) for i in range(3))
        filled, _ = run_pipeline(trip, ["accel_by_speed"])
        assert filled.frames[0].accel == (0.0, 0.0, 0.0)

    def test_scalar_caveat_reversing_counts_positive(self):
        # Speed rising while moving backward still yields positive a.
        trip = trip_of([TelemetryFrame(t=0.0, speed=0.0), TelemetryFrame(t=1.0, speed=3.6)])
        filled, _ = run_pipeline(trip, ["accel_by_speed"])
        assert filled.frames[0].accel[0] == pytest.approx(1.0)


class TestMileageBySpeed:
    def test_constant_speed_distance(self):
        trip = trip_of(TelemetryFrame(t=float(i), speed=36.0) for i in range(101))
        filled, _ = run_pipeline(trip, ["mileage_by_speed"])
        assert filled.frames[-1].mileage == pytest.approx(1.0)

    def test_zero_speed_constant_mileage(self):
        trip = trip_of(TelemetryFrame(t=float(i), speed=0.0) for i in range(5))
        filled, _ = run_pipeline(trip, ["mileage_by_speed"])
        assert all(f.mileage == 0.0 for f in filled)

    def test_round_trip_with_speed_by_mileage(self):
        rng = random.Random(13)
        speeds = [rng.uniform(0, 80) for _ in range(30)]
        trip = trip_of(TelemetryFrame(t=float(i), speed=v) for i, v in enumerate(speeds))
        with_mileage, _ = run_pipeline(trip, ["mileage_by_speed"])
        stripped = trip_of(
            TelemetryFrame(t=f.t, mileage=f.mileage) for f in with_mileage
        )
        back, _ = run_pipeline(stripped, ["speed_by_mileage"])
        for f, v in zip(back.frames[:-1], speeds[:-1]):
            assert f.speed == pytest.approx(v, abs=1e-6)


class TestRealignVisual:
    def trip_with_events(self):
        frames = [TelemetryFrame(t=float(i)) for i in range(5)]
        return Trip(frames, media_events=[(0.5, "lap-board"), (2.5, "apex-cam")])

    def test_zero_latency_identity(self):
        trip = self.trip_with_events()
        assert realign_visual(trip, 0.0).media_events == trip.media_events

    def test_shift_by_latency(self):
        trip = self.trip_with_events()
        shifted = realign_visual(trip, 0.2)
        assert shifted.media_events[0][0] == pytest.approx(0.3)
        assert shifted.frames == trip.frames  # sensor data untouched

    def test_inverse_round_trip(self):
        trip = self.trip_with_events()
        back = realign_visual(realign_visual(trip, 0.35), -0.35)
        assert [label for _, label in back.media_events] == ["lap-board", "apex-cam"]
        for (t_back, _), (t_orig, _) in zip(back.media_events, trip.media_events):
            assert t_back == pytest.approx(t_orig, abs=1e-12)

    def test_nonfinite_latency_rejected(self):
        with pytest.raises(DomainError):
            realign_visual(self.trip_with_events(), math.inf)


class TestRunPipeline:
    def full_frame(self, t):
        return TelemetryFrame(
            t=t,
            front_wheel_speed=30.0,
            rear_wheel_speed=31.0,
            speed=30.0,
            mileage=t * 0.01,
            gps_lat=43.0 + t * 1e-5,
            gps_lon=-79.0,
            gps_ground_speed=30.5,
            accel=(0.1, 0.0, 0.0),
        )

    def test_fully_populated_trip_unchanged(self):
        trip = trip_of(self.full_frame(float(i)) for i in range(5))
        filled, provenance = run_pipeline(trip, list(INFERENCE_NAMES))
        assert filled.frames == trip.frames
        assert provenance == {}

    def test_gps_only_trip_gets_speed(self):
        trip = trip_of(
            TelemetryFrame(t=float(i), gps_lat=43.0 + i * 1e-4, gps_lon=-79.0)
            for i in range(10)
        )
        filled, provenance = run_pipeline(trip, ["mileage_by_gps_position", "speed_by_mileage"])
        assert all(f.speed is not None for f in filled.frames[:-1])
        assert provenance == {
            "mileage": "mileage_by_gps_position",
            "speed": "speed_by_mileage",
        }

    def test_cache_limit_independence(self):
        trip = trip_of(
            TelemetryFrame(t=float(i), gps_lat=43.0 + i * 1e-4, gps_lon=-79.0)
            for i in range(10)
        )
        names = ["mileage_by_gps_position", "speed_by_mileage"]
        small, _ = run_pipeline(trip, names, cache_limit=2)
        large, _ = run_pipeline(trip, names, cache_limit=10**6)
        assert small.frames == large.frames

    def test_cache_limit_below_window_rejected(self):
        trip = trip_of([TelemetryFrame(t=0.0), TelemetryFrame(t=1.0)])
        with pytest.raises(ConfigError):
            run_pipeline(trip, ["speed_by_mileage"], cache_limit=1)

    def test_unknown_inference_rejected(self):
        trip = trip_of([TelemetryFrame(t=0.0)])
        with pytest.raises(ConfigError):
            run_pipeline(trip, ["telepathy"])

    def test_no_overwrite_across_random_trips(self):
        rng = random.Random(77)
        for _ in range(20):
            frames = []
            t = 0.0
            for _ in range(rng.randint(2, 30)):
                t += rng.uniform(0.1, 1.0)
                channels = {}
                if rng.random() < 0.5:
                    channels["speed"] = rng.uniform(0, 100)
                if rng.random() < 0.5:
                    channels["mileage"] = rng.uniform(0, 10)
                if rng.random() < 0.5:
                    channels["gps_lat"] = 43.0 + rng.uniform(-1e-3, 1e-3)
                    channels["gps_lon"] = -79.0 + rng.uniform(-1e-3, 1e-3)
                if rng.random() < 0.5:
                    channels["accel"] = (rng.uniform(-3, 3), 0.0, 0.0)
                frames.append(TelemetryFrame(t=t, **channels))
            trip = trip_of(frames)
            filled, _ = run_pipeline(trip, list(INFERENCE_NAMES))
            for before, after in zip(trip.frames, filled.frames):
                for channel in before.present_channels():
                    assert getattr(after, channel) == getattr(before, channel), channel
