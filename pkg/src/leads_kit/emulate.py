"""Synthetic telemetry for desk-scale runs.

The emulated car drives an elliptical circuit with a sinusoidal speed
profile; every channel is derived from that ground truth plus seeded
Gaussian noise, so a fixed seed reproduces the byte stream exactly. The
emulation loop feeds these frames through the stability pipeline under the
frame pacer (or uncapped, to measure raw throughput).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .config import Config
from .esc import Intervention, pipeline
from .model import TelemetryFrame, Trip
from .pacer import Clock, PaceTrace, SimulatedClock, WallClock, run_paced_loop

#: Meters per degree of latitude (mean).
M_PER_DEG_LAT = 111194.9


class CircuitEmulator:
    """Stateful generator of telemetry frames along a closed ellipse.

    ``frame_at(t)`` must be called with increasing t; mileage and track
    position integrate the speed profile between calls.
    """

    def __init__(
        self,
        seed: int = 42,
        noise: float = 1.0,
        lat0: float = 43.95,
        lon0: float = -79.30,
        semi_north_m: float = 120.0,
        semi_east_m: float = 180.0,
        speed_mean_kmh: float = 45.0,
        speed_amp_kmh: float = 20.0,
        speed_period_s: float = 40.0,
    ) -> None:
        self.rng = random.Random(seed)
        self.noise = noise
        self.lat0 = lat0
        self.lon0 = lon0
        self.a_m = semi_north_m
        self.b_m = semi_east_m
        self.speed_mean = speed_mean_kmh
        self.speed_amp = speed_amp_kmh
        self.period = speed_period_s
        self.theta = 0.0
        self.mileage_km = 0.0
        self.prev_t: float | None = None

    def true_speed_kmh(self, t: float) -> float:
        return self.speed_mean + self.speed_amp * math.sin(2.0 * math.pi * t / self.period)

    def forward_accel_ms2(self, t: float) -> float:
        dv_kmh_per_s = (
            self.speed_amp * (2.0 * math.pi / self.period) * math.cos(2.0 * math.pi * t / self.period)
        )
        return dv_kmh_per_s / 3.6

    def _local_radius_m(self) -> float:
        dn = self.a_m * math.cos(self.theta)
        de = -self.b_m * math.sin(self.theta)
        return math.hypot(dn, de)

    def frame_at(self, t: float) -> TelemetryFrame:
        """Next frame at time t (strictly after the previous call's t)."""
        v_kmh = self.true_speed_kmh(t)
        v_ms = v_kmh / 3.6
        if self.prev_t is not None:
            dt = t - self.prev_t
            ds_m = v_ms * dt
            self.mileage_km += ds_m / 1000.0
            self.theta += ds_m / self._local_radius_m()
        self.prev_t = t

        lat = self.lat0 + (self.a_m / M_PER_DEG_LAT) * math.sin(self.theta)
        lon = self.lon0 + (self.b_m / (M_PER_DEG_LAT * math.cos(math.radians(self.lat0)))) * math.cos(
            self.theta
        )
        dn = self.a_m * math.cos(self.theta)
        de = -self.b_m * math.sin(self.theta)
        heading = math.atan2(de, dn)

        a_forward = self.forward_accel_ms2(t)
        a_lateral = v_ms * v_ms / self._local_radius_m()
        gauss = self.rng.gauss
        n = self.noise
        throttle = min(max(0.25 + 0.08 * a_forward + gauss(0.0, 0.01 * n), 0.0), 1.0)
        brake = min(max(-0.25 * a_forward + gauss(0.0, 0.005 * n), 0.0), 1.0) if a_forward < 0 else 0.0
        steering = math.degrees(math.atan2(1.6, self._local_radius_m())) + gauss(0.0, 0.2 * n)

        return TelemetryFrame(
            t=t,
            front_wheel_speed=max(0.0, v_kmh + gauss(0.0, 0.15 * n)),
            rear_wheel_speed=max(0.0, v_kmh * (1.0 + 0.004 * throttle) + gauss(0.0, 0.15 * n)),
            throttle=throttle,
            brake=brake,
            steering_angle=steering,
            accel=(
                a_forward + gauss(0.0, 0.02 * n),
                a_lateral + gauss(0.0, 0.02 * n),
                gauss(0.0, 0.05 * n),
            ),
            orientation=(heading, gauss(0.0, 0.002 * n), gauss(0.0, 0.005 * n)),
            gps_lat=lat + gauss(0.0, 1e-7 * n),
            gps_lon=lon + gauss(0.0, 1e-7 * n),
            gps_ground_speed=max(0.0, v_kmh + gauss(0.0, 0.25 * n)),
            mileage=self.mileage_km,
            obstacle_distance=500.0 + gauss(0.0, 5.0 * n),
            speed=v_kmh,
        )


def generate_trip(
    seed: int, duration: float, sample_rate: float = 25.0, noise: float = 1.0
) -> Trip:
    """Deterministic synthetic trip sampled at a fixed rate."""
    emulator = CircuitEmulator(seed=seed, noise=noise)
    count = int(duration * sample_rate) + 1
    frames = [emulator.frame_at(i / sample_rate) for i in range(count)]
    return Trip(frames, name=f"emulated-{seed}")


@dataclass
class EmulationResult:
    frames: int
    fps: float
    trace: PaceTrace | None = None
    interventions: list[tuple[float, Intervention]] = field(default_factory=list)


def run_emulation(
    config: Config,
    duration: float | None = None,
    target_rate: float | None = None,
    seed: int | None = None,
    clock: Clock | None = None,
    uncapped: bool = False,
    keep_interventions: bool = False,
) -> EmulationResult:
    """Drive emulated frames through the stability pipeline.

    Paced mode runs the frame loop at the configured target rate on the
    given clock (wall clock by default; a simulated clock makes the run
    deterministic). Uncapped mode skips all waiting and measures raw
    frames-per-second over a wall-clock duration.
    """
    duration = config.emulation.duration if duration is None else duration
    target_rate = config.pacer.target_rate if target_rate is None else target_rate
    seed = config.emulation.seed if seed is None else seed
    emulator = CircuitEmulator(seed=seed, noise=config.emulation.noise)
    params = config.vehicle
    level = config.esc_calibration
    settings = config.esc
    result = EmulationResult(frames=0, fps=0.0)

    if uncapped:
        wall = WallClock()
        start = wall.now()
        t = 0.0
        while True:
            elapsed = wall.now() - start
            if elapsed >= duration:
                break
            frame = emulator.frame_at(t)
            outcome = pipeline(params, level, frame, settings)
            if keep_interventions:
                result.interventions.append((t, outcome))
            result.frames += 1
            t += 1e-3  # emulated timeline; throughput is wall-clock bound
        elapsed = wall.now() - start
        result.fps = result.frames / elapsed if elapsed > 0 else 0.0
        return result

    clock = clock or WallClock()
    start = clock.now()

    def frame_work(t: float) -> float:
        frame = emulator.frame_at(t - start + 1e-9)
        outcome = pipeline(params, level, frame, settings)
        if keep_interventions:
            result.interventions.append((frame.t, outcome))
        result.frames += 1
        return clock.now() - t

    trace = run_paced_loop(target_rate, frame_work, clock, duration)
    result.trace = trace
    end = start + duration
    result.fps = trace.rate_at(end)
    return result


def simulated_emulation(config: Config, duration: float, target_rate: float) -> EmulationResult:
    """Paced emulation on a simulated clock (deterministic, instant)."""
    return run_emulation(
        config, duration=duration, target_rate=target_rate, clock=SimulatedClock()
    )
