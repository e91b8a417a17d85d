"""Electronic stability systems: DTCS, ABS, EBI, and ATBS.

Each system maps one telemetry frame plus vehicle parameters to an advisory
:class:`Intervention` (multiplicative throttle/brake scales and an additive
brake term). Every system has four calibrations; standard intervenes
earliest, sport latest, off never. The numeric thresholds are calibration
data, not physics claims; defaults were chosen to satisfy the ordered
aggressiveness and are fully configurable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable, Sequence

from .errors import ConfigError, DomainError, InsufficientDataError
from .model import TelemetryFrame

G = 9.81  # m/s^2

#: Reference-speed floor guarding ratio denominators, km/h.
EPS_SPEED = 0.1

LEVELS = ("standard", "aggressive", "sport")
CALIBRATIONS = LEVELS + ("off",)
SYSTEMS = ("dtcs", "abs", "ebi", "atbs")

DRIVETRAINS = ("rear", "awd")


@dataclass(frozen=True)
class VehicleParams:
    """Static vehicle geometry used by the stability systems."""

    mass_kg: float
    cg_height_m: float
    width_m: float
    length_m: float
    drivetrain: str = "rear"
    max_decel: float = 8.0  # m/s^2, brake-limit deceleration for EBI

    def __post_init__(self) -> None:
        for name in ("mass_kg", "cg_height_m", "width_m", "length_m", "max_decel"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.drivetrain not in DRIVETRAINS:
            raise DomainError(f"drivetrain must be one of {DRIVETRAINS}")


@dataclass(frozen=True)
class Intervention:
    """Advisory output of one system (or the whole pipeline).

    ``throttle_scale`` and ``brake_scale`` multiply the driver's inputs;
    ``brake_add`` is an additional brake application in [0, 1]. The no-op is
    (1, 1, 0).
    """

    throttle_scale: float = 1.0
    brake_scale: float = 1.0
    brake_add: float = 0.0
    source: str = ""
    reason: str = ""

    @property
    def is_noop(self) -> bool:
        return self.throttle_scale == 1.0 and self.brake_scale == 1.0 and self.brake_add == 0.0


def _noop(source: str, reason: str = "") -> Intervention:
    return Intervention(source=source, reason=reason)


@dataclass(frozen=True)
class DtcsThresholds:
    slip: float  # slip ratio above which throttle is cut


@dataclass(frozen=True)
class AbsThresholds:
    lock: float  # lock ratio above which brake force is reduced
    min_speed: float = 5.0  # km/h; below this, locking is indistinguishable from stopping


@dataclass(frozen=True)
class EbiThresholds:
    margin: float  # multiple of the stopping distance at which to brake


@dataclass(frozen=True)
class AtbsThresholds:
    front_low: float  # front-axle load share below which to add brake
    front_high: float  # share above which to release brake
    steer_min: float = 10.0  # degrees; no trail braking on-center
    gain: float = 5.0  # response per unit of share error


_DEFAULTS: dict[str, dict[str, Any]] = {
    "dtcs": {
        "standard": DtcsThresholds(slip=0.10),
        "aggressive": DtcsThresholds(slip=0.15),
        "sport": DtcsThresholds(slip=0.20),
    },
    "abs": {
        "standard": AbsThresholds(lock=0.30),
        "aggressive": AbsThresholds(lock=0.45),
        "sport": AbsThresholds(lock=0.60),
    },
    "ebi": {
        "standard": EbiThresholds(margin=1.30),
        "aggressive": EbiThresholds(margin=1.15),
        "sport": EbiThresholds(margin=1.05),
    },
    "atbs": {
        "standard": AtbsThresholds(front_low=0.48, front_high=0.70),
        "aggressive": AtbsThresholds(front_low=0.44, front_high=0.75),
        "sport": AtbsThresholds(front_low=0.40, front_high=0.80),
    },
}

_THRESHOLD_TYPES = {
    "dtcs": DtcsThresholds,
    "abs": AbsThresholds,
    "ebi": EbiThresholds,
    "atbs": AtbsThresholds,
}


class EscSettings:
    """Per-system, per-level calibration tables."""

    def __init__(self, tables: dict[str, dict[str, Any]] | None = None) -> None:
        self.tables = tables or _DEFAULTS

    def thresholds(self, system: str, level: str) -> Any:
        return self.tables[system][level]

    @classmethod
    def from_config(cls, data: dict[str, Any], key_path: str = "esc") -> "EscSettings":
        """Merge JSON overrides of shape {system: {level: {field: value}}}."""
        tables = {system: dict(levels) for system, levels in _DEFAULTS.items()}
        for system, levels in data.items():
            if system not in _THRESHOLD_TYPES:
                raise ConfigError(f"{key_path}.{system}: unknown system (expected one of {SYSTEMS})")
            if not isinstance(levels, dict):
                raise ConfigError(f"{key_path}.{system}: expected an object of levels")
            for level, fields_ in levels.items():
                if level not in LEVELS:
                    raise ConfigError(
                        f"{key_path}.{system}.{level}: unknown level (expected one of {LEVELS})"
                    )
                base = tables[system][level]
                valid = set(base.__dataclass_fields__)
                unknown = set(fields_) - valid
                if unknown:
                    raise ConfigError(
                        f"{key_path}.{system}.{level}: unknown thresholds {sorted(unknown)}"
                    )
                tables[system][level] = replace(base, **fields_)
        return cls(tables)


DEFAULT_SETTINGS = EscSettings()


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def _require(frame: TelemetryFrame, source: str, **channels: Any) -> None:
    missing = [name for name, value in channels.items() if value is None]
    if missing:
        raise InsufficientDataError(f"{source}: missing channels {missing}")


def _axle_speed(frame: TelemetryFrame, axle: str) -> float | None:
    """Axle speed from the aggregate channel, else the mean of per-wheel ones."""
    aggregate = frame.front_wheel_speed if axle == "front" else frame.rear_wheel_speed
    if aggregate is not None:
        return aggregate
    names = ("fl", "fr") if axle == "front" else ("rl", "rr")
    present = [getattr(frame, n) for n in names if getattr(frame, n) is not None]
    if not present:
        return None
    return sum(present) / len(present)


def _max_wheel_speed(frame: TelemetryFrame) -> float | None:
    wheels = [
        v
        for v in (
            frame.front_wheel_speed,
            frame.rear_wheel_speed,
            frame.fl,
            frame.fr,
            frame.rl,
            frame.rr,
        )
        if v is not None
    ]
    return max(wheels) if wheels else None


def dtcs(
    params: VehicleParams,
    calibration: str,
    frame: TelemetryFrame,
    settings: EscSettings = DEFAULT_SETTINGS,
) -> Intervention:
    """Cut throttle when the powered wheels outrun the reference speed.

    Rear-drive vehicles compare the rear axle against the front; AWD
    vehicles have no unpowered axle, so the GPS ground speed serves as the
    reference and the fastest wheel as the powered speed.
    """
    _check_calibration(calibration)
    if calibration == "off":
        return _noop("dtcs", "off")
    if params.drivetrain == "awd":
        powered = _max_wheel_speed(frame)
        reference = frame.gps_ground_speed
        _require(frame, "dtcs", wheel_speed=powered, gps_ground_speed=reference)
    else:
        powered = _axle_speed(frame, "rear")
        reference = _axle_speed(frame, "front")
        _require(frame, "dtcs", rear_wheel_speed=powered, front_wheel_speed=reference)
    slip = (powered - reference) / max(reference, EPS_SPEED)
    threshold = settings.thresholds("dtcs", calibration).slip
    if slip <= threshold:
        return _noop("dtcs", f"slip {slip:.3f} within {threshold:.3f}")
    scale = _clamp01(1.0 - (slip - threshold) / threshold)
    return Intervention(
        throttle_scale=scale,
        source="dtcs",
        reason=f"slip {slip:.3f} over {threshold:.3f}; throttle x{scale:.2f}",
    )


def abs_system(
    params: VehicleParams,
    calibration: str,
    frame: TelemetryFrame,
    settings: EscSettings = DEFAULT_SETTINGS,
) -> Intervention:
    """Release brake force when the front wheels approach lockup under braking."""
    _check_calibration(calibration)
    if calibration == "off":
        return _noop("abs", "off")
    front = _axle_speed(frame, "front")
    reference = frame.speed
    if reference is None:
        reference = _axle_speed(frame, "rear")
    if reference is None:
        reference = frame.gps_ground_speed
    _require(frame, "abs", brake=frame.brake, front_wheel_speed=front, reference_speed=reference)
    if frame.brake <= 0.0:
        return _noop("abs", "not braking")
    thresholds = settings.thresholds("abs", calibration)
    lock = 1.0 - front / max(reference, EPS_SPEED)
    if lock <= thresholds.lock or reference <= thresholds.min_speed:
        return _noop("abs", f"lock {lock:.3f} within {thresholds.lock:.3f}")
    scale = _clamp01(1.0 - (lock - thresholds.lock) / (1.0 - thresholds.lock))
    return Intervention(
        brake_scale=scale,
        source="abs",
        reason=f"lock {lock:.3f} over {thresholds.lock:.3f}; brake x{scale:.2f}",
    )


def ebi(
    params: VehicleParams,
    calibration: str,
    frame: TelemetryFrame,
    settings: EscSettings = DEFAULT_SETTINGS,
) -> Intervention:
    """Apply full brakes at the limit of the stopping distance."""
    _check_calibration(calibration)
    if calibration == "off":
        return _noop("ebi", "off")
    _require(frame, "ebi", obstacle_distance=frame.obstacle_distance, speed=frame.speed)
    v_ms = frame.speed / 3.6
    stopping = v_ms * v_ms / (2.0 * params.max_decel)
    margin = settings.thresholds("ebi", calibration).margin
    if frame.speed <= 0.0 or frame.obstacle_distance > margin * stopping:
        return _noop("ebi", f"obstacle {frame.obstacle_distance:.1f} m clear of {stopping:.1f} m")
    return Intervention(
        brake_add=1.0,
        source="ebi",
        reason=(
            f"obstacle {frame.obstacle_distance:.1f} m within "
            f"{margin:.2f}x stopping {stopping:.1f} m"
        ),
    )


def cfc(params: VehicleParams, a_forward: float, a_lateral: float) -> tuple[float, float, float, float]:
    """Per-wheel downforce (front-left, front-right, rear-left, rear-right), N.

    Each wheel carries a quarter of the weight, shifted by the forward and
    lateral acceleration terms; the shift terms cancel pairwise so the four
    outputs always sum to m*g.
    """
    base = params.mass_kg * G / 4.0
    forward_term = params.mass_kg * params.cg_height_m * a_forward / (2.0 * params.width_m)
    lateral_term = params.mass_kg * params.cg_height_m * a_lateral / (2.0 * params.length_m)
    return (
        base - forward_term + lateral_term,
        base - forward_term - lateral_term,
        base + forward_term + lateral_term,
        base + forward_term - lateral_term,
    )


def atbs(
    params: VehicleParams,
    calibration: str,
    frame: TelemetryFrame,
    settings: EscSettings = DEFAULT_SETTINGS,
) -> Intervention:
    """Trail-brake to keep the front axle's load share in its working band.

    While steering, a rear-shifted load (share below the band) gets brake
    added to load the nose and counter under-steer; an over-loaded front
    while braking gets the brake eased to counter over-steer.
    """
    _check_calibration(calibration)
    if calibration == "off":
        return _noop("atbs", "off")
    _require(
        frame,
        "atbs",
        steering_angle=frame.steering_angle,
        accel=frame.accel,
        brake=frame.brake,
    )
    thresholds = settings.thresholds("atbs", calibration)
    if abs(frame.steering_angle) <= thresholds.steer_min:
        return _noop("atbs", "steering on-center")
    front_left, front_right, _, _ = cfc(params, frame.accel[0], frame.accel[1])
    share = (front_left + front_right) / (params.mass_kg * G)
    if share < thresholds.front_low:
        add = _clamp01(thresholds.gain * (thresholds.front_low - share))
        return Intervention(
            brake_add=add,
            source="atbs",
            reason=f"front share {share:.3f} under {thresholds.front_low:.2f}; brake +{add:.2f}",
        )
    if share > thresholds.front_high and frame.brake > 0.0:
        scale = _clamp01(1.0 - thresholds.gain * (share - thresholds.front_high))
        return Intervention(
            brake_scale=scale,
            source="atbs",
            reason=f"front share {share:.3f} over {thresholds.front_high:.2f}; brake x{scale:.2f}",
        )
    return _noop("atbs", f"front share {share:.3f} in band")


SYSTEM_FUNCS: dict[str, Callable[..., Intervention]] = {
    "dtcs": dtcs,
    "abs": abs_system,
    "ebi": ebi,
    "atbs": atbs,
}


def _check_calibration(calibration: str) -> None:
    if calibration not in CALIBRATIONS:
        raise DomainError(f"calibration must be one of {CALIBRATIONS}, got {calibration!r}")


def pipeline(
    params: VehicleParams,
    calibration: str,
    frame: TelemetryFrame,
    settings: EscSettings = DEFAULT_SETTINGS,
    systems: Sequence[str] = SYSTEMS,
) -> Intervention:
    """Run the enabled systems in fixed order and combine their outputs.

    Throttle and brake scales multiply; brake_add takes the maximum. A
    system whose inputs are missing is skipped with a note rather than
    failing the frame.
    """
    throttle = 1.0
    brake = 1.0
    brake_add = 0.0
    notes: list[str] = []
    for name in SYSTEMS:
        if name not in systems:
            continue
        try:
            result = SYSTEM_FUNCS[name](params, calibration, frame, settings)
        except InsufficientDataError as exc:
            notes.append(f"{name}: skipped ({exc})")
            continue
        throttle *= result.throttle_scale
        brake *= result.brake_scale
        brake_add = max(brake_add, result.brake_add)
        if not result.is_noop:
            notes.append(result.reason)
    return Intervention(
        throttle_scale=throttle,
        brake_scale=brake,
        brake_add=brake_add,
        source="pipeline",
        reason="; ".join(notes),
    )
