"""JSON configuration for the CLI harness.

Parsing is strict: unknown keys and wrong types are rejected with the full
key path, so a typo in a config never silently falls back to a default.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any

from .devtree import KINDS, DeviceTree
from .errors import ConfigError, LeadsKitError
from .esc import CALIBRATIONS, EscSettings, VehicleParams

ENV_CONFIG = "LEADS_KIT_CONFIG"


@dataclass
class CommConfig:
    port: int = 8300
    host: str = "127.0.0.1"
    separator: bytes = b";"
    pool_size: int = 4


@dataclass
class PacerConfig:
    target_rate: float = 60.0


@dataclass
class EmulationConfig:
    duration: float = 30.0
    seed: int = 42
    noise: float = 1.0  # channel-noise scale; 0 disables


@dataclass
class PathsConfig:
    output_dir: str = "."


@dataclass
class Config:
    devices: list[dict[str, Any]] = field(default_factory=list)
    comm: CommConfig = field(default_factory=CommConfig)
    vehicle: VehicleParams = field(
        default_factory=lambda: VehicleParams(
            mass_kg=300.0, cg_height_m=0.5, width_m=1.5, length_m=2.5
        )
    )
    esc: EscSettings = field(default_factory=EscSettings)
    esc_calibration: str = "standard"
    pacer: PacerConfig = field(default_factory=PacerConfig)
    emulation: EmulationConfig = field(default_factory=EmulationConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)


_TOP_KEYS = (
    "devices",
    "comm",
    "vehicle",
    "esc",
    "esc_calibration",
    "pacer",
    "emulation",
    "paths",
)


def _reject_unknown(data: dict[str, Any], allowed: tuple[str, ...], path: str) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)} (allowed: {list(allowed)})")


def _get_number(data: dict[str, Any], key: str, path: str, default: float, minimum: float | None = None) -> float:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {value!r}")
    return float(value)


def _get_int(data: dict[str, Any], key: str, path: str, default: int, minimum: int | None = None) -> int:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {value!r}")
    return value


def _get_str(data: dict[str, Any], key: str, path: str, default: str) -> str:
    value = data.get(key, default)
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key}: expected a string, got {value!r}")
    return value


def _parse_devices(items: Any, path: str) -> list[dict[str, Any]]:
    if not isinstance(items, list):
        raise ConfigError(f"{path}: expected a list of device records")
    records = []
    for i, item in enumerate(items):
        entry_path = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{entry_path}: expected an object")
        _reject_unknown(item, ("tag", "kind", "parent"), entry_path)
        tag = item.get("tag")
        kind = item.get("kind")
        parent = item.get("parent")
        if not isinstance(tag, str) or not tag:
            raise ConfigError(f"{entry_path}.tag: expected a non-empty string")
        if kind not in KINDS:
            raise ConfigError(f"{entry_path}.kind: expected one of {KINDS}, got {kind!r}")
        if parent is not None and not isinstance(parent, str):
            raise ConfigError(f"{entry_path}.parent: expected a tag string or null")
        records.append({"tag": tag, "kind": kind, "parent": parent})
    try:
        DeviceTree.from_config(records)
    except LeadsKitError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return records


def _parse_comm(data: Any, path: str) -> CommConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    _reject_unknown(data, ("port", "host", "separator", "pool_size"), path)
    separator = _get_str(data, "separator", path, ";")
    encoded = separator.encode("utf-8")
    if len(encoded) != 1:
        raise ConfigError(f"{path}.separator: must be a single byte, got {separator!r}")
    return CommConfig(
        port=_get_int(data, "port", path, 8300, minimum=1),
        host=_get_str(data, "host", path, "127.0.0.1"),
        separator=encoded,
        pool_size=_get_int(data, "pool_size", path, 4, minimum=1),
    )


def _parse_vehicle(data: Any, path: str) -> VehicleParams:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    allowed = ("mass_kg", "cg_height_m", "width_m", "length_m", "drivetrain", "max_decel")
    _reject_unknown(data, allowed, path)
    drivetrain = _get_str(data, "drivetrain", path, "rear")
    if drivetrain not in ("rear", "awd"):
        raise ConfigError(f"{path}.drivetrain: expected 'rear' or 'awd', got {drivetrain!r}")
    return VehicleParams(
        mass_kg=_get_number(data, "mass_kg", path, 300.0, minimum=1e-9),
        cg_height_m=_get_number(data, "cg_height_m", path, 0.5, minimum=1e-9),
        width_m=_get_number(data, "width_m", path, 1.5, minimum=1e-9),
        length_m=_get_number(data, "length_m", path, 2.5, minimum=1e-9),
        drivetrain=drivetrain,
        max_decel=_get_number(data, "max_decel", path, 8.0, minimum=1e-9),
    )


def _parse_pacer(data: Any, path: str) -> PacerConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    _reject_unknown(data, ("target_rate",), path)
    return PacerConfig(target_rate=_get_number(data, "target_rate", path, 60.0, minimum=1e-9))


def _parse_emulation(data: Any, path: str) -> EmulationConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    _reject_unknown(data, ("duration", "seed", "noise"), path)
    return EmulationConfig(
        duration=_get_number(data, "duration", path, 30.0, minimum=1e-9),
        seed=_get_int(data, "seed", path, 42, minimum=0),
        noise=_get_number(data, "noise", path, 1.0, minimum=0.0),
    )


def _parse_paths(data: Any, path: str) -> PathsConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    _reject_unknown(data, ("output_dir",), path)
    return PathsConfig(output_dir=_get_str(data, "output_dir", path, "."))


def parse_config(data: dict[str, Any]) -> Config:
    """Validate a parsed JSON object into a :class:`Config`."""
    if not isinstance(data, dict):
        raise ConfigError("config root: expected an object")
    _reject_unknown(data, _TOP_KEYS, "config")
    config = Config()
    if "devices" in data:
        config.devices = _parse_devices(data["devices"], "devices")
    if "comm" in data:
        config.comm = _parse_comm(data["comm"], "comm")
    if "vehicle" in data:
        config.vehicle = _parse_vehicle(data["vehicle"], "vehicle")
    if "esc" in data:
        if not isinstance(data["esc"], dict):
            raise ConfigError("esc: expected an object of system tables")
        config.esc = EscSettings.from_config(data["esc"], "esc")
    if "esc_calibration" in data:
        level = data["esc_calibration"]
        if level not in CALIBRATIONS:
            raise ConfigError(
                f"esc_calibration: expected one of {CALIBRATIONS}, got {level!r}"
            )
        config.esc_calibration = level
    if "pacer" in data:
        config.pacer = _parse_pacer(data["pacer"], "pacer")
    if "emulation" in data:
        config.emulation = _parse_emulation(data["emulation"], "emulation")
    if "paths" in data:
        config.paths = _parse_paths(data["paths"], "paths")
    return config


def load_config(path: str | None) -> Config:
    """Load a config file, falling back to $LEADS_KIT_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        return Config()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(data)
