"""Run configuration: geometry, bus timing, channel table, sensor scripts,
and service options. Loaded from a JSON file; every problem is reported with
the offending key so operators can fix the file without reading code."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .hardware import (
    ALLOWED_GAINS,
    DEFAULT_STEPS_PER_REV,
    DEFAULT_WHEEL_DIAMETER_M,
    DEFAULT_WHEELBASE_M,
    AnalogSensor,
)


class ConfigError(ValueError):
    """Configuration problem; the message starts with the offending key."""


@dataclass
class GeometryConfig:
    wheel_diameter_m: float = DEFAULT_WHEEL_DIAMETER_M
    steps_per_rev: int = DEFAULT_STEPS_PER_REV
    wheelbase_m: float = DEFAULT_WHEELBASE_M


@dataclass
class ChannelConfig:
    """Per-sensor acquisition contract."""

    id: int
    kind: str                      # "analog" | "compass"
    sensor: Optional[str] = None   # "temperature" | "gas" for analog channels
    gain: int = 1
    interval_s: float = 60.0
    conversion_ticks: int = 100
    noise_sd_v: float = 0.0


@dataclass
class SimConfig:
    tick_us: int = 1000
    serial_latency_ticks: int = 0
    step_rate_hz: float = 100.0
    feedback_interval_ms: int = 100
    vref_v: float = 5.0
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    channels: list[ChannelConfig] = field(default_factory=lambda: default_channel_table())
    sensor_script: list[tuple[float, int, float]] = field(default_factory=list)
    initial_heading_deg: float = 0.0
    footprint_capacity: int = 10_000
    stream_backlog: int = 1000
    listen: str = "127.0.0.1:8000"
    static_dir: Optional[str] = None
    data_dir: Optional[str] = None
    seed: int = 0


def default_channel_table() -> list[ChannelConfig]:
    return [
        ChannelConfig(id=1, kind="analog", sensor="temperature", gain=4, interval_s=60.0),
        ChannelConfig(id=2, kind="analog", sensor="gas", gain=1, interval_s=60.0),
        ChannelConfig(id=3, kind="compass", interval_s=10.0),
    ]


_TOP_KEYS = {
    "tick_us", "serial_latency_ticks", "step_rate_hz", "feedback_interval_ms",
    "vref_v", "geometry", "channels", "sensor_script", "sensor_script_file",
    "initial_heading_deg", "footprint_capacity", "stream_backlog", "listen",
    "static_dir", "data_dir", "seed",
}
_GEOMETRY_KEYS = {"wheel_diameter_m", "steps_per_rev", "wheelbase_m"}
_CHANNEL_KEYS = {"id", "kind", "sensor", "gain", "interval_s", "conversion_ticks", "noise_sd_v"}


def _require(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(f"{key}: {message}")


def _number(value, key: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             key, f"expected a number, got {value!r}")
    return value


def parse_sensor_script(lines, key: str = "sensor_script") -> list[tuple[float, int, float]]:
    """Timed physical-quantity script: ``<t_s> <channel> <value>`` per entry."""
    script = []
    for index, entry in enumerate(lines):
        where = f"{key}[{index}]"
        if isinstance(entry, str):
            parts = entry.split()
            _require(len(parts) == 3, where, f"expected '<t_s> <channel> <value>', got {entry!r}")
        else:
            parts = entry
            _require(isinstance(parts, (list, tuple)) and len(parts) == 3,
                     where, f"expected [t_s, channel, value], got {entry!r}")
        try:
            t_s, channel, value = float(parts[0]), int(parts[1]), float(parts[2])
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: non-numeric field in {entry!r}") from None
        _require(t_s >= 0, where, "time must be >= 0")
        script.append((t_s, channel, value))
    script.sort(key=lambda item: item[0])
    return script


def _parse_channel(raw: dict, where: str) -> ChannelConfig:
    _require(isinstance(raw, dict), where, "expected an object")
    unknown = set(raw) - _CHANNEL_KEYS
    _require(not unknown, f"{where}.{sorted(unknown)[0]}" if unknown else where, "unknown key")
    _require("id" in raw, f"{where}.id", "required")
    cid = raw["id"]
    _require(isinstance(cid, int) and 0 <= cid <= 255, f"{where}.id", "must be an integer in 0..255")
    kind = raw.get("kind", "analog")
    _require(kind in ("analog", "compass"), f"{where}.kind", f"must be 'analog' or 'compass', got {kind!r}")
    channel = ChannelConfig(id=cid, kind=kind)
    if kind == "analog":
        sensor = raw.get("sensor")
        _require(sensor in AnalogSensor.KINDS, f"{where}.sensor",
                 f"must be one of {AnalogSensor.KINDS}, got {sensor!r}")
        channel.sensor = sensor
        gain = raw.get("gain", 1)
        _require(gain in ALLOWED_GAINS, f"{where}.gain",
                 f"invalid gain {gain!r} (allowed: {ALLOWED_GAINS})")
        channel.gain = gain
        noise = _number(raw.get("noise_sd_v", 0.0), f"{where}.noise_sd_v")
        _require(noise >= 0, f"{where}.noise_sd_v", "must be >= 0")
        channel.noise_sd_v = noise
    interval = _number(raw.get("interval_s", 60.0), f"{where}.interval_s")
    _require(interval > 0, f"{where}.interval_s", "must be > 0")
    channel.interval_s = interval
    ticks = raw.get("conversion_ticks", 100)
    _require(isinstance(ticks, int) and ticks >= 1, f"{where}.conversion_ticks", "must be an integer >= 1")
    channel.conversion_ticks = ticks
    return channel


def config_from_dict(data: dict, base_dir: Optional[Path] = None) -> SimConfig:
    _require(isinstance(data, dict), "config", "top level must be an object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")
    cfg = SimConfig()
    if "tick_us" in data:
        _require(isinstance(data["tick_us"], int) and data["tick_us"] > 0, "tick_us",
                 "must be a positive integer")
        cfg.tick_us = data["tick_us"]
    if "serial_latency_ticks" in data:
        v = data["serial_latency_ticks"]
        _require(isinstance(v, int) and v >= 0, "serial_latency_ticks", "must be an integer >= 0")
        cfg.serial_latency_ticks = v
    if "step_rate_hz" in data:
        v = _number(data["step_rate_hz"], "step_rate_hz")
        _require(v > 0, "step_rate_hz", "must be > 0")
        cfg.step_rate_hz = v
    if "feedback_interval_ms" in data:
        v = data["feedback_interval_ms"]
        _require(isinstance(v, int) and v >= 1, "feedback_interval_ms", "must be an integer >= 1")
        cfg.feedback_interval_ms = v
    if "vref_v" in data:
        v = _number(data["vref_v"], "vref_v")
        _require(v > 0, "vref_v", "must be > 0")
        cfg.vref_v = v
    if "geometry" in data:
        geo = data["geometry"]
        _require(isinstance(geo, dict), "geometry", "expected an object")
        unknown = set(geo) - _GEOMETRY_KEYS
        if unknown:
            raise ConfigError(f"geometry.{sorted(unknown)[0]}: unknown key")
        g = GeometryConfig()
        if "wheel_diameter_m" in geo:
            v = _number(geo["wheel_diameter_m"], "geometry.wheel_diameter_m")
            _require(v > 0, "geometry.wheel_diameter_m", "must be > 0")
            g.wheel_diameter_m = v
        if "steps_per_rev" in geo:
            v = geo["steps_per_rev"]
            _require(isinstance(v, int) and v > 0, "geometry.steps_per_rev", "must be a positive integer")
            g.steps_per_rev = v
        if "wheelbase_m" in geo:
            v = _number(geo["wheelbase_m"], "geometry.wheelbase_m")
            _require(v > 0, "geometry.wheelbase_m", "must be > 0")
            g.wheelbase_m = v
        cfg.geometry = g
    if "channels" in data:
        raw_channels = data["channels"]
        _require(isinstance(raw_channels, list), "channels", "expected a list")
        channels = [_parse_channel(ch, f"channels[{i}]") for i, ch in enumerate(raw_channels)]
        ids = [ch.id for ch in channels]
        _require(len(ids) == len(set(ids)), "channels", "channel ids must be unique")
        cfg.channels = channels
    known_ids = {ch.id for ch in cfg.channels}
    if "sensor_script_file" in data:
        path = Path(data["sensor_script_file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        _require(path.exists(), "sensor_script_file", f"no such file: {path}")
        lines = [ln for ln in path.read_text().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        cfg.sensor_script = parse_sensor_script(lines, "sensor_script_file")
    if "sensor_script" in data:
        _require(isinstance(data["sensor_script"], list), "sensor_script", "expected a list")
        cfg.sensor_script = parse_sensor_script(data["sensor_script"])
    for index, (_, channel, _) in enumerate(cfg.sensor_script):
        _require(channel in known_ids, f"sensor_script[{index}]",
                 f"unknown channel {channel}")
    if "initial_heading_deg" in data:
        cfg.initial_heading_deg = _number(data["initial_heading_deg"], "initial_heading_deg") % 360.0
    if "footprint_capacity" in data:
        v = data["footprint_capacity"]
        _require(isinstance(v, int) and v >= 1, "footprint_capacity", "must be an integer >= 1")
        cfg.footprint_capacity = v
    if "stream_backlog" in data:
        v = data["stream_backlog"]
        _require(isinstance(v, int) and v >= 1, "stream_backlog", "must be an integer >= 1")
        cfg.stream_backlog = v
    if "listen" in data:
        _require(isinstance(data["listen"], str) and ":" in data["listen"], "listen",
                 "expected 'host:port'")
        cfg.listen = data["listen"]
    if "static_dir" in data and data["static_dir"] is not None:
        _require(isinstance(data["static_dir"], str), "static_dir", "expected a path string")
        cfg.static_dir = data["static_dir"]
    if "data_dir" in data and data["data_dir"] is not None:
        _require(isinstance(data["data_dir"], str), "data_dir", "expected a path string")
        cfg.data_dir = data["data_dir"]
    if "seed" in data:
        _require(isinstance(data["seed"], int), "seed", "must be an integer")
        cfg.seed = data["seed"]
    return cfg


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config: no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(data, base_dir=path.parent)


def parse_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise ConfigError(f"listen: invalid port in {listen!r}") from None
