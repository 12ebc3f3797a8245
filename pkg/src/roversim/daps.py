"""Robot-side data processing.

Frame decoding with resync, calibration from raw codes to engineering units,
software filtering, time-bucket aggregation, and the per-channel append-only
sample store. All filtering lives here, never in the acquisition firmware.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .config import ChannelConfig
from .daq_fw import (
    ANALOG_RAW_MAX,
    CODE_GAINS,
    COMPASS_GAIN_CODE,
    COMPASS_RAW_MAX,
    FRAME_LEN,
    FRAME_SYNC,
    Sample,
    xor_checksum,
)
from .hardware import ADC_MAX_CODE, GAS_HALF_SCALE_PPM, TEMP_VOLTS_PER_C


class FrameError(ValueError):
    pass


class BadSyncError(FrameError):
    pass


class BadChecksumError(FrameError):
    pass


class BadFieldError(FrameError):
    pass


def decode_frame(frame: bytes, t_us: int = 0) -> Sample:
    """Inverse of the firmware frame encoding; raises on any defect."""
    if len(frame) != FRAME_LEN:
        raise BadFieldError(f"frame must be {FRAME_LEN} bytes, got {len(frame)}")
    if frame[0] != FRAME_SYNC:
        raise BadSyncError(f"bad sync byte {frame[0]:#04x}")
    if xor_checksum(frame[:5]) != frame[5]:
        raise BadChecksumError("checksum mismatch")
    gain_code = frame[2]
    raw = (frame[3] << 8) | frame[4]
    if gain_code == COMPASS_GAIN_CODE:
        if raw > COMPASS_RAW_MAX:
            raise BadFieldError(f"heading raw {raw} out of range")
        return Sample(channel=frame[1], t_us=t_us, gain=None, raw=raw)
    if gain_code not in CODE_GAINS:
        raise BadFieldError(f"unknown gain code {gain_code}")
    if raw > ANALOG_RAW_MAX:
        raise BadFieldError(f"analog raw {raw} out of range")
    return Sample(channel=frame[1], t_us=t_us, gain=CODE_GAINS[gain_code], raw=raw)


class FrameDecoder:
    """Streaming decoder: scans forward to a sync byte, drops bad frames, counts."""

    def __init__(self):
        self._buf = bytearray()
        self.frames_ok = 0
        self.checksum_failures = 0
        self.field_failures = 0
        self.resync_bytes = 0

    @property
    def dropped(self) -> int:
        return self.checksum_failures + self.field_failures

    def feed(self, byte: int, t_us: int = 0) -> Optional[Sample]:
        if not self._buf and byte != FRAME_SYNC:
            self.resync_bytes += 1
            return None
        self._buf.append(byte & 0xFF)
        if len(self._buf) < FRAME_LEN:
            return None
        frame = bytes(self._buf)
        self._buf.clear()
        try:
            sample = decode_frame(frame, t_us)
        except BadChecksumError:
            self.checksum_failures += 1
            return None
        except FrameError:
            self.field_failures += 1
            return None
        self.frames_ok += 1
        return sample


def calibrate(sample: Sample, channel: ChannelConfig, vref_v: float = 5.0) -> tuple[float, str]:
    """Raw code to engineering units for the channel's sensor."""
    if channel.kind == "compass":
        return sample.raw / 10.0, "deg"
    gain = sample.gain if sample.gain else 1
    volts = sample.raw / ADC_MAX_CODE * vref_v / gain
    if channel.sensor == "temperature":
        return volts / TEMP_VOLTS_PER_C, "°C"
    if channel.sensor == "gas":
        if volts >= vref_v:
            return math.inf, "ppm"  # sensor saturated, concentration unbounded
        return GAS_HALF_SCALE_PPM * volts / (vref_v - volts), "ppm"
    raise ValueError(f"channel {channel.id} has no calibration ({channel.sensor!r})")


def channel_unit(channel: ChannelConfig) -> str:
    if channel.kind == "compass":
        return "deg"
    return {"temperature": "°C", "gas": "ppm"}.get(channel.sensor or "", "")


@dataclass
class FilterSpec:
    kind: str      # "moving_average" | "median"
    window: int = 1

    def __post_init__(self):
        if self.kind not in ("moving_average", "median"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.window < 1:
            raise ValueError("window must be >= 1")


def apply_filter(values: Sequence[float], spec: FilterSpec) -> list[float]:
    """Warm-up uses partial windows so output length equals input length."""
    out = []
    for i in range(len(values)):
        lo = max(0, i - spec.window + 1)
        window = values[lo:i + 1]
        if spec.kind == "moving_average":
            out.append(statistics.fmean(window))
        else:
            out.append(statistics.median(window))
    return out


def filter_series(points: Sequence[tuple[int, float]], spec: FilterSpec) -> list[tuple[int, float]]:
    filtered = apply_filter([v for _, v in points], spec)
    return [(t, v) for (t, _), v in zip(points, filtered)]


AGGREGATE_STATS = ("min", "max", "mean", "count")


def aggregate(points: Sequence[tuple[int, float]], bucket_s: float,
              stat: str) -> list[tuple[int, float]]:
    """Time-bucketed rows aligned to t=0; empty buckets omitted."""
    if bucket_s <= 0:
        raise ValueError("bucket_s must be > 0")
    if stat not in AGGREGATE_STATS:
        raise ValueError(f"unknown stat {stat!r} (allowed: {AGGREGATE_STATS})")
    bucket_us = round(bucket_s * 1_000_000)
    buckets: dict[int, list[float]] = {}
    for t_us, value in points:
        buckets.setdefault(t_us // bucket_us, []).append(value)
    rows = []
    for index in sorted(buckets):
        values = buckets[index]
        if stat == "min":
            agg = min(values)
        elif stat == "max":
            agg = max(values)
        elif stat == "mean":
            agg = statistics.fmean(values)
        else:
            agg = float(len(values))
        rows.append((index * bucket_us, agg))
    return rows


class SampleStore:
    """One append-only text log per channel.

    Record line: ``<t_us> <channel> <gain> <raw> <value>`` (gain 0 for heading
    samples; value formatted with repr for exact round trips). Every append is
    flushed before return, so anything acknowledged is visible to queries and
    survives restarts.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._handles: dict[int, object] = {}
        self.persisted = 0

    def _path(self, channel: int) -> Path:
        return self.root / f"channel_{channel:03d}.log"

    def persist(self, sample: Sample) -> None:
        if sample.value is None:
            raise ValueError("calibrate before persisting")
        handle = self._handles.get(sample.channel)
        if handle is None:
            handle = open(self._path(sample.channel), "a", encoding="ascii")
            self._handles[sample.channel] = handle
        gain = sample.gain if sample.gain is not None else 0
        handle.write(f"{sample.t_us} {sample.channel} {gain} {sample.raw} {sample.value!r}\n")
        handle.flush()
        self.persisted += 1

    def query(self, channel: int, from_us: Optional[int] = None,
              to_us: Optional[int] = None) -> list[tuple[int, float]]:
        return [(t, v) for t, _, _, _, v in self.records(channel, from_us, to_us)]

    def records(self, channel: int, from_us: Optional[int] = None,
                to_us: Optional[int] = None) -> list[tuple[int, int, int, int, float]]:
        path = self._path(channel)
        if not path.exists():
            return []
        out = []
        data = path.read_text(encoding="ascii")
        complete, _, _ = data.rpartition("\n")  # ignore a torn trailing write
        for line in complete.splitlines():
            fields = line.split()
            if len(fields) != 5:
                continue
            t_us, ch, gain, raw = int(fields[0]), int(fields[1]), int(fields[2]), int(fields[3])
            value = float(fields[4])
            if from_us is not None and t_us < from_us:
                continue
            if to_us is not None and t_us > to_us:
                continue
            out.append((t_us, ch, gain, raw, value))
        return out

    def channels_on_disk(self) -> list[int]:
        return sorted(int(p.stem.split("_")[1]) for p in self.root.glob("channel_*.log"))

    def close(self) -> None:
        for handle in self._handles.values():
            handle.flush()
            handle.close()
        self._handles.clear()
