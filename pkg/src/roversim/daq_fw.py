"""Emulated data-acquisition microcontroller.

Strictly sequential acquisition: one conversion or frame transfer in flight at
any time. Per-channel due times advance on a fixed schedule (due += interval)
so a busy converter delays samples but never drifts the timetable.

Sample frame pushed over the parallel bus, 6 bytes:
    A5 <channel> <gain code> <raw hi> <raw lo> <xor of the first five>
Gain codes 0..3 select gains 1/2/4/8. Code 0xFF marks a heading sample whose
raw value is tenths of a degree (0..3599); analog raw is the 10-bit ADC code.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .config import ChannelConfig
from .hardware import GAIN_SETTLE_TICKS, AdcPga, AnalogSensor
from .simkernel import ParallelBus, SimClock

FRAME_SYNC = 0xA5
FRAME_LEN = 6
GAIN_CODES = {1: 0, 2: 1, 4: 2, 8: 3}
CODE_GAINS = {code: gain for gain, code in GAIN_CODES.items()}
COMPASS_GAIN_CODE = 0xFF

ANALOG_RAW_MAX = 1023
COMPASS_RAW_MAX = 3599


class ConversionBusyError(RuntimeError):
    """Acquisition requested while another conversion or transfer is in flight."""


@dataclass
class Sample:
    """One acquisition. ``value`` stays None until host-side calibration."""

    channel: int
    t_us: int
    gain: Optional[int]  # None for heading samples
    raw: int
    value: Optional[float] = None


@dataclass
class AcquisitionRecord:
    """Timing bookkeeping for one acquisition, for cadence/overlap audits."""

    channel: int
    due_us: int
    start_us: int
    latch_us: int
    complete_us: int


def xor_checksum(data: Sequence[int]) -> int:
    check = 0
    for byte in data:
        check ^= byte
    return check & 0xFF


def frame_sample(sample: Sample) -> bytes:
    gain_code = COMPASS_GAIN_CODE if sample.gain is None else GAIN_CODES[sample.gain]
    head = bytes([FRAME_SYNC, sample.channel & 0xFF, gain_code,
                  (sample.raw >> 8) & 0xFF, sample.raw & 0xFF])
    return head + bytes([xor_checksum(head)])


class AcquisitionScheduler:
    """Earliest-due channel picker; ties break toward the lowest id."""

    def __init__(self, channels: Sequence[ChannelConfig], start_us: int = 0):
        ids = [ch.id for ch in channels]
        if len(ids) != len(set(ids)):
            raise ValueError("channel ids must be unique")
        self.channels = {ch.id: ch for ch in channels}
        self._due_us = {ch.id: start_us for ch in channels}

    def next_channel(self, now_us: int, busy: bool = False) -> Optional[ChannelConfig]:
        if busy or not self._due_us:
            return None
        due = [(t, cid) for cid, t in self._due_us.items() if t <= now_us]
        if not due:
            return None
        _, cid = min(due)
        return self.channels[cid]

    def due_time(self, channel_id: int) -> int:
        return self._due_us[channel_id]

    def advance(self, channel_id: int) -> None:
        interval_us = round(self.channels[channel_id].interval_s * 1_000_000)
        self._due_us[channel_id] += interval_us

    def earliest_due_us(self) -> Optional[int]:
        return min(self._due_us.values()) if self._due_us else None


class DaqFirmware:
    """Scheduler + converter + frame transmitter, driven once per kernel tick."""

    def __init__(self, bus: ParallelBus, adc: AdcPga, clock: SimClock,
                 channels: Sequence[ChannelConfig],
                 sensors: dict[int, AnalogSensor],
                 compass_tenths: Callable[[], int],
                 rng: Optional[random.Random] = None):
        self._bus = bus
        self._adc = adc
        self._clock = clock
        self._sensors = sensors
        self._compass_tenths = compass_tenths
        self._rng = rng
        self.scheduler = AcquisitionScheduler(channels)
        for channel in channels:
            if channel.kind == "analog" and channel.id not in sensors:
                raise ValueError(f"no sensor wired for analog channel {channel.id}")
        self.samples: deque[Sample] = deque(maxlen=256)
        self.acquisitions: deque[AcquisitionRecord] = deque(maxlen=20_000)
        self._conv: Optional[dict] = None
        self._txq: Optional[deque[int]] = None

    @property
    def busy(self) -> bool:
        return self._conv is not None or self._txq is not None

    def on_tick(self, now_us: int) -> None:
        if self._txq is not None:
            self._pump_tx()
            return
        if self._conv is not None:
            self._advance_conversion(now_us)
            return
        channel = self.scheduler.next_channel(now_us, busy=False)
        if channel is not None:
            due = self.scheduler.due_time(channel.id)
            self.scheduler.advance(channel.id)
            self._begin(channel, now_us, due)

    def next_due_us(self) -> Optional[int]:
        if self._txq is not None:
            return self._clock.now_us + self._clock.tick_us
        if self._conv is not None:
            return self._conv["at"]
        return self.scheduler.earliest_due_us()

    def begin_acquire(self, channel_id: int) -> None:
        """Direct acquisition entry; raises if anything is already in flight."""
        if self.busy:
            raise ConversionBusyError("conversion or transfer already in flight")
        channel = self.scheduler.channels[channel_id]
        now = self._clock.now_us
        self._begin(channel, now, now)

    def _begin(self, channel: ChannelConfig, now_us: int, due_us: int) -> None:
        tick = self._clock.tick_us
        if channel.kind == "analog":
            self._adc.set_gain(channel.gain)
            self._conv = {"ch": channel, "due": due_us, "start": now_us,
                          "phase": "settle", "at": now_us + GAIN_SETTLE_TICKS * tick}
        else:
            self._conv = {"ch": channel, "due": due_us, "start": now_us,
                          "phase": "read", "at": now_us + channel.conversion_ticks * tick}

    def _advance_conversion(self, now_us: int) -> None:
        conv = self._conv
        if now_us < conv["at"]:
            return
        channel: ChannelConfig = conv["ch"]
        tick = self._clock.tick_us
        if conv["phase"] == "settle":
            # amplifier settled: latch the input and start converting
            volts = self._sensors[channel.id].read_volts(self._rng)
            conv["code"] = self._adc.convert(volts)
            conv["latch"] = now_us
            conv["phase"] = "convert"
            conv["at"] = now_us + channel.conversion_ticks * tick
        elif conv["phase"] == "convert":
            self._complete(Sample(channel.id, now_us, channel.gain, conv["code"]),
                           conv, latch_us=conv["latch"])
        else:  # compass register read
            raw = self._compass_tenths()
            self._complete(Sample(channel.id, now_us, None, raw), conv, latch_us=now_us)

    def _complete(self, sample: Sample, conv: dict, latch_us: int) -> None:
        self.samples.append(sample)
        self.acquisitions.append(AcquisitionRecord(
            channel=sample.channel, due_us=conv["due"], start_us=conv["start"],
            latch_us=latch_us, complete_us=sample.t_us))
        self._txq = deque(frame_sample(sample))
        self._conv = None

    def _pump_tx(self) -> None:
        bus = self._bus
        if bus.strobe and bus.ack:
            bus.writer_release()
        elif not bus.strobe and not bus.ack:
            if self._txq:
                bus.write(self._txq.popleft())
            else:
                self._txq = None  # frame fully transferred
