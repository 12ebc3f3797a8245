"""Fully wired emulated robot.

One kernel drives three devices in fixed order: the drive firmware on the
serial link, the acquisition firmware on the parallel bus, and the host-side
ingest that turns wheel feedback into pose estimates and sample frames into
calibrated, persisted series. External callers (service, CLI) interact only
between kernel steps.
"""

from __future__ import annotations

import random
from typing import Callable, Optional

from . import control_fw
from .config import ChannelConfig, SimConfig
from .control_fw import ControlFirmware, drive_bytes
from .daps import FrameDecoder, SampleStore, calibrate, channel_unit
from .daq_fw import DaqFirmware, Sample
from .hardware import AdcPga, AnalogSensor, Chassis, Pose, compass_heading_tenths
from .navigation import FootprintTrace, PoseEstimator
from .simkernel import BusTrafficLog, ParallelBus, SerialLink, SimKernel

DIRECTION_TO_MEANING = {
    "forward": control_fw.FORWARD,
    "backward": control_fw.BACKWARD,
    "left": control_fw.TURN_LEFT,
    "right": control_fw.TURN_RIGHT,
    "stop": control_fw.STOP,
}


class RobotSim:
    """The whole desk robot: call :meth:`drive`, advance time, read snapshots."""

    def __init__(self, cfg: Optional[SimConfig] = None,
                 data_dir=None, bus_log_path=None):
        self.cfg = cfg = cfg or SimConfig()
        self.kernel = SimKernel(cfg.tick_us)
        clock = self.kernel.clock
        self.buslog = BusTrafficLog(bus_log_path)
        self.serial = SerialLink(clock, cfg.serial_latency_ticks, "ser0", self.buslog)
        self.parallel = ParallelBus(clock, "par0", self.buslog)

        initial = Pose(heading_deg=cfg.initial_heading_deg)
        self.chassis = Chassis(cfg.geometry.wheel_diameter_m, cfg.geometry.steps_per_rev,
                               cfg.geometry.wheelbase_m, initial_pose=initial)
        self.adc = AdcPga(cfg.vref_v)
        self.rng = random.Random(cfg.seed)
        self.sensors = {
            ch.id: AnalogSensor(ch.sensor, cfg.vref_v, ch.noise_sd_v)
            for ch in cfg.channels if ch.kind == "analog"
        }
        self.control = ControlFirmware(self.serial, self.chassis, clock,
                                       cfg.step_rate_hz, cfg.feedback_interval_ms * 1000)
        self.daq = DaqFirmware(
            self.parallel, self.adc, clock, cfg.channels, self.sensors,
            compass_tenths=lambda: compass_heading_tenths(self.chassis.true_pose.heading_deg),
            rng=self.rng)
        self.estimator = PoseEstimator(self.chassis.step_length_m, initial)
        self.trace = FootprintTrace(cfg.footprint_capacity)
        self.decoder = FrameDecoder()
        self.store = SampleStore(data_dir) if data_dir else None
        self.latest_samples: dict[int, dict] = {}
        self.listeners: list[Callable[[dict], None]] = []
        self.fb_parse_errors = 0
        self.storage_errors = 0
        self._serial_line = bytearray()

        self.kernel.add_device(self.control.on_tick, self.control.next_due_us)
        self.kernel.add_device(self.daq.on_tick, self.daq.next_due_us)
        self.kernel.add_device(self._host_tick, self._host_next_due)
        for t_s, channel, value in cfg.sensor_script:
            self.kernel.schedule_at(round(t_s * 1_000_000), self._make_setter(channel, value))

    def _make_setter(self, channel: int, value: float) -> Callable[[], None]:
        def apply() -> None:
            sensor = self.sensors.get(channel)
            if sensor is not None:
                sensor.quantity = value
        return apply

    # time control

    @property
    def now_us(self) -> int:
        return self.kernel.clock.now_us

    def step_ticks(self, n: int = 1) -> None:
        self.kernel.step(n)

    def run_until_us(self, t_us: int) -> None:
        self.kernel.run_until(t_us)

    def run_until_s(self, t_s: float) -> None:
        self.kernel.run_until(round(t_s * 1_000_000))

    def idle(self) -> bool:
        return (self.control.motion is None and not self.daq.busy
                and self.serial.pending(SerialLink.HOST_TO_MCU) == 0
                and self.serial.pending(SerialLink.MCU_TO_HOST) == 0
                and self.parallel.idle)

    def run_until_idle(self, max_s: float = 120.0) -> None:
        deadline = self.now_us + round(max_s * 1_000_000)
        while not self.idle() and self.now_us < deadline:
            self.step_ticks(100)
        if not self.idle():
            raise TimeoutError(f"robot still busy after {max_s}s simulated")

    # command path

    def drive(self, direction: str, steps: Optional[int] = None) -> bytes:
        meaning = DIRECTION_TO_MEANING.get(direction)
        if meaning is None:
            raise ValueError(f"unknown direction {direction!r}")
        wire = drive_bytes(meaning, steps)
        for byte in wire:
            self.serial.host_send(byte)
        return wire

    # host-side ingest (telemetry main unit)

    def _host_tick(self, now_us: int) -> None:
        while (byte := self.serial.host_recv()) is not None:
            if byte == ord("\n"):
                self._ingest_feedback_line(bytes(self._serial_line), now_us)
                self._serial_line.clear()
            else:
                self._serial_line.append(byte)
                if len(self._serial_line) > 64:
                    self._serial_line.clear()
                    self.fb_parse_errors += 1
        bus = self.parallel
        if bus.strobe and not bus.ack:
            sample = self.decoder.feed(bus.read(), now_us)
            if sample is not None:
                self._ingest_sample(sample, now_us)
        elif bus.ack and not bus.strobe:
            bus.reader_release()

    def _host_next_due(self) -> Optional[int]:
        ready = self.serial.next_ready_us(SerialLink.MCU_TO_HOST)
        if not self.parallel.idle:
            tick_next = self.kernel.clock.now_us + self.kernel.clock.tick_us
            return tick_next if ready is None else min(ready, tick_next)
        return ready

    def _ingest_feedback_line(self, line: bytes, now_us: int) -> None:
        parts = line.split()
        if len(parts) != 3 or parts[0] != b"FB":
            self.fb_parse_errors += 1
            return
        try:
            fb_left, fb_right = int(parts[1]), int(parts[2])
        except ValueError:
            self.fb_parse_errors += 1
            return
        # main unit reads the heading registers directly at frame cadence
        tenths = (self.chassis.compass_register(2) << 8) | self.chassis.compass_register(3)
        pose = self.estimator.update(now_us, fb_left, fb_right, tenths / 10.0)
        self.trace.record(now_us, pose)
        self._publish("pose", now_us)

    def _ingest_sample(self, sample: Sample, now_us: int) -> None:
        channel = self._channel(sample.channel)
        if channel is None:
            self.fb_parse_errors += 1
            return
        value, unit = calibrate(sample, channel, self.cfg.vref_v)
        sample.value = value
        if self.store is not None:
            try:
                self.store.persist(sample)
            except OSError:
                self.storage_errors += 1  # monitoring must not kill control
        self.latest_samples[sample.channel] = {
            "t_us": sample.t_us,
            "channel": sample.channel,
            "gain": sample.gain,
            "raw": sample.raw,
            "value": value,
            "unit": unit,
        }
        self._publish("sample", now_us)

    def _channel(self, channel_id: int) -> Optional[ChannelConfig]:
        return self.daq.scheduler.channels.get(channel_id)

    # snapshots

    def pose_snapshot(self) -> dict:
        state = self.estimator.snapshot()
        return {
            "x_m": state.pose.x_m,
            "y_m": state.pose.y_m,
            "heading_deg": state.pose.heading_deg,
            "t_us": state.updated_us,
        }

    def true_pose_snapshot(self) -> dict:
        pose = self.chassis.true_pose
        return {"x_m": pose.x_m, "y_m": pose.y_m, "heading_deg": pose.heading_deg,
                "t_us": self.now_us}

    def footprint(self, limit: Optional[int] = None) -> list[tuple[int, float, float, float]]:
        return self.trace.points(limit)

    def channel_info(self) -> list[dict]:
        return [
            {
                "id": ch.id,
                "kind": ch.kind,
                "sensor": ch.sensor,
                "unit": channel_unit(ch),
                "gain": ch.gain if ch.kind == "analog" else None,
                "interval_s": ch.interval_s,
            }
            for ch in sorted(self.cfg.channels, key=lambda c: c.id)
        ]

    def _publish(self, kind: str, now_us: int) -> None:
        event = {
            "type": kind,
            "t_us": now_us,
            "pose": self.pose_snapshot(),
            "samples": {str(cid): dict(info) for cid, info in self.latest_samples.items()},
        }
        for listener in self.listeners:
            listener(event)

    def add_listener(self, listener: Callable[[dict], None]) -> None:
        self.listeners.append(listener)

    def close(self) -> None:
        if self.store is not None:
            self.store.close()
        self.buslog.close()
