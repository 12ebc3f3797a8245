"""Emulated drive-control microcontroller.

Serial wire protocol, host to MCU (single ASCII bytes unless noted):
    '1' turn left    '2' turn right    '3' forward    '4' backward    '0' stop
    'M' <code> <decimal steps> '\\n'   bounded move, e.g. M3200\\n = forward
                                       exactly 200 step pairs then stop
Any other byte is ignored and counted. The latest complete command wins.

MCU to host: ``FB <left_steps> <right_steps>\\n`` every feedback interval,
cumulative signed step counts since firmware start.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .hardware import FULL_STEP_SEQUENCE, Chassis
from .simkernel import SerialLink, SimClock

TURN_LEFT = "turn_left"
TURN_RIGHT = "turn_right"
FORWARD = "forward"
BACKWARD = "backward"
STOP = "stop"

COMMAND_BYTES = {
    ord("1"): TURN_LEFT,
    ord("2"): TURN_RIGHT,
    ord("3"): FORWARD,
    ord("4"): BACKWARD,
    ord("0"): STOP,
}
WIRE_CODES = {meaning: chr(byte) for byte, meaning in COMMAND_BYTES.items()}

# per-pair signed wheel deltas (left, right)
_STEP_DELTAS = {
    FORWARD: (1, 1),
    BACKWARD: (-1, -1),
    TURN_LEFT: (-1, 1),
    TURN_RIGHT: (1, -1),
}

_MFRAME_MAX = 12  # 'M' + code + up to 9 digits + newline


def drive_bytes(meaning: str, steps: Optional[int] = None) -> bytes:
    """Wire encoding hosts use to issue a command."""
    if meaning not in WIRE_CODES:
        raise ValueError(f"unknown drive meaning {meaning!r}")
    if meaning == STOP:
        if steps is not None:
            raise ValueError("stop never carries a step count")
        return WIRE_CODES[STOP].encode("ascii")
    if steps is None:
        return WIRE_CODES[meaning].encode("ascii")
    if steps < 1:
        raise ValueError("bounded moves need steps >= 1")
    return f"M{WIRE_CODES[meaning]}{steps}\n".encode("ascii")


@dataclass
class MotionState:
    meaning: str
    steps_remaining: Optional[int] = None  # None = run until preempted


class ControlFirmware:
    """Command loop state machine, driven once per kernel tick."""

    def __init__(self, link: SerialLink, chassis: Chassis, clock: SimClock,
                 step_rate_hz: float = 100.0, feedback_interval_us: int = 100_000):
        if step_rate_hz <= 0:
            raise ValueError("step_rate_hz must be positive")
        self._link = link
        self._chassis = chassis
        self._clock = clock
        tick = clock.tick_us
        self._step_interval_us = max(round(1_000_000 / step_rate_hz / tick), 1) * tick
        self._fb_interval_us = feedback_interval_us
        self.motion: Optional[MotionState] = None
        self.left_steps = 0
        self.right_steps = 0
        self.unknown_bytes = 0
        self._phase_idx = [0, 0]  # matches chassis channels' initial phase
        self._next_step_us = 0
        self._next_fb_us = feedback_interval_us
        self._frame: Optional[bytearray] = None  # partial bounded-move frame

    def on_tick(self, now_us: int) -> None:
        self._drain_commands(now_us)
        if self.motion is not None and now_us >= self._next_step_us:
            self._emit_step()
            self._next_step_us += self._step_interval_us
        if now_us >= self._next_fb_us:
            self._emit_feedback()
            self._next_fb_us += self._fb_interval_us

    def next_due_us(self) -> Optional[int]:
        due = self._next_fb_us
        if self.motion is not None:
            due = min(due, self._next_step_us)
        ready = self._link.next_ready_us(SerialLink.HOST_TO_MCU)
        if ready is not None:
            due = min(due, ready)
        return due

    def bounded_move(self, meaning: str, steps: int) -> None:
        """Start a motion that auto-stops after exactly ``steps`` step pairs."""
        if meaning not in _STEP_DELTAS:
            raise ValueError(f"cannot bound {meaning!r}")
        if steps < 1:
            raise ValueError("steps must be >= 1")
        self._activate(meaning, steps)

    def _drain_commands(self, now_us: int) -> None:
        pending: Optional[tuple[str, Optional[int]]] = None
        while (byte := self._link.mcu_recv()) is not None:
            command = self._consume_byte(byte)
            if command is not None:
                pending = command
        if pending is not None:
            self._activate(*pending)

    def _consume_byte(self, byte: int) -> Optional[tuple[str, Optional[int]]]:
        if self._frame is not None:
            self._frame.append(byte)
            if byte == ord("\n"):
                frame, self._frame = self._frame, None
                return self._parse_bounded(frame)
            if len(self._frame) > _MFRAME_MAX:
                self._frame = None
                self.unknown_bytes += 1
            return None
        if byte in COMMAND_BYTES:
            return COMMAND_BYTES[byte], None
        if byte == ord("M"):
            self._frame = bytearray()
            return None
        self.unknown_bytes += 1
        return None

    def _parse_bounded(self, frame: bytearray) -> Optional[tuple[str, Optional[int]]]:
        body = bytes(frame[:-1])
        if len(body) >= 2 and body[0] in COMMAND_BYTES and COMMAND_BYTES[body[0]] != STOP \
                and body[1:].isdigit():
            steps = int(body[1:])
            if steps >= 1:
                return COMMAND_BYTES[body[0]], steps
        self.unknown_bytes += 1
        return None

    def _activate(self, meaning: str, steps: Optional[int]) -> None:
        if meaning == STOP:
            self.motion = None
            return
        self.motion = MotionState(meaning, steps)
        self._next_step_us = self._clock.now_us

    def _emit_step(self) -> None:
        delta_left, delta_right = _STEP_DELTAS[self.motion.meaning]
        self._phase_idx[0] = (self._phase_idx[0] + delta_left) % 4
        self._phase_idx[1] = (self._phase_idx[1] + delta_right) % 4
        port = FULL_STEP_SEQUENCE[self._phase_idx[0]] | (FULL_STEP_SEQUENCE[self._phase_idx[1]] << 4)
        self._chassis.apply_port_byte(port)
        self.left_steps += delta_left
        self.right_steps += delta_right
        if self.motion.steps_remaining is not None:
            self.motion.steps_remaining -= 1
            if self.motion.steps_remaining == 0:
                self.motion = None

    def _emit_feedback(self) -> None:
        for byte in f"FB {self.left_steps} {self.right_steps}\n".encode("ascii"):
            self._link.mcu_send(byte)
