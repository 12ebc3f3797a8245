"""Ground-truth hardware models.

Differential stepper chassis behind one 8-bit driver port, heading sensor
with pulse-width and register read modes, a programmable-gain amplifier in
front of a 10-bit ADC, and the analog sensor transfer functions.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Optional

# Full-step drive: one winding energized at a time.
FULL_STEP_SEQUENCE = (0b0001, 0b0010, 0b0100, 0b1000)

# Defaults give a 1.000 mm rim arc per step and a 0.9 degree heading change
# per counter-rotating step pair, so a 90 degree turn is exactly 100 pairs.
DEFAULT_STEPS_PER_REV = 200
DEFAULT_WHEEL_DIAMETER_M = 0.2 / math.pi
DEFAULT_WHEELBASE_M = 0.4 / math.pi

ADC_BITS = 10
ADC_MAX_CODE = (1 << ADC_BITS) - 1
ALLOWED_GAINS = (1, 2, 4, 8)
# Gain changes need one tick before the next conversion is valid; the
# acquisition firmware enforces the wait.
GAIN_SETTLE_TICKS = 1

TEMP_VOLTS_PER_C = 0.01        # 10 mV per degree C
GAS_HALF_SCALE_PPM = 200.0     # concentration producing vref/2


class InvalidGainError(ValueError):
    """Requested amplifier gain outside the supported set."""


class InvalidRegisterError(ValueError):
    """Heading sensor register id outside the documented map."""


def round_half_up(x: float) -> int:
    """Fixed rounding rule for quantizers: .5 always rounds away from zero-ward floor."""
    return math.floor(x + 0.5)


@dataclass
class Pose:
    """Planar pose: east/north displacement plus heading clockwise from North."""

    x_m: float = 0.0
    y_m: float = 0.0
    heading_deg: float = 0.0

    def copy(self) -> "Pose":
        return Pose(self.x_m, self.y_m, self.heading_deg)


class StepperChannel:
    """One 4-phase winding driven full-step.

    A written pattern that is the successor of the current phase advances one
    step, the predecessor retreats one, the same pattern does nothing, and any
    other pattern is ignored with a fault count (mirrors hardware silently
    ignoring bad phase sequences).
    """

    def __init__(self):
        self.phase = FULL_STEP_SEQUENCE[0]
        self.step_count = 0
        self.faults = 0

    def apply(self, pattern: int) -> int:
        if pattern == self.phase:
            return 0
        idx = FULL_STEP_SEQUENCE.index(self.phase)
        if pattern == FULL_STEP_SEQUENCE[(idx + 1) % 4]:
            delta = 1
        elif pattern == FULL_STEP_SEQUENCE[(idx - 1) % 4]:
            delta = -1
        else:
            self.faults += 1
            return 0
        self.phase = pattern
        self.step_count += delta
        return delta


class Chassis:
    """Two-wheel stepper chassis with exact arc kinematics per port write.

    The low nibble of a port byte drives the left wheel, the high nibble the
    right wheel. Both nibbles of one write are treated as simultaneous, so a
    write is integrated as a single straight / spin / pivot quantum.
    """

    def __init__(self, wheel_diameter_m: float = DEFAULT_WHEEL_DIAMETER_M,
                 steps_per_rev: int = DEFAULT_STEPS_PER_REV,
                 wheelbase_m: float = DEFAULT_WHEELBASE_M,
                 initial_pose: Optional[Pose] = None):
        if wheel_diameter_m <= 0 or wheelbase_m <= 0 or steps_per_rev <= 0:
            raise ValueError("chassis geometry must be positive")
        self.wheel_diameter_m = wheel_diameter_m
        self.steps_per_rev = steps_per_rev
        self.wheelbase_m = wheelbase_m
        self.true_pose = initial_pose.copy() if initial_pose else Pose()
        self.true_pose.heading_deg %= 360.0
        self.left = StepperChannel()
        self.right = StepperChannel()

    @property
    def step_length_m(self) -> float:
        return math.pi * self.wheel_diameter_m / self.steps_per_rev

    @property
    def fault_count(self) -> int:
        return self.left.faults + self.right.faults

    def apply_port_byte(self, port_byte: int) -> tuple[int, int]:
        delta_left = self.left.apply(port_byte & 0x0F)
        delta_right = self.right.apply((port_byte >> 4) & 0x0F)
        if delta_left or delta_right:
            self._integrate(delta_left, delta_right)
        return delta_left, delta_right

    def _integrate(self, left_steps: int, right_steps: int) -> None:
        s = self.step_length_m
        dl = left_steps * s
        dr = right_steps * s
        pose = self.true_pose
        h = math.radians(pose.heading_deg)
        if dl == dr:
            pose.x_m += dl * math.sin(h)
            pose.y_m += dl * math.cos(h)
            return
        dh = (dl - dr) / self.wheelbase_m  # radians, clockwise positive
        if dl == -dr:
            pose.heading_deg = (pose.heading_deg + math.degrees(dh)) % 360.0
            return
        # Arc about the instantaneous centre, (L/2)(dl+dr)/(dl-dr) to the
        # robot's right; covers single-wheel pivots (centre = stationary wheel).
        r_icc = (self.wheelbase_m / 2.0) * (dl + dr) / (dl - dr)
        icc_x = pose.x_m + r_icc * math.cos(h)
        icc_y = pose.y_m - r_icc * math.sin(h)
        vx = pose.x_m - icc_x
        vy = pose.y_m - icc_y
        cos_dh = math.cos(dh)
        sin_dh = math.sin(dh)
        pose.x_m = icc_x + vx * cos_dh + vy * sin_dh
        pose.y_m = icc_y - vx * sin_dh + vy * cos_dh
        pose.heading_deg = (pose.heading_deg + math.degrees(dh)) % 360.0

    # Heading sensor mounted on the chassis
    def compass_pwm_ms(self) -> float:
        return compass_pwm_ms(self.true_pose.heading_deg)

    def compass_register(self, register: int) -> int:
        return compass_i2c_read(self.true_pose.heading_deg, register)


def compass_pwm_ms(heading_deg: float) -> float:
    """Pulse width in ms: 1.0 at North plus 0.1 per degree."""
    return 1.0 + heading_deg * 0.1


def compass_pwm_to_heading(width_ms: float) -> float:
    return (width_ms - 1.0) / 0.1


def compass_heading_tenths(heading_deg: float) -> int:
    """Heading in tenths of a degree, wrapped to [0, 3599]."""
    return round_half_up((heading_deg % 360.0) * 10.0) % 3600


def compass_i2c_read(heading_deg: float, register: int) -> int:
    """Register map: 1 = 0..255 bearing byte, 2/3 = high/low byte of tenths."""
    if register == 1:
        return math.floor((heading_deg % 360.0) * 256.0 / 360.0) & 0xFF
    if register == 2:
        return compass_heading_tenths(heading_deg) >> 8
    if register == 3:
        return compass_heading_tenths(heading_deg) & 0xFF
    raise InvalidRegisterError(f"unknown compass register {register}")


class AdcPga:
    """10-bit converter behind a programmable-gain amplifier (gains 1/2/4/8)."""

    def __init__(self, vref_v: float = 5.0):
        if vref_v <= 0:
            raise ValueError("vref_v must be positive")
        self.vref_v = vref_v
        self.gain = 1

    def set_gain(self, gain: int) -> None:
        if gain not in ALLOWED_GAINS:
            raise InvalidGainError(f"unsupported gain {gain} (allowed: {ALLOWED_GAINS})")
        self.gain = gain

    def convert(self, v_in: float) -> int:
        """code = clamp(round_half_up(v_in * gain / vref * 1023), 0, 1023)"""
        code = round_half_up(v_in * self.gain / self.vref_v * ADC_MAX_CODE)
        return min(max(code, 0), ADC_MAX_CODE)


class AnalogSensor:
    """Analog transducer: physical quantity in, clamped voltage out.

    Default transfers: temperature 10 mV/C; gas vref * c / (c + 200 ppm).
    Optional Gaussian voltage noise is drawn from the RNG passed at read time
    so one seeded generator can own all randomness in a run.
    """

    KINDS = ("temperature", "gas")

    def __init__(self, kind: str, vref_v: float = 5.0, noise_sd_v: float = 0.0,
                 transfer: Optional[Callable[[float], float]] = None):
        if transfer is None and kind not in self.KINDS:
            raise ValueError(f"unknown sensor kind {kind!r}")
        self.kind = kind
        self.vref_v = vref_v
        self.noise_sd_v = noise_sd_v
        self._transfer = transfer
        self.quantity = 0.0

    def transfer_volts(self, quantity: float) -> float:
        if self._transfer is not None:
            v = self._transfer(quantity)
        elif self.kind == "temperature":
            v = TEMP_VOLTS_PER_C * quantity
        else:
            c = max(quantity, 0.0)
            v = self.vref_v * c / (c + GAS_HALF_SCALE_PPM)
        return min(max(v, 0.0), self.vref_v)

    def read_volts(self, rng: Optional[random.Random] = None) -> float:
        v = self.transfer_volts(self.quantity)
        if self.noise_sd_v and rng is not None:
            v += rng.gauss(0.0, self.noise_sd_v)
        return min(max(v, 0.0), self.vref_v)
