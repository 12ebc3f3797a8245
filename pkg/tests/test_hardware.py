import math
import random

import pytest

from roversim.hardware import (
    ADC_MAX_CODE,
    FULL_STEP_SEQUENCE,
    AdcPga,
    AnalogSensor,
    Chassis,
    InvalidGainError,
    InvalidRegisterError,
    Pose,
    StepperChannel,
    compass_heading_tenths,
    compass_i2c_read,
    compass_pwm_ms,
    compass_pwm_to_heading,
)

FWD = FULL_STEP_SEQUENCE


def _pair_byte(left_idx, right_idx):
    return FWD[left_idx % 4] | (FWD[right_idx % 4] << 4)


def drive_pairs(chassis, n, dl, dr, start=(0, 0)):
    """Write n successive valid phase bytes advancing left by dl, right by dr per pair."""
    li, ri = start
    for _ in range(n):
        li += dl
        ri += dr
        chassis.apply_port_byte(_pair_byte(li, ri))
    return li, ri


def test_default_step_length_is_one_millimetre():
    chassis = Chassis()
    assert chassis.step_length_m == pytest.approx(0.001, abs=1e-15)


def test_single_counter_rotating_pair_is_0p9_degrees():
    chassis = Chassis()
    drive_pairs(chassis, 1, 1, -1)
    assert chassis.true_pose.heading_deg == pytest.approx(0.9, abs=1e-12)


def test_stepper_successor_predecessor_same_invalid():
    channel = StepperChannel()
    assert channel.apply(0b0010) == 1
    assert channel.apply(0b0001) == -1
    assert channel.apply(0b0001) == 0      # same pattern
    assert channel.faults == 0
    for bad in (0b0000, 0b0011, 0b0110, 0b1111, 0b1010):
        before = channel.phase
        assert channel.apply(bad) == 0
        assert channel.phase == before
    assert channel.faults == 5
    assert channel.step_count == 0


def test_forward_200_pairs_advances_200mm_north():
    chassis = Chassis()
    drive_pairs(chassis, 200, 1, 1)
    # oracle: plain step sum, 200 steps of s along North
    expected = sum(chassis.step_length_m for _ in range(200))
    assert chassis.true_pose.y_m == pytest.approx(expected, abs=1e-12)
    assert chassis.true_pose.y_m == pytest.approx(0.200, abs=1e-9)
    assert chassis.true_pose.x_m == pytest.approx(0.0, abs=1e-12)
    assert chassis.left.step_count == 200 and chassis.right.step_count == 200


def test_identical_byte_twice_changes_nothing():
    chassis = Chassis()
    byte = _pair_byte(1, 1)
    chassis.apply_port_byte(byte)
    pose = chassis.true_pose.copy()
    chassis.apply_port_byte(byte)
    assert (chassis.true_pose.x_m, chassis.true_pose.y_m) == (pose.x_m, pose.y_m)
    assert chassis.left.step_count == 1 and chassis.right.step_count == 1


def test_100_counter_rotating_pairs_turn_90_degrees():
    chassis = Chassis()
    drive_pairs(chassis, 100, 1, -1)
    assert chassis.true_pose.heading_deg == pytest.approx(90.0, abs=1e-9)
    assert chassis.true_pose.x_m == pytest.approx(0.0, abs=1e-12)
    assert chassis.true_pose.y_m == pytest.approx(0.0, abs=1e-12)


def test_single_wheel_step_pivots_about_stationary_wheel():
    chassis = Chassis()
    # right wheel sits L/2 to the robot's right; it must not move while pivoting
    l_half = chassis.wheelbase_m / 2.0
    h = math.radians(chassis.true_pose.heading_deg)
    right_before = (chassis.true_pose.x_m + l_half * math.cos(h),
                    chassis.true_pose.y_m - l_half * math.sin(h))
    li = 0
    for _ in range(40):  # left wheel only
        li += 1
        chassis.apply_port_byte(_pair_byte(li, 0))
    h = math.radians(chassis.true_pose.heading_deg)
    right_after = (chassis.true_pose.x_m + l_half * math.cos(h),
                   chassis.true_pose.y_m - l_half * math.sin(h))
    assert right_after[0] == pytest.approx(right_before[0], abs=1e-12)
    assert right_after[1] == pytest.approx(right_before[1], abs=1e-12)
    assert chassis.true_pose.heading_deg == pytest.approx(40 * 0.45, abs=1e-9)


def test_geometry_conservation_reversible_sequences():
    rng = random.Random(99)
    for _ in range(30):
        chassis = Chassis(initial_pose=Pose(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                            rng.uniform(0, 360)))
        start = chassis.true_pose.copy()
        moves = [(rng.choice([(1, 1), (-1, -1), (1, -1), (-1, 1)]), rng.randrange(1, 50))
                 for _ in range(rng.randrange(1, 8))]
        li = ri = 0
        for (dl, dr), n in moves:
            li, ri = drive_pairs(chassis, n, dl, dr, start=(li, ri))
        for (dl, dr), n in reversed(moves):
            li, ri = drive_pairs(chassis, n, -dl, -dr, start=(li, ri))
        assert chassis.left.step_count == 0 and chassis.right.step_count == 0
        assert chassis.true_pose.x_m == pytest.approx(start.x_m, abs=1e-9)
        assert chassis.true_pose.y_m == pytest.approx(start.y_m, abs=1e-9)
        err = abs((chassis.true_pose.heading_deg - start.heading_deg + 180) % 360 - 180)
        assert err < 1e-9


# heading sensor encodings


def test_pwm_zero_heading():
    assert compass_pwm_ms(0.0) == 1.0


def test_pwm_formula_values():
    assert compass_pwm_ms(180.0) == pytest.approx(1.0 + 180.0 * 0.1, abs=1e-12)  # 19.0
    assert compass_pwm_ms(359.9) == pytest.approx(1.0 + 359.9 * 0.1, abs=1e-12)  # 36.99


def test_pwm_round_trip_grid():
    for i in range(3600):
        heading = i / 10.0
        decoded = compass_pwm_to_heading(compass_pwm_ms(heading))
        assert abs(decoded - heading) < 0.05


def test_i2c_register_one():
    assert compass_i2c_read(0.0, 1) == 0x00
    assert compass_i2c_read(90.0, 1) == 90 * 256 // 360  # 64


def test_i2c_tenths_registers():
    assert compass_i2c_read(123.4, 2) == 0x04
    assert compass_i2c_read(123.4, 3) == 0xD2
    assert (compass_i2c_read(123.4, 2) << 8 | compass_i2c_read(123.4, 3)) == 1234


def test_i2c_tenths_wrap_at_north():
    assert compass_heading_tenths(359.96) == 0


def test_i2c_unknown_register():
    with pytest.raises(InvalidRegisterError):
        compass_i2c_read(10.0, 4)


# PGA + ADC


def test_adc_zero():
    assert AdcPga().convert(0.0) == 0


def test_adc_half_scale_rounds_half_up():
    adc = AdcPga(vref_v=5.0)
    adc.set_gain(1)
    assert adc.convert(2.5) == 512  # 511.5 rounds half-up


def test_adc_gain_four():
    adc = AdcPga(vref_v=5.0)
    adc.set_gain(4)
    assert adc.convert(1.0) == 818  # 818.4 rounds down


def test_adc_clamps_out_of_range():
    adc = AdcPga()
    adc.set_gain(8)
    assert adc.convert(10.0) == ADC_MAX_CODE
    assert adc.convert(-1.0) == 0


def test_invalid_gain_rejected():
    with pytest.raises(InvalidGainError):
        AdcPga().set_gain(3)


def test_adc_monotone_and_half_lsb():
    adc = AdcPga(vref_v=5.0)
    for gain in (1, 2, 4, 8):
        adc.set_gain(gain)
        previous = -1
        for i in range(2000):
            v = i * 5.0 / 1999
            code = adc.convert(v)
            assert code >= previous
            previous = code
            ideal = v * gain / 5.0 * ADC_MAX_CODE
            if 0 <= ideal <= ADC_MAX_CODE:
                assert abs(code - ideal) <= 0.5


# analog sensors


def test_temperature_transfer_10mv_per_degree():
    sensor = AnalogSensor("temperature")
    assert sensor.transfer_volts(25.0) == pytest.approx(0.25, abs=1e-15)
    assert sensor.transfer_volts(0.0) == 0.0


def test_gas_transfer_half_scale_at_200ppm():
    sensor = AnalogSensor("gas", vref_v=5.0)
    assert sensor.transfer_volts(200.0) == pytest.approx(2.5, abs=1e-12)


def test_transfer_clamped_to_vref():
    sensor = AnalogSensor("temperature", vref_v=5.0)
    assert sensor.transfer_volts(10_000.0) == 5.0
    assert sensor.transfer_volts(-40.0) == 0.0


def test_noise_is_seeded_and_optional():
    sensor = AnalogSensor("temperature", noise_sd_v=0.01)
    sensor.quantity = 25.0
    assert sensor.read_volts(None) == sensor.transfer_volts(25.0)  # no RNG, no noise
    a = sensor.read_volts(random.Random(7))
    b = sensor.read_volts(random.Random(7))
    assert a == b
    assert a != sensor.transfer_volts(25.0)


def test_unknown_sensor_kind_rejected():
    with pytest.raises(ValueError):
        AnalogSensor("pressure")
