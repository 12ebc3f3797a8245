import math
import random

import pytest

from roversim.hardware import Pose
from roversim.navigation import FootprintTrace, PoseEstimator, StaleFeedbackError


def test_cardinal_forward_200():
    est = PoseEstimator(step_length_m=0.001)
    pose = est.update(100_000, 200, 200, 0.0)
    assert pose.x_m == pytest.approx(0.0, abs=1e-15)
    assert pose.y_m == pytest.approx(0.200, abs=1e-12)
    assert pose.heading_deg == 0.0
    state = est.snapshot()
    assert (state.last_left, state.last_right) == (200, 200)


def test_pure_rotation_moves_nothing():
    est = PoseEstimator(step_length_m=0.001, initial_pose=Pose(0.5, 0.5, 0.0))
    pose = est.update(100_000, 100, -100, 90.0)
    assert pose.x_m == 0.5 and pose.y_m == 0.5  # exactly unchanged
    assert pose.heading_deg == 90.0


def test_oblique_heading_trig():
    est = PoseEstimator(step_length_m=0.0005, initial_pose=Pose(1.0, 1.0, 0.0))
    pose = est.update(100_000, 1000, 1000, 30.0)
    # independent trig oracle
    d = 1000 * 0.0005
    assert pose.x_m == pytest.approx(1.0 + d * math.sin(math.radians(30.0)), abs=1e-12)
    assert pose.y_m == pytest.approx(1.0 + d * math.cos(math.radians(30.0)), abs=1e-12)
    assert pose.x_m == pytest.approx(1.25, abs=1e-12)
    assert pose.y_m == pytest.approx(1.4330127018922194, abs=1e-9)


def test_stale_frame_rejected():
    est = PoseEstimator(0.001)
    est.update(200_000, 10, 10, 0.0)
    with pytest.raises(StaleFeedbackError):
        est.update(200_000, 20, 20, 0.0)
    with pytest.raises(StaleFeedbackError):
        est.update(100_000, 20, 20, 0.0)


def test_session_reset_relatches_without_integrating():
    est = PoseEstimator(0.001)
    est.update(100_000, 500, 500, 0.0)
    y = est.snapshot().pose.y_m
    est.reset_session(0, 0)  # firmware restarted its counters
    est.update(200_000, 10, 10, 0.0)
    assert est.snapshot().pose.y_m == pytest.approx(y + 0.010, abs=1e-12)


def test_rotation_neutrality_property():
    rng = random.Random(77)
    est = PoseEstimator(0.001)
    t, left, right = 0, 0, 0
    for _ in range(100):
        t += 100_000
        delta = rng.randrange(-200, 201)
        left += delta
        right -= delta
        before = est.snapshot().pose
        pose = est.update(t, left, right, rng.uniform(0, 360))
        assert pose.x_m == before.x_m and pose.y_m == before.y_m


def test_heading_never_integrated_from_wheels():
    est = PoseEstimator(0.001)
    pose = est.update(100_000, 1000, -1000, 12.3)
    assert pose.heading_deg == 12.3  # exactly the compass value


def test_trace_append_and_length():
    trace = FootprintTrace()
    trace.record(1000, Pose(0, 0, 0))
    assert len(trace) == 1


def test_trace_capacity_evicts_oldest():
    trace = FootprintTrace(capacity=3)
    for i in range(4):
        trace.record((i + 1) * 1000, Pose(float(i), 0, 0))
    points = trace.points()
    assert len(points) == 3
    assert points[0][1] == 1.0  # the (0.0, ...) point fell off


def test_trace_rejects_duplicate_timestamp():
    trace = FootprintTrace()
    trace.record(1000, Pose())
    with pytest.raises(ValueError):
        trace.record(1000, Pose())


def test_trace_limit_slices_newest():
    trace = FootprintTrace()
    for i in range(5):
        trace.record((i + 1) * 1000, Pose(float(i), 0, 0))
    assert [p[1] for p in trace.points(2)] == [3.0, 4.0]
    assert len(trace.points(99)) == 5
    with pytest.raises(ValueError):
        trace.points(0)
