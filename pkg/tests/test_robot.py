import pytest

from roversim.config import ChannelConfig, SimConfig
from roversim.robot import RobotSim


def test_drive_forward_200_end_to_end(tmp_path):
    robot = RobotSim(data_dir=tmp_path)
    robot.drive("forward", 200)
    robot.run_until_idle(30)
    pose = robot.pose_snapshot()
    assert pose["y_m"] == pytest.approx(0.200, abs=1e-9)
    assert pose["x_m"] == pytest.approx(0.0, abs=1e-9)
    truth = robot.true_pose_snapshot()
    assert pose["y_m"] == pytest.approx(truth["y_m"], abs=1e-9)
    robot.close()


def test_turn_right_then_forward_heads_east():
    robot = RobotSim()
    robot.drive("right", 100)
    robot.run_until_idle(30)
    assert robot.pose_snapshot()["heading_deg"] == pytest.approx(90.0, abs=1e-9)
    robot.drive("forward", 500)
    robot.run_until_idle(30)
    pose = robot.pose_snapshot()
    assert pose["x_m"] == pytest.approx(0.500, abs=1e-9)
    assert pose["y_m"] == pytest.approx(0.0, abs=1e-9)
    robot.close()


def test_stop_preempts_unbounded_motion():
    robot = RobotSim()
    robot.drive("forward")
    robot.run_until_s(0.5)
    robot.drive("stop")
    robot.run_until_s(0.6)
    y = robot.pose_snapshot()["y_m"]
    robot.run_until_s(2.0)
    assert robot.pose_snapshot()["y_m"] == y
    robot.close()


def test_drive_validation():
    robot = RobotSim()
    with pytest.raises(ValueError):
        robot.drive("sideways")
    with pytest.raises(ValueError):
        robot.drive("forward", 0)
    with pytest.raises(ValueError):
        robot.drive("stop", 5)
    robot.close()


def test_sample_pipeline_persists_calibrated_values(tmp_path):
    cfg = SimConfig()
    cfg.sensor_script = [(0.0, 1, 25.0)]
    robot = RobotSim(cfg, data_dir=tmp_path)
    robot.run_until_s(1.0)
    records = robot.store.records(1)
    assert len(records) == 1
    _, channel, gain, raw, value = records[0]
    assert (channel, gain, raw) == (1, 4, 205)
    assert value == pytest.approx(205 / 1023 * 5.0 / 4 / 0.01, abs=1e-12)
    robot.close()


def test_persistence_completeness(tmp_path):
    # every valid decoded frame lands in the store, nothing else
    cfg = SimConfig(channels=[
        ChannelConfig(id=1, kind="analog", sensor="temperature", gain=2, interval_s=0.5),
        ChannelConfig(id=2, kind="compass", interval_s=0.5),
    ])
    robot = RobotSim(cfg, data_dir=tmp_path)
    robot.run_until_s(20.0)
    assert robot.decoder.frames_ok > 10
    assert robot.decoder.dropped == 0
    assert robot.store.persisted == robot.decoder.frames_ok
    on_disk = sum(len(robot.store.records(ch)) for ch in (1, 2))
    assert on_disk == robot.store.persisted
    robot.close()


def test_events_fire_at_feedback_cadence_and_samples():
    cfg = SimConfig()
    cfg.sensor_script = [(0.0, 1, 25.0)]
    robot = RobotSim(cfg)
    events = []
    robot.add_listener(events.append)
    robot.run_until_s(1.0)
    pose_events = [e for e in events if e["type"] == "pose"]
    sample_events = [e for e in events if e["type"] == "sample"]
    assert len(pose_events) == 10  # one per 100 ms feedback frame
    assert len(sample_events) == 3  # one per channel's first acquisition
    times = [e["t_us"] for e in events]
    assert times == sorted(times)
    assert "1" in sample_events[-1]["samples"] or "1" in sample_events[0]["samples"]
    robot.close()


def test_sensor_script_changes_apply_on_time(tmp_path):
    cfg = SimConfig(channels=[
        ChannelConfig(id=1, kind="analog", sensor="temperature", gain=1, interval_s=2.0)])
    cfg.sensor_script = [(0.0, 1, 10.0), (3.0, 1, 40.0)]
    robot = RobotSim(cfg, data_dir=tmp_path)
    robot.run_until_s(5.0)
    values = [v for _, v in robot.store.query(1)]
    assert len(values) >= 2
    assert values[0] == pytest.approx(10.0, abs=0.5)
    assert values[-1] == pytest.approx(40.0, abs=0.5)
    robot.close()


def test_storage_failure_does_not_kill_acquisition(tmp_path, monkeypatch):
    cfg = SimConfig()
    cfg.sensor_script = [(0.0, 1, 25.0)]
    robot = RobotSim(cfg, data_dir=tmp_path)

    def boom(sample):
        raise OSError("disk full")

    monkeypatch.setattr(robot.store, "persist", boom)
    robot.run_until_s(1.0)
    assert robot.storage_errors == 3
    assert len(robot.latest_samples) == 3  # monitoring kept flowing
    robot.close()


def test_estimated_tracks_truth_every_frame():
    robot = RobotSim()
    errors = []

    def watch(event):
        if event["type"] != "pose":
            return
        truth = robot.chassis.true_pose
        pose = event["pose"]
        errors.append(max(abs(pose["x_m"] - truth.x_m), abs(pose["y_m"] - truth.y_m)))

    robot.add_listener(watch)
    robot.drive("forward", 300)
    robot.run_until_idle(30)
    robot.drive("right", 100)
    robot.run_until_idle(30)
    robot.drive("forward", 300)
    robot.run_until_idle(30)
    assert errors and max(errors) < 1e-9
    robot.close()


def test_identical_runs_produce_identical_bus_logs():
    def run():
        cfg = SimConfig(seed=7)
        cfg.sensor_script = [(0.0, 1, 22.0), (2.0, 1, 28.0)]
        robot = RobotSim(cfg)
        robot.drive("forward", 150)
        robot.run_until_s(3.0)
        robot.drive("right", 50)
        robot.run_until_s(5.0)
        lines = list(robot.buslog.lines)
        robot.close()
        return lines

    first, second = run(), run()
    assert first == second and len(first) > 100


def test_footprint_records_path():
    robot = RobotSim()
    robot.drive("forward", 100)
    robot.run_until_idle(30)
    points = robot.footprint()
    assert len(points) >= 10
    ys = [p[2] for p in points]
    assert ys == sorted(ys)
    assert robot.footprint(limit=1)[0] == points[-1]
    robot.close()


def test_channel_info_lists_config():
    robot = RobotSim()
    info = robot.channel_info()
    assert [c["id"] for c in info] == [1, 2, 3]
    assert info[0]["unit"] == "°C"
    assert info[2] == {"id": 3, "kind": "compass", "sensor": None, "unit": "deg",
                       "gain": None, "interval_s": 10.0}
    robot.close()
