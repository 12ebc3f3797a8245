import json

import pytest

from roversim.config import (
    ConfigError,
    SimConfig,
    config_from_dict,
    load_config,
    parse_listen,
    parse_sensor_script,
)


def test_defaults_are_usable():
    cfg = SimConfig()
    assert cfg.tick_us == 1000
    assert [ch.id for ch in cfg.channels] == [1, 2, 3]
    assert cfg.channels[2].kind == "compass"


def test_load_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "tick_us": 500,
        "step_rate_hz": 50,
        "channels": [
            {"id": 7, "kind": "analog", "sensor": "temperature", "gain": 8, "interval_s": 5},
            {"id": 9, "kind": "compass", "interval_s": 2},
        ],
        "sensor_script": ["0 7 20.0", "10 7 30.0"],
        "listen": "0.0.0.0:9001",
        "seed": 42,
    }))
    cfg = load_config(path)
    assert cfg.tick_us == 500
    assert cfg.channels[0].gain == 8
    assert cfg.sensor_script == [(0.0, 7, 20.0), (10.0, 7, 30.0)]
    assert cfg.listen == "0.0.0.0:9001"
    assert cfg.seed == 42


def test_error_names_offending_key():
    with pytest.raises(ConfigError, match=r"channels\[0\]\.gain"):
        config_from_dict({"channels": [
            {"id": 1, "kind": "analog", "sensor": "temperature", "gain": 3}]})
    with pytest.raises(ConfigError, match="tick_us"):
        config_from_dict({"tick_us": -5})
    with pytest.raises(ConfigError, match="bogus_key"):
        config_from_dict({"bogus_key": 1})
    with pytest.raises(ConfigError, match=r"channels\[1\]\.id"):
        config_from_dict({"channels": [{"id": 1, "kind": "compass"},
                                       {"id": "x", "kind": "compass"}]})


def test_duplicate_channel_ids_rejected():
    with pytest.raises(ConfigError, match="unique"):
        config_from_dict({"channels": [{"id": 1, "kind": "compass"},
                                       {"id": 1, "kind": "compass"}]})


def test_analog_channel_requires_known_sensor():
    with pytest.raises(ConfigError, match=r"channels\[0\]\.sensor"):
        config_from_dict({"channels": [{"id": 1, "kind": "analog"}]})


def test_sensor_script_validation():
    assert parse_sensor_script(["5 1 20.5"]) == [(5.0, 1, 20.5)]
    assert parse_sensor_script([[5, 1, 20.5]]) == [(5.0, 1, 20.5)]
    with pytest.raises(ConfigError, match=r"sensor_script\[0\]"):
        parse_sensor_script(["not a script"])
    with pytest.raises(ConfigError, match=r"sensor_script\[1\]"):
        config_from_dict({"channels": [{"id": 1, "kind": "compass"}],
                          "sensor_script": ["0 1 1.0", "0 99 1.0"]})


def test_sensor_script_file(tmp_path):
    script = tmp_path / "ramp.txt"
    script.write_text("# ramp\n0 1 20.0\n10 1 21.0\n")
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "channels": [{"id": 1, "kind": "analog", "sensor": "temperature"}],
        "sensor_script_file": "ramp.txt",
    }))
    cfg = load_config(path)
    assert cfg.sensor_script == [(0.0, 1, 20.0), (10.0, 1, 21.0)]


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(ConfigError, match="no such file"):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)


def test_parse_listen():
    assert parse_listen("127.0.0.1:8000") == ("127.0.0.1", 8000)
    assert parse_listen("0.0.0.0:0") == ("0.0.0.0", 0)
    with pytest.raises(ConfigError):
        parse_listen("127.0.0.1:port")
