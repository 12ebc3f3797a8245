"""Operator entry points.

    roversim serve    --config cfg.json [--listen host:port] [--seed N] [--speed real|max]
    roversim scenario script.txt [--config cfg.json] [--seed N] [--bus-log out.log]
    roversim replay   some.log [--config cfg.json]

Scenario scripts are timed directives, one per line:

    0    drive forward 1000
    12   drive right 100
    14   drive stop
    15   assert pose 0.0 1.0 90.0 tol 1e-6

Replay re-derives frames and feedback from a bus traffic log (or re-checks a
sample store log) and reports every invariant violation with its line number.
"""

from __future__ import annotations

import argparse
import math
import os
import socket
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import ConfigError, SimConfig, load_config, parse_listen
from .daps import FrameDecoder
from .robot import DIRECTION_TO_MEANING, RobotSim

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_BAD_CONFIG = 2
EXIT_PORT_IN_USE = 3

LISTEN_ENV = "ROVERSIM_LISTEN"


class ScenarioParseError(ValueError):
    pass


@dataclass
class ScenarioStep:
    t_us: int
    kind: str        # "drive" | "assert_pose"
    args: tuple
    line_no: int
    text: str


@dataclass
class ScenarioReport:
    lines: list[str] = field(default_factory=list)
    assertions: int = 0
    failures: int = 0

    def ok(self) -> bool:
        return self.failures == 0


def parse_scenario(text: str) -> list[ScenarioStep]:
    steps = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            t_us = round(float(parts[0]) * 1_000_000)
        except ValueError:
            raise ScenarioParseError(f"line {line_no}: expected a time, got {parts[0]!r}") from None
        if t_us < 0:
            raise ScenarioParseError(f"line {line_no}: time must be >= 0")
        directive = parts[1] if len(parts) > 1 else ""
        if directive == "drive":
            if len(parts) not in (3, 4) or parts[2] not in DIRECTION_TO_MEANING:
                raise ScenarioParseError(
                    f"line {line_no}: expected 'drive <forward|backward|left|right|stop> [steps]'")
            steps_arg: Optional[int] = None
            if len(parts) == 4:
                if not parts[3].isdigit() or int(parts[3]) < 1:
                    raise ScenarioParseError(f"line {line_no}: steps must be a positive integer")
                steps_arg = int(parts[3])
            steps.append(ScenarioStep(t_us, "drive", (parts[2], steps_arg), line_no, line))
        elif directive == "assert" and len(parts) == 8 and parts[2] == "pose" and parts[6] == "tol":
            try:
                x, y, heading, tol = (float(parts[3]), float(parts[4]),
                                      float(parts[5]), float(parts[7]))
            except ValueError:
                raise ScenarioParseError(f"line {line_no}: non-numeric pose assertion") from None
            steps.append(ScenarioStep(t_us, "assert_pose", (x, y, heading, tol), line_no, line))
        else:
            raise ScenarioParseError(f"line {line_no}: unknown directive {line!r}")
    steps.sort(key=lambda s: s.t_us)  # stable: equal times keep file order
    return steps


def heading_error_deg(a: float, b: float) -> float:
    return abs((a - b + 180.0) % 360.0 - 180.0)


def run_scenario(cfg: SimConfig, text: str, data_dir=None, bus_log_path=None) -> ScenarioReport:
    steps = parse_scenario(text)
    report = ScenarioReport()
    robot = RobotSim(cfg, data_dir=data_dir, bus_log_path=bus_log_path)
    try:
        for step in steps:
            robot.run_until_us(step.t_us)
            if step.kind == "drive":
                robot.drive(*step.args)
            else:
                x, y, heading, tol = step.args
                pose = robot.pose_snapshot()
                dx = abs(pose["x_m"] - x)
                dy = abs(pose["y_m"] - y)
                dh = heading_error_deg(pose["heading_deg"], heading)
                report.assertions += 1
                if dx <= tol and dy <= tol and dh <= max(tol, 0.05):
                    report.lines.append(f"PASS line {step.line_no}: {step.text}")
                else:
                    report.failures += 1
                    report.lines.append(
                        f"FAIL line {step.line_no}: {step.text} -> pose "
                        f"({pose['x_m']:.9f}, {pose['y_m']:.9f}, {pose['heading_deg']:.4f})")
        if not robot.idle():
            robot.run_until_idle(max_s=300.0)  # let trailing commands finish
    finally:
        robot.close()
    report.lines.append(
        f"{report.assertions - report.failures}/{report.assertions} assertions passed")
    return report


@dataclass
class ReplayReport:
    lines_total: int = 0
    malformed: list[tuple[int, str]] = field(default_factory=list)
    violations: list[tuple[int, str]] = field(default_factory=list)
    frames_ok: int = 0
    feedback_frames: int = 0
    bytes_per_stream: dict = field(default_factory=dict)

    def ok(self) -> bool:
        return not self.malformed and not self.violations

    def summary(self) -> str:
        out = [f"{self.lines_total} lines, "
               f"{self.frames_ok} sample frames, {self.feedback_frames} feedback frames"]
        for stream, count in sorted(self.bytes_per_stream.items()):
            out.append(f"  {stream}: {count} bytes")
        for line_no, message in self.malformed:
            out.append(f"  malformed line {line_no}: {message}")
        for line_no, message in self.violations:
            out.append(f"  violation line {line_no}: {message}")
        out.append("OK" if self.ok() else f"{len(self.malformed) + len(self.violations)} problem(s)")
        return "\n".join(out)


def replay_bus_log(text: str) -> ReplayReport:
    report = ReplayReport()
    decoder = FrameDecoder()
    fb_line = bytearray()
    fb_line_start = 0
    last_t = -1
    checksum_seen = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        report.lines_total += 1
        parts = line.split()
        if len(parts) != 4:
            report.malformed.append((line_no, f"expected 4 fields, got {len(parts)}"))
            continue
        try:
            t_us = int(parts[0])
            byte = int(parts[3], 16)
        except ValueError:
            report.malformed.append((line_no, "bad timestamp or byte"))
            continue
        if not (0 <= byte <= 0xFF):
            report.malformed.append((line_no, f"byte {parts[3]} out of range"))
            continue
        if t_us < last_t:
            report.violations.append((line_no, f"timestamp regression {t_us} < {last_t}"))
        last_t = max(last_t, t_us)
        stream = f"{parts[1]} {parts[2]}"
        report.bytes_per_stream[stream] = report.bytes_per_stream.get(stream, 0) + 1
        if parts[1].startswith("par"):
            decoder.feed(byte)
            if decoder.checksum_failures + decoder.field_failures > checksum_seen:
                checksum_seen = decoder.checksum_failures + decoder.field_failures
                report.violations.append((line_no, "sample frame failed checksum/decode"))
        elif parts[2] == "m2h":
            if byte == ord("\n"):
                if not _valid_fb(bytes(fb_line)):
                    report.violations.append((fb_line_start, f"bad feedback line {bytes(fb_line)!r}"))
                else:
                    report.feedback_frames += 1
                fb_line.clear()
            else:
                if not fb_line:
                    fb_line_start = line_no
                fb_line.append(byte)
    report.frames_ok = decoder.frames_ok
    return report


def _valid_fb(line: bytes) -> bool:
    parts = line.split()
    if len(parts) != 3 or parts[0] != b"FB":
        return False
    try:
        int(parts[1]), int(parts[2])
        return True
    except ValueError:
        return False


def replay_sample_log(text: str, cfg: Optional[SimConfig] = None) -> ReplayReport:
    from .daps import calibrate
    from .daq_fw import Sample

    report = ReplayReport()
    channels = {ch.id: ch for ch in cfg.channels} if cfg else {}
    last_t: dict[int, int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        report.lines_total += 1
        parts = line.split()
        if len(parts) != 5:
            report.malformed.append((line_no, f"expected 5 fields, got {len(parts)}"))
            continue
        try:
            t_us, channel, gain, raw_code = (int(parts[0]), int(parts[1]),
                                             int(parts[2]), int(parts[3]))
            value = float(parts[4])
        except ValueError:
            report.malformed.append((line_no, "non-numeric field"))
            continue
        if channel in last_t and t_us <= last_t[channel]:
            report.violations.append((line_no, f"channel {channel} timestamp not increasing"))
        last_t[channel] = t_us
        limit = 3599 if gain == 0 else 1023
        if not (0 <= raw_code <= limit):
            report.violations.append((line_no, f"raw {raw_code} out of range"))
        if channel in channels:
            sample = Sample(channel, t_us, None if gain == 0 else gain, raw_code)
            expect, _ = calibrate(sample, channels[channel], cfg.vref_v)
            if not math.isclose(expect, value, rel_tol=1e-12, abs_tol=1e-12):
                report.violations.append((line_no, f"value {value} != recomputed {expect}"))
        report.frames_ok += 1
    return report


def sniff_log_kind(text: str) -> str:
    for raw in text.splitlines():
        line = raw.strip()
        if line:
            return "bus" if len(line.split()) == 4 else "sample"
    return "empty"


def _load_config_arg(path: Optional[str]) -> SimConfig:
    return load_config(path) if path else SimConfig()


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SimRuntime, create_app

    try:
        cfg = _load_config_arg(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        listen = args.listen or os.environ.get(LISTEN_ENV) or cfg.listen
        host, port = parse_listen(listen)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
        port = probe.getsockname()[1]  # resolves port 0
    except OSError as exc:
        print(f"cannot listen on {host}:{port}: {exc}", file=sys.stderr)
        return EXIT_PORT_IN_USE
    finally:
        probe.close()

    runtime = SimRuntime(cfg, speed=args.speed, data_dir=cfg.data_dir,
                         bus_log_path=args.bus_log)
    app = create_app(runtime, static_dir=cfg.static_dir)
    runtime.start()
    print(f"serving on http://{host}:{port}/ (speed={args.speed})")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        runtime.close()  # flushes the store and the bus log
    return EXIT_OK


def cmd_scenario(args) -> int:
    try:
        cfg = _load_config_arg(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        text = Path(args.script).read_text()
    except OSError as exc:
        print(f"cannot read script: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        report = run_scenario(cfg, text, data_dir=args.data_dir, bus_log_path=args.bus_log)
    except ScenarioParseError as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    for line in report.lines:
        print(line)
    return EXIT_OK if report.ok() else EXIT_FAILURES


def cmd_replay(args) -> int:
    try:
        text = Path(args.log).read_text()
    except OSError as exc:
        print(f"cannot read log: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    kind = sniff_log_kind(text)
    if kind == "empty":
        print("empty log: nothing to replay")
        return EXIT_OK
    if kind == "bus":
        report = replay_bus_log(text)
    else:
        cfg = None
        if args.config:
            try:
                cfg = load_config(args.config)
            except ConfigError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_BAD_CONFIG
        report = replay_sample_log(text, cfg)
    print(report.summary())
    return EXIT_OK if report.ok() else EXIT_FAILURES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roversim",
                                     description="emulated teleoperable sensor robot")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the simulator behind the web service")
    serve.add_argument("--config", help="JSON config file")
    serve.add_argument("--listen", help=f"host:port (overrides config and ${LISTEN_ENV})")
    serve.add_argument("--seed", type=int, help="noise reproducibility seed")
    serve.add_argument("--speed", choices=("real", "max"), default="real")
    serve.add_argument("--bus-log", help="stream the bus traffic log to this file")
    serve.set_defaults(func=cmd_serve)

    scenario = sub.add_parser("scenario", help="run a timed command/assertion script headless")
    scenario.add_argument("script")
    scenario.add_argument("--config", help="JSON config file")
    scenario.add_argument("--seed", type=int)
    scenario.add_argument("--data-dir", help="persist samples under this directory")
    scenario.add_argument("--bus-log", help="write the bus traffic log to this file")
    scenario.set_defaults(func=cmd_scenario)

    replay = sub.add_parser("replay", help="re-check a bus traffic or sample store log")
    replay.add_argument("log")
    replay.add_argument("--config", help="recompute sample values against this config")
    replay.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
