"""Web control and telemetry service.

REST endpoints for drive, pose, footprint and processed data, one SSE stream
for live telemetry, and the cockpit static assets at ``/`` so a plain browser
is all an operator needs. Exactly one writer reaches the serial command
channel; every entry point serializes on the runtime lock.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, model_validator

from .config import SimConfig
from .daps import AGGREGATE_STATS, FilterSpec, aggregate, filter_series
from .robot import RobotSim

_BUILTIN_STATIC = Path(__file__).parent / "static"


class DriveRequest(BaseModel):
    direction: Literal["forward", "backward", "left", "right", "stop"]
    steps: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _stop_carries_no_steps(self):
        if self.direction == "stop" and self.steps is not None:
            raise ValueError("stop never carries a step count")
        return self


class StreamClient:
    def __init__(self, backlog: int):
        self.queue: queue.Queue = queue.Queue(maxsize=backlog)
        self.overflowed = False


class TelemetryHub:
    """Thread-safe broadcast; a slow consumer overflows and gets disconnected."""

    def __init__(self, backlog: int = 1000):
        self._backlog = backlog
        self._clients: list[StreamClient] = []
        self._lock = threading.Lock()

    def subscribe(self) -> StreamClient:
        client = StreamClient(self._backlog)
        with self._lock:
            self._clients.append(client)
        return client

    def unsubscribe(self, client: StreamClient) -> None:
        with self._lock:
            if client in self._clients:
                self._clients.remove(client)

    def publish(self, event: dict) -> None:
        with self._lock:
            clients = list(self._clients)
        for client in clients:
            try:
                client.queue.put_nowait(event)
            except queue.Full:
                client.overflowed = True


class SimRuntime:
    """Owns the robot and its stepping thread.

    speed "real" paces simulated time to wall time, "max" runs flat out,
    "manual" never steps on its own (tests drive time explicitly).
    """

    REAL_CHUNK_US = 10_000
    MAX_CHUNK_US = 100_000

    def __init__(self, cfg: Optional[SimConfig] = None, speed: str = "real",
                 data_dir=None, bus_log_path=None, robot: Optional[RobotSim] = None):
        if speed not in ("real", "max", "manual"):
            raise ValueError(f"unknown speed {speed!r}")
        self.cfg = cfg or SimConfig()
        self.speed = speed
        self.robot = robot or RobotSim(self.cfg, data_dir=data_dir, bus_log_path=bus_log_path)
        self.hub = TelemetryHub(self.cfg.stream_backlog)
        self.robot.add_listener(self.hub.publish)
        self.lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self.running = False

    def start(self) -> None:
        self.running = True
        if self.speed == "manual":
            return
        self._thread = threading.Thread(target=self._run, name="simstep", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        tick_us = self.robot.kernel.clock.tick_us
        chunk_us = self.REAL_CHUNK_US if self.speed == "real" else self.MAX_CHUNK_US
        ticks = max(chunk_us // tick_us, 1)
        wall_start = time.monotonic()
        sim_start = self.robot.now_us
        while not self._stop.is_set():
            with self.lock:
                self.robot.step_ticks(ticks)
            if self.speed == "real":
                ahead = (self.robot.now_us - sim_start) / 1e6 - (time.monotonic() - wall_start)
                if ahead > 0:
                    time.sleep(ahead)
            else:
                time.sleep(0)  # let API handlers grab the lock

    def stop(self) -> None:
        self.running = False
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def close(self) -> None:
        self.stop()
        self.robot.close()

    def step_for_s(self, seconds: float) -> None:
        """Manual-mode helper: advance simulated time by ``seconds``."""
        with self.lock:
            self.robot.run_until_us(self.robot.now_us + round(seconds * 1_000_000))

    def drive(self, direction: str, steps: Optional[int]) -> bytes:
        with self.lock:
            return self.robot.drive(direction, steps)


def sse_event_stream(runtime: SimRuntime, keepalive_s: float = 5.0):
    """Server-sent-events generator: one ``data:`` block per telemetry event.

    A consumer that falls more than the backlog behind gets a final
    ``event: overflow`` block and is disconnected."""
    client = runtime.hub.subscribe()
    try:
        yield ": connected\n\n"
        while True:
            if client.overflowed:
                yield "event: overflow\ndata: {\"reason\": \"backlog exceeded\"}\n\n"
                return
            try:
                event = client.queue.get(timeout=keepalive_s)
            except queue.Empty:
                yield ": keepalive\n\n"
                continue
            yield f"data: {json.dumps(event)}\n\n"
    finally:
        runtime.hub.unsubscribe(client)


def create_app(runtime: SimRuntime, static_dir=None) -> FastAPI:
    app = FastAPI(title="roversim", version="0.1.0")
    robot = runtime.robot

    @app.post("/api/drive")
    def drive(request: DriveRequest):
        if not runtime.running:
            raise HTTPException(status_code=503, detail="simulator not running")
        wire = runtime.drive(request.direction, request.steps)
        return {"status": "accepted", "wire": wire.decode("ascii")}

    @app.get("/api/pose")
    def pose():
        with runtime.lock:
            return robot.pose_snapshot()

    @app.get("/api/footprint")
    def footprint(limit: int = Query(default=1000, ge=1)):
        with runtime.lock:
            points = robot.footprint(limit)
        return {"points": [list(p) for p in points]}

    @app.get("/api/channels")
    def channels():
        return {"channels": robot.channel_info()}

    @app.get("/api/data/{channel}")
    def data(channel: int,
             from_us: Optional[int] = Query(default=None, alias="from"),
             to_us: Optional[int] = Query(default=None, alias="to"),
             filter: Optional[str] = Query(default=None),
             window: int = Query(default=1, ge=1),
             bucket: Optional[float] = Query(default=None),
             stat: Optional[str] = Query(default=None)):
        cfg_channel = robot.daq.scheduler.channels.get(channel)
        if cfg_channel is None:
            raise HTTPException(status_code=404, detail=f"unknown channel {channel}")
        if robot.store is None:
            raise HTTPException(status_code=503, detail="no data store configured")
        if from_us is not None and to_us is not None and from_us > to_us:
            raise HTTPException(status_code=400, detail="from must be <= to")
        if bucket is not None and bucket <= 0:
            raise HTTPException(status_code=400, detail="bucket must be > 0")
        if stat is not None and stat not in AGGREGATE_STATS:
            raise HTTPException(status_code=400, detail=f"stat must be one of {AGGREGATE_STATS}")
        if stat is not None and bucket is None:
            raise HTTPException(status_code=400, detail="stat requires bucket")
        with runtime.lock:
            points = robot.store.query(channel, from_us, to_us)
        if filter is not None:
            try:
                points = filter_series(points, FilterSpec(filter, window))
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
        body = {"channel": channel, "unit": next(
            (c["unit"] for c in robot.channel_info() if c["id"] == channel), "")}
        if bucket is not None:
            rows = aggregate(points, bucket, stat or "mean")
            body["rows"] = [list(r) for r in rows]
        else:
            body["points"] = [list(p) for p in points]
        return body

    @app.get("/api/stream")
    def stream():
        return StreamingResponse(sse_event_stream(runtime), media_type="text/event-stream")

    assets = Path(static_dir) if static_dir else _BUILTIN_STATIC
    if assets.is_dir():
        app.mount("/", StaticFiles(directory=assets, html=True), name="cockpit")
    return app
