"""Deterministic discrete-tick simulation kernel and the virtual buses.

Time is integer microseconds advanced in fixed ticks. Devices are polled once
per visited tick boundary in registration order; one-shot events fire at the
first boundary at or after their due time, ordered by (due time, registration
order). A device may publish its next interesting time so long idle stretches
are skipped without changing observable behaviour.
"""

from __future__ import annotations

import heapq
from collections import deque
from typing import Callable, Optional


class SerialOverflowError(RuntimeError):
    """A serial queue exceeded its capacity; the producer is running away."""


class BusBusyError(RuntimeError):
    """Parallel write attempted while the previous transfer is still pending."""


class BusNotReadyError(RuntimeError):
    """Parallel read attempted with no fresh byte strobed onto the bus."""


class BusTrafficLog:
    """Append-only record of every byte placed on a bus.

    Line format: ``<now_us> <bus-id> <dir> <hex-byte>``. Kept in memory (bounded)
    and optionally streamed to a file for replay and golden comparisons.
    """

    def __init__(self, path=None, keep: int = 200_000):
        self.lines: deque[str] = deque(maxlen=keep)
        self._fh = open(path, "w", encoding="ascii") if path else None

    def record(self, now_us: int, bus_id: str, direction: str, byte: int) -> None:
        line = f"{now_us} {bus_id} {direction} {byte:02x}"
        self.lines.append(line)
        if self._fh is not None:
            self._fh.write(line + "\n")

    def dump(self) -> str:
        return "\n".join(self.lines)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            self._fh.close()
            self._fh = None


class SimClock:
    """Monotonic microsecond clock advanced in fixed ticks by the kernel only."""

    def __init__(self, tick_us: int = 1000):
        if tick_us <= 0:
            raise ValueError("tick_us must be positive")
        self.tick_us = tick_us
        self.now_us = 0


class SimKernel:
    """Single-threaded stepper; external callers interact only between steps."""

    def __init__(self, tick_us: int = 1000):
        self.clock = SimClock(tick_us)
        self._events: list[tuple[int, int, Callable[[], None]]] = []
        self._devices: list[tuple[int, Callable[[int], None], Optional[Callable[[], Optional[int]]]]] = []
        self._seq = 0

    def _take_seq(self) -> int:
        self._seq += 1
        return self._seq

    def add_device(self, handler: Callable[[int], None],
                   next_due: Optional[Callable[[], Optional[int]]] = None) -> None:
        """Register a per-tick handler. ``next_due`` returns the next absolute
        time the handler could do anything; None means "poll every tick"."""
        self._devices.append((self._take_seq(), handler, next_due))

    def schedule_at(self, due_us: int, callback: Callable[[], None]) -> None:
        if due_us < self.clock.now_us:
            raise ValueError(f"cannot schedule at {due_us}us; now is {self.clock.now_us}us")
        heapq.heappush(self._events, (due_us, self._take_seq(), callback))

    def schedule_in(self, delay_us: int, callback: Callable[[], None]) -> None:
        self.schedule_at(self.clock.now_us + delay_us, callback)

    def step(self, n: int = 1) -> None:
        """Advance exactly n ticks, firing everything due along the way."""
        if n < 1:
            raise ValueError("step count must be >= 1")
        clock = self.clock
        end_us = clock.now_us + n * clock.tick_us
        while clock.now_us < end_us:
            clock.now_us = self._next_stop(end_us)
            self._service_boundary(clock.now_us)

    def run_until(self, t_us: int) -> None:
        remaining = t_us - self.clock.now_us
        if remaining <= 0:
            return
        ticks = -(-remaining // self.clock.tick_us)
        self.step(ticks)

    def _next_stop(self, end_us: int) -> int:
        now = self.clock.now_us
        tick = self.clock.tick_us
        soonest: Optional[int] = self._events[0][0] if self._events else None
        for _, _, next_due in self._devices:
            if next_due is None:
                return now + tick
            t = next_due()
            if t is None:
                continue
            if soonest is None or t < soonest:
                soonest = t
        if soonest is None:
            return end_us
        if soonest <= now:
            return now + tick
        ticks_away = -(-(soonest - now) // tick)
        return min(now + ticks_away * tick, end_us)

    def _service_boundary(self, now_us: int) -> None:
        ready = []
        while self._events and self._events[0][0] <= now_us:
            ready.append(heapq.heappop(self._events))
        # Events that came due between boundaries fire first (older timestamps),
        # then boundary-time events interleave with device polls by registration.
        for due, _, callback in ready:
            if due < now_us:
                callback()
        boundary: list[tuple[int, Callable, bool]] = [
            (seq, callback, True) for due, seq, callback in ready if due == now_us
        ]
        boundary.extend((seq, handler, False) for seq, handler, _ in self._devices)
        boundary.sort(key=lambda item: item[0])
        for _, fn, is_event in boundary:
            if is_event:
                fn()
            else:
                fn(now_us)
        # anything scheduled for this boundary while firing still belongs to it
        while self._events and self._events[0][0] <= now_us:
            _, _, callback = heapq.heappop(self._events)
            callback()


class SerialLink:
    """Two independent FIFO byte streams (host->MCU and MCU->host).

    Exactly one byte stream per direction, delivered in order exactly once
    after ``latency_ticks`` ticks. Queues hold at most CAPACITY unconsumed
    bytes; overflow raises instead of growing silently.
    """

    CAPACITY = 4096

    HOST_TO_MCU = "h2m"
    MCU_TO_HOST = "m2h"

    def __init__(self, clock: SimClock, latency_ticks: int = 0,
                 bus_id: str = "ser0", log: Optional[BusTrafficLog] = None):
        if latency_ticks < 0:
            raise ValueError("latency_ticks must be >= 0")
        self._clock = clock
        self._latency_us = latency_ticks * clock.tick_us
        self.bus_id = bus_id
        self._log = log
        self._queues: dict[str, deque[tuple[int, int]]] = {
            self.HOST_TO_MCU: deque(),
            self.MCU_TO_HOST: deque(),
        }

    def host_send(self, byte: int) -> None:
        self._send(self.HOST_TO_MCU, byte)

    def mcu_send(self, byte: int) -> None:
        self._send(self.MCU_TO_HOST, byte)

    def mcu_recv(self) -> Optional[int]:
        return self._recv(self.HOST_TO_MCU)

    def host_recv(self) -> Optional[int]:
        return self._recv(self.MCU_TO_HOST)

    def pending(self, direction: str) -> int:
        return len(self._queues[direction])

    def next_ready_us(self, direction: str) -> Optional[int]:
        queue = self._queues[direction]
        return queue[0][0] if queue else None

    def _send(self, direction: str, byte: int) -> None:
        byte &= 0xFF
        queue = self._queues[direction]
        if len(queue) >= self.CAPACITY:
            raise SerialOverflowError(
                f"{self.bus_id} {direction} queue full ({self.CAPACITY} bytes)")
        now = self._clock.now_us
        queue.append((now + self._latency_us, byte))
        if self._log is not None:
            self._log.record(now, self.bus_id, direction, byte)

    def _recv(self, direction: str) -> Optional[int]:
        queue = self._queues[direction]
        if queue and queue[0][0] <= self._clock.now_us:
            return queue.popleft()[1]
        return None


class ParallelBus:
    """8-bit data lines with a strobe/ack handshake, one byte per full cycle.

    Cycle: writer raises strobe with data valid, reader latches and raises ack,
    writer drops strobe, reader drops ack. ``data`` is only meaningful while
    strobe is asserted; a second read in the same strobe cycle is refused so a
    single cycle can never yield two transfers.
    """

    def __init__(self, clock: Optional[SimClock] = None, bus_id: str = "par0",
                 log: Optional[BusTrafficLog] = None):
        self._clock = clock
        self.bus_id = bus_id
        self._log = log
        self.data = 0
        self.strobe = False
        self.ack = False

    def write(self, byte: int) -> None:
        if self.ack or self.strobe:
            raise BusBusyError(f"{self.bus_id}: previous transfer not completed")
        self.data = byte & 0xFF
        self.strobe = True
        if self._log is not None:
            now = self._clock.now_us if self._clock is not None else 0
            self._log.record(now, self.bus_id, "m2h", self.data)

    def read(self) -> int:
        if not self.strobe or self.ack:
            raise BusNotReadyError(f"{self.bus_id}: no byte strobed")
        self.ack = True
        return self.data

    def writer_release(self) -> None:
        if not (self.strobe and self.ack):
            raise BusBusyError(f"{self.bus_id}: release before acknowledge")
        self.strobe = False

    def reader_release(self) -> None:
        if self.strobe or not self.ack:
            raise BusNotReadyError(f"{self.bus_id}: nothing to release")
        self.ack = False

    @property
    def idle(self) -> bool:
        return not self.strobe and not self.ack
