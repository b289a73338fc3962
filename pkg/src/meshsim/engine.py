"""Deterministic discrete-event engine.

One :class:`Simulator` owns all mutable state: core scratchpads, the shared
region, DMA channels, the event heap, and the off-chip link occupancy.
Kernels are cooperative generators; every runtime call that consumes
simulated time suspends the kernel and schedules its resumption.  Ties
between simultaneous events break on (time, row, col, sequence number), so a
run is a pure function of its inputs.

Simulated time is kept in clock cycles (float); nanoseconds are a view.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .config import SimConfig
from .core import AddressMap, DmaDescriptor, EventTimer, Scratchpad, SHARED_OWNER
from .errors import (
    AddressError,
    ChannelBusyError,
    DeadlockError,
    DescriptorError,
    KernelFault,
)
from .mesh import Coord, check_bounds, dma_cycles, manhattan_distance

Owner = Coord | str


class SharedMemory:
    """Flat byte store for the shared DRAM region."""

    def __init__(self, size: int):
        import numpy as np

        self.size = size
        self.data = np.zeros(size, dtype=np.uint8)

    def read(self, addr: int, length: int) -> bytes:
        self._check(addr, length)
        return self.data[addr : addr + length].tobytes()

    def write(self, addr: int, payload: bytes) -> None:
        import numpy as np

        self._check(addr, len(payload))
        self.data[addr : addr + len(payload)] = np.frombuffer(bytes(payload), dtype=np.uint8)

    def _check(self, addr: int, length: int) -> None:
        if length < 0 or not (0 <= addr and addr + length <= self.size):
            raise AddressError(f"shared range [{addr:#x}, {addr + length:#x}) out of bounds")


@dataclass
class DmaChannel:
    busy: bool = False
    handle: "DmaHandle | None" = None


@dataclass
class DmaHandle:
    """Completion token for an in-flight (or finished) DMA chain."""

    core: Coord
    channel: int
    completion_cycles: float = math.inf
    done: bool = False
    waiters: list = field(default_factory=list)


class _CoreState:
    __slots__ = ("coord", "mem", "channels", "timers")

    def __init__(self, coord: Coord, sim: "Simulator"):
        self.coord = coord
        self.mem = Scratchpad(sim.config.memory)
        self.channels = (DmaChannel(), DmaChannel())
        self.timers = (EventTimer(), EventTimer())


class Task:
    """A spawned kernel: its generator plus scheduling state."""

    __slots__ = ("coord", "gen", "done", "wait_reason")

    def __init__(self, coord: Coord, gen):
        self.coord = coord
        self.gen = gen
        self.done = False
        self.wait_reason: str | None = None


class Simulator:
    def __init__(self, config: SimConfig | None = None, log_events: bool = False):
        self.config = config or SimConfig()
        self.mesh = self.config.mesh
        self.timing = self.config.timing
        self.addr_map = AddressMap(self.mesh, self.config.memory)
        self.now: float = 0.0
        self._heap: list = []
        self._seq = 0
        self.tasks: list[Task] = []
        self._cores: dict[Coord, _CoreState] = {}
        self.shared = SharedMemory(self.config.memory.shared_bytes)
        self._watchers: dict[tuple[Coord, int], list] = {}
        # off-chip link occupancy, one tracker per direction (full duplex)
        self.link_busy_out: float = 0.0  # mesh -> DRAM (writes)
        self.link_busy_in: float = 0.0  # DRAM -> mesh (reads)
        self.log_events = log_events
        self.event_log: list[dict] = []

    # -- state accessors ------------------------------------------------

    def core(self, coord: Coord) -> _CoreState:
        coord = check_bounds(Coord(*coord), self.mesh)
        state = self._cores.get(coord)
        if state is None:
            state = self._cores[coord] = _CoreState(coord, self)
        return state

    def memory(self, owner: Owner):
        if owner == SHARED_OWNER:
            return self.shared
        return self.core(owner).mem

    @property
    def now_ns(self) -> float:
        return self.now * self.mesh.ns_per_cycle

    def log(self, kind: str, coord: Owner, size: int = 0) -> None:
        if self.log_events:
            core = list(coord) if isinstance(coord, tuple) else coord
            self.event_log.append(
                {"time_ns": self.now_ns, "core": core, "event": kind, "bytes": size}
            )

    def dump_event_log(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for entry in self.event_log:
                fh.write(json.dumps(entry) + "\n")

    # -- scheduling -----------------------------------------------------

    def schedule(self, time: float, coord: Owner, action: Callable[[], None]) -> None:
        if time < self.now:
            raise ValueError("cannot schedule into the past")
        row, col = (coord[0], coord[1]) if isinstance(coord, tuple) else (-1, -1)
        self._seq += 1
        heapq.heappush(self._heap, (time, row, col, self._seq, action))

    def spawn(self, coord: Coord, gen) -> Task:
        task = Task(coord, gen)
        self.tasks.append(task)
        self.schedule(self.now, coord, lambda: self._step(task, None))
        return task

    def _step(self, task: Task, value) -> None:
        if task.done:
            return
        task.wait_reason = None
        try:
            task.gen.send(value)
        except StopIteration:
            task.done = True
        except Exception as exc:
            task.done = True
            raise KernelFault(task.coord, exc) from exc

    def resume(self, task: Task, value=None, at: float | None = None) -> None:
        self.schedule(self.now if at is None else at, task.coord, lambda: self._step(task, value))

    def run(self) -> float:
        """Drain the event heap; returns the final simulated time in cycles.

        Raises :class:`DeadlockError` when no events remain while some kernel
        is still suspended.
        """
        while self._heap:
            time, _row, _col, _seq, action = heapq.heappop(self._heap)
            self.now = time
            action()
        blocked = [(t.coord, t.wait_reason or "suspended") for t in self.tasks if not t.done]
        if blocked:
            raise DeadlockError(blocked)
        return self.now

    # -- memory with simulated-time visibility ---------------------------

    def read_memory(self, owner: Owner, offset: int, length: int) -> bytes:
        return self.memory(owner).read(offset, length)

    def apply_write(self, owner: Owner, offset: int, payload: bytes) -> None:
        """Make a write visible now and wake satisfied flag waiters."""
        self.memory(owner).write(offset, payload)
        if isinstance(owner, tuple):
            self._notify_watchers(owner, offset, len(payload))

    def schedule_write(self, visible_at: float, owner: Owner, offset: int, payload: bytes) -> None:
        data = bytes(payload)
        self.schedule(visible_at, owner, lambda: self.apply_write(owner, offset, data))

    def watch_word(self, coord: Coord, addr: int, predicate, task: Task) -> None:
        self._watchers.setdefault((coord, addr), []).append((predicate, task))

    def _notify_watchers(self, coord: Coord, offset: int, length: int) -> None:
        for addr in range(offset & ~3, offset + length, 4):
            key = (coord, addr)
            waiters = self._watchers.get(key)
            if not waiters:
                continue
            word = int.from_bytes(self.core(coord).mem.read(addr, 4), "little")
            still = []
            for predicate, task in waiters:
                if predicate(word):
                    delay = self.timing.sync_flag_poll_cycles
                    self.resume(task, at=self.now + delay)
                else:
                    still.append((predicate, task))
            if still:
                self._watchers[key] = still
            else:
                del self._watchers[key]

    # -- DMA -------------------------------------------------------------

    def start_dma(self, coord: Coord, desc: DmaDescriptor) -> DmaHandle:
        core = self.core(coord)
        channel = core.channels[desc.channel]
        if channel.busy:
            raise ChannelBusyError(f"core {tuple(coord)} channel {desc.channel} busy")
        segments = desc.segments()
        plans = [self._plan_segment(seg) for seg in segments]
        for seg in segments:
            if seg.channel != desc.channel:
                raise DescriptorError("chained descriptors must share one channel")

        handle = DmaHandle(core=coord, channel=desc.channel)
        channel.busy = True
        channel.handle = handle

        t = self.now
        for seg, (src_owner, src_off, dst_owner, dst_off, distance) in zip(segments, plans):
            seg_cycles = dma_cycles(seg.payload_bytes, distance, self.timing)
            start, t = t, t + seg_cycles
            self._schedule_segment(seg, src_owner, src_off, dst_owner, dst_off, start, t)
        handle.completion_cycles = t
        self.schedule(t, coord, lambda: self._finish_dma(coord, handle))
        self.log("dma_start", coord, sum(s.payload_bytes for s in segments))
        return handle

    def _plan_segment(self, seg: DmaDescriptor):
        last_row = seg.outer_count - 1
        src_owner, src_off = self.addr_map.decode_range(seg.src, seg.row_bytes)
        dst_owner, dst_off = self.addr_map.decode_range(seg.dst, seg.row_bytes)
        if seg.outer_count > 1:
            o2, _ = self.addr_map.decode_range(seg.src + last_row * seg.src_stride, seg.row_bytes)
            o3, _ = self.addr_map.decode_range(seg.dst + last_row * seg.dst_stride, seg.row_bytes)
            if o2 != src_owner or o3 != dst_owner:
                raise DescriptorError("2D transfer strides leave the owner's memory")
        if not (isinstance(src_owner, tuple) and isinstance(dst_owner, tuple)):
            raise DescriptorError("DMA endpoints must both be core memories")
        distance = manhattan_distance(src_owner, dst_owner, self.mesh)
        return src_owner, src_off, dst_owner, dst_off, distance

    def _schedule_segment(self, seg, src_owner, src_off, dst_owner, dst_off, start, end):
        state: dict = {}

        def capture():
            mem = self.memory(src_owner)
            state["rows"] = [
                mem.read(src_off + r * seg.src_stride, seg.row_bytes)
                for r in range(seg.outer_count)
            ]

        def deliver():
            mem = self.memory(dst_owner)
            for r, row in enumerate(state["rows"]):
                mem.write(dst_off + r * seg.dst_stride, row)
            if isinstance(dst_owner, tuple):
                if seg.outer_count == 1:
                    self._notify_watchers(dst_owner, dst_off, seg.row_bytes)
                else:
                    for r in range(seg.outer_count):
                        self._notify_watchers(dst_owner, dst_off + r * seg.dst_stride, seg.row_bytes)

        self.schedule(start, src_owner, capture)
        self.schedule(end, dst_owner, deliver)

    def _finish_dma(self, coord: Coord, handle: DmaHandle) -> None:
        core = self.core(coord)
        channel = core.channels[handle.channel]
        handle.done = True
        channel.busy = False
        channel.handle = None
        self.log("dma_done", coord)
        for task in handle.waiters:
            self.resume(task)
        handle.waiters.clear()

    # -- off-chip link ---------------------------------------------------

    def offchip_transaction_cycles(self, byte_count: int) -> float:
        txns = (byte_count + 3) // 4
        return txns * self.config.elink.cycles_per_transaction()

    def reserve_offchip(self, direction: str, arrival: float, byte_count: int) -> float:
        """Serialize a transfer on one link direction; returns completion time."""
        busy = self.link_busy_out if direction == "out" else self.link_busy_in
        start = max(arrival, busy)
        end = start + self.offchip_transaction_cycles(byte_count)
        if direction == "out":
            self.link_busy_out = end
        else:
            self.link_busy_in = end
        return end

    def exit_path_cycles(self, coord: Coord) -> float:
        exit_coord = Coord(*self.config.elink.exit_coord(self.mesh))
        hops = manhattan_distance(coord, exit_coord, self.mesh) + 1
        return hops * self.timing.hop_latency_cycles
