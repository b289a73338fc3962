"""SDK-style programming layer: workgroups, kernel API, synchronization,
and the host-side orchestration sequence.

A kernel is a generator produced by a factory ``factory(ctx) -> generator``.
It interacts with the simulated world only through its :class:`KernelContext`
and consumes simulated time only inside yielded runtime calls::

    def kernel(ctx):
        yield from ctx.compute(1000)
        h = yield from ctx.dma_start(desc)
        yield from ctx.dma_wait(h)
        yield from ctx.flag_wait(0x1F00, expected=1)

Local data lives in the core's scratchpad and is manipulated directly through
numpy views; its cost is whatever the kernel charges via ``compute``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .core import DmaDescriptor, DmaMode, SHARED_OWNER
from .engine import DmaHandle, Simulator, Task
from .errors import BoundsError, ConfigurationError, MembershipError, ProtocolError
from .mesh import Coord, check_bounds, manhattan_distance


@dataclass(frozen=True)
class Workgroup:
    """Rectangular set of cores allocated to one parallel program."""

    start: Coord = Coord(0, 0)
    rows: int = 1
    cols: int = 1

    def validate(self, mesh) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError(f"workgroup must be at least 1x1, got {self.rows}x{self.cols}")
        try:
            check_bounds(self.start, mesh)
            check_bounds(Coord(self.start.row + self.rows - 1, self.start.col + self.cols - 1), mesh)
        except BoundsError as exc:
            raise ConfigurationError(f"workgroup does not fit the mesh: {exc}") from exc

    def members(self) -> list[Coord]:
        return [
            Coord(self.start.row + r, self.start.col + c)
            for r in range(self.rows)
            for c in range(self.cols)
        ]

    def __contains__(self, coord) -> bool:
        r, c = coord
        return (
            self.start.row <= r < self.start.row + self.rows
            and self.start.col <= c < self.start.col + self.cols
        )

    @property
    def size(self) -> int:
        return self.rows * self.cols


class Barrier:
    """All-participant synchronization point.

    Cost model: every participant posts a flag to the master core, which then
    broadcasts the release; both legs are raw single-word writes, so the
    release lags the last arrival by the two worst-case flag flight times.
    """

    def __init__(self, participants):
        self.participants = frozenset(Coord(*p) for p in participants)
        if not self.participants:
            raise ConfigurationError("barrier needs at least one participant")
        self.master = min(self.participants)
        self._arrived: set[Coord] = set()
        self._waiting: list[tuple[Task, Coord]] = []

    def _cost_cycles(self, sim: Simulator) -> float:
        if len(self.participants) == 1:
            return 0.0
        timing = sim.timing
        worst = max(manhattan_distance(p, self.master, sim.mesh) for p in self.participants)
        leg = timing.direct_write_issue_cycles + timing.hop_latency_cycles * worst
        return 2.0 * leg  # gather + broadcast

    def arrive(self, sim: Simulator, task: Task, coord: Coord) -> bool:
        """Record an arrival; returns True when the caller may proceed at once."""
        if coord not in self.participants:
            raise MembershipError(f"core {tuple(coord)} is not a barrier participant")
        self._arrived.add(coord)
        if len(self._arrived) < len(self.participants):
            self._waiting.append((task, coord))
            return False
        release_at = sim.now + self._cost_cycles(sim)
        waiters, self._waiting = self._waiting, []
        self._arrived = set()
        for waiter, _ in waiters:
            sim.resume(waiter, at=release_at)
        return True


class Mutex:
    """Chip-wide mutual exclusion backed by a memory location; FIFO grant order."""

    def __init__(self, location: tuple[Coord, int] | None = None):
        self.location = location
        self.owner: Coord | None = None
        self._queue: list[tuple[Task, Coord]] = []

    def try_acquire(self, coord: Coord) -> bool:
        if self.owner is None:
            self.owner = coord
            return True
        return False

    def release(self, sim: Simulator, coord: Coord) -> None:
        if self.owner != coord:
            raise ProtocolError(f"unlock by non-owner {tuple(coord)} (owner {self.owner})")
        if self._queue:
            task, nxt = self._queue.pop(0)
            self.owner = nxt
            sim.resume(task)
        else:
            self.owner = None


class KernelContext:
    """Per-core runtime API handed to kernel factories."""

    def __init__(self, sim: Simulator, coord: Coord, workgroup: Workgroup):
        self.sim = sim
        self.coord = coord
        self.workgroup = workgroup
        self._task: Task | None = None  # bound by host_run

    # -- identity and local memory ---------------------------------------

    @property
    def now(self) -> float:
        return self.sim.now

    def local_f32(self, addr: int, count: int) -> np.ndarray:
        return self.sim.core(self.coord).mem.f32_view(addr, count)

    def global_addr(self, coord: Coord, local_addr: int) -> int:
        return self.sim.addr_map.encode(Coord(*coord), local_addr)

    def read(self, global_addr: int, length: int) -> bytes:
        """Untimed read through the flat map (remote read timing not modeled)."""
        owner, offset = self.sim.addr_map.decode_range(global_addr, length)
        return self.sim.read_memory(owner, offset, length)

    def read_u32(self, global_addr: int) -> int:
        return int.from_bytes(self.read(global_addr, 4), "little")

    # -- timed operations (generators; use with ``yield from``) -----------

    def compute(self, cycles: float):
        """Consume *cycles* of core time."""
        if cycles < 0:
            raise ValueError("compute cycles must be non-negative")
        task = self._task
        task.wait_reason = "compute"
        self.sim.resume(task, at=self.sim.now + cycles)
        yield

    def store(self, global_addr: int, payload: bytes):
        """Bulk direct-write message: per-message envelope plus per-word issue.

        The destination sees the whole payload at the message's transfer time;
        the issuing kernel is busy for the setup and issue portion only (hop
        latency is pipelined behind the writer).
        """
        payload = bytes(payload)
        owner, offset = self.sim.addr_map.decode_range(global_addr, len(payload))
        if owner == SHARED_OWNER:
            raise ProtocolError("use offchip_write for the shared region")
        yield from self._store(owner, offset, payload, bulk=True)

    def store_word(self, global_addr: int, value: int):
        """Raw single 32-bit store without the per-message software envelope."""
        owner, offset = self.sim.addr_map.decode_range(global_addr, 4)
        if owner == SHARED_OWNER:
            raise ProtocolError("use offchip_write for the shared region")
        yield from self._store(owner, offset, int(value).to_bytes(4, "little"), bulk=False)

    def _store(self, owner: Coord, offset: int, payload: bytes, bulk: bool):
        sim = self.sim
        if owner == self.coord:
            sim.apply_write(owner, offset, payload)  # self-writes are immediate
            return
        timing = sim.timing
        words = (len(payload) + 3) // 4
        occupy = words * timing.direct_write_issue_cycles
        if bulk:
            occupy += timing.direct_write_setup_cycles
        distance = manhattan_distance(self.coord, owner, sim.mesh)
        visible_at = sim.now + occupy + timing.hop_latency_cycles * distance
        sim.schedule_write(visible_at, owner, offset, payload)
        sim.log("store", self.coord, len(payload))
        yield from self.compute(occupy)

    def dma_start(self, desc: DmaDescriptor):
        """Start a (possibly chained) DMA; blocks the kernel in BLOCKING mode.

        Returns the completion handle either way.
        """
        handle = self.sim.start_dma(self.coord, desc)
        if desc.mode is DmaMode.BLOCKING:
            yield from self.dma_wait(handle)
        return handle

    def dma_wait(self, handle: DmaHandle):
        if handle.done:
            return  # idempotent: waiting on a finished transfer is a no-op
        task = self._task
        task.wait_reason = f"dma_wait(ch{handle.channel})"
        handle.waiters.append(task)
        yield

    def flag_wait(self, local_addr: int, expected: int):
        """Suspend until the local 32-bit word at *local_addr* equals *expected*."""
        sim = self.sim
        mem = sim.core(self.coord).mem
        current = int.from_bytes(mem.read(local_addr, 4), "little")
        if current == expected:
            return
        task = self._task
        task.wait_reason = f"flag_wait({local_addr:#x} == {expected})"
        sim.watch_word(self.coord, local_addr, lambda word: word == expected, task)
        yield

    def barrier_wait(self, barrier: Barrier):
        task = self._task
        task.wait_reason = "barrier_wait"
        if not barrier.arrive(self.sim, task, self.coord):
            yield
        else:
            # last arrival also pays the gather/broadcast cost
            yield from self.compute(barrier._cost_cycles(self.sim))

    def mutex_lock(self, mutex: Mutex):
        if mutex.try_acquire(self.coord):
            return
        task = self._task
        task.wait_reason = "mutex_lock"
        mutex._queue.append((task, self.coord))
        yield

    def mutex_trylock(self, mutex: Mutex) -> bool:
        return mutex.try_acquire(self.coord)

    def mutex_unlock(self, mutex: Mutex) -> None:
        mutex.release(self.sim, self.coord)

    def offchip_write(self, shared_offset: int, payload: bytes):
        """Write to the shared region over the off-chip link (serialized)."""
        payload = bytes(payload)
        sim = self.sim
        arrival = sim.now + sim.exit_path_cycles(self.coord)
        done = sim.reserve_offchip("out", arrival, len(payload))
        sim.schedule_write(done, SHARED_OWNER, shared_offset, payload)
        sim.log("offchip_write", self.coord, len(payload))
        task = self._task
        task.wait_reason = "offchip_write"
        sim.resume(task, at=done)
        yield

    def offchip_read(self, shared_offset: int, local_addr: int, length: int):
        """Page data in from the shared region at the effective link rate."""
        sim = self.sim
        arrival = sim.now + sim.exit_path_cycles(self.coord)
        done = sim.reserve_offchip("in", arrival, length)
        payload = sim.shared.read(shared_offset, length)
        coord = self.coord
        sim.schedule_write(done, coord, local_addr, payload)
        sim.log("offchip_read", self.coord, length)
        task = self._task
        task.wait_reason = "offchip_read"
        sim.resume(task, at=done)
        yield

    # -- event timers ------------------------------------------------------

    def timer_start(self, timer_id: int) -> None:
        self.sim.core(self.coord).timers[timer_id].start(self.sim.now)

    def timer_stop(self, timer_id: int) -> float:
        return self.sim.core(self.coord).timers[timer_id].stop(self.sim.now)


class HostApi:
    """Untimed host-side access used by the pre/post steps of a run."""

    def __init__(self, sim: Simulator):
        self.sim = sim

    def write_core(self, coord: Coord, local_addr: int, payload: bytes) -> None:
        self.sim.apply_write(Coord(*coord), local_addr, bytes(payload))

    def read_core(self, coord: Coord, local_addr: int, length: int) -> bytes:
        return self.sim.read_memory(Coord(*coord), local_addr, length)

    def core_f32(self, coord: Coord, local_addr: int, count: int) -> np.ndarray:
        return self.sim.core(Coord(*coord)).mem.f32_view(local_addr, count)

    def write_shared(self, offset: int, payload: bytes) -> None:
        self.sim.apply_write(SHARED_OWNER, offset, bytes(payload))

    def read_shared(self, offset: int, length: int) -> bytes:
        return self.sim.read_memory(SHARED_OWNER, offset, length)


@dataclass
class HostResult:
    """Outcome of one host-orchestrated run."""

    final_cycles: float
    final_ns: float
    post_result: object = None
    event_log: list = field(default_factory=list)
    simulator: Simulator | None = None


def host_run(
    workgroup: Workgroup,
    kernel_factory,
    host_pre=None,
    host_post=None,
    *,
    config: SimConfig | None = None,
    log_events: bool = False,
) -> HostResult:
    """Execute the standard host sequence.

    Create the group, load state (``host_pre``), start every kernel, run to
    completion, then collect results (``host_post``).  Kernel exceptions
    abort the run as :class:`KernelFault` naming the core; a quiescent blocked
    state raises :class:`DeadlockError`.
    """
    sim = Simulator(config, log_events=log_events)
    workgroup.validate(sim.mesh)
    host = HostApi(sim)
    for coord in workgroup.members():
        sim.core(coord)  # reset/allocate each member
    if host_pre is not None:
        host_pre(host)
    for coord in workgroup.members():
        ctx = KernelContext(sim, coord, workgroup)
        gen = kernel_factory(ctx)
        ctx._task = sim.spawn(coord, gen)
    final = sim.run()
    post = host_post(host) if host_post is not None else None
    return HostResult(
        final_cycles=final,
        final_ns=final * sim.mesh.ns_per_cycle,
        post_result=post,
        event_log=sim.event_log,
        simulator=sim,
    )
