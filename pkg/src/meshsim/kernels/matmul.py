"""Matrix multiplication at three levels: tuned single-core kernel cost,
on-chip block rotation across a square workgroup, and paged multiplication of
matrices too large for the chip.

Numerics are single-precision throughout.  Block products accumulate in the
rotation order the distributed algorithm visits them, which is bit-exact
against the plain reference for integer-valued data (the acceptance case)
and agrees to float32 rounding otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import MatmulCostModel, SimConfig
from ..core import BankLayout, DmaDescriptor, DmaMode, matmul_bank_layout
from ..errors import CapacityError, ConfigurationError, DomainError, LayoutError
from ..mesh import Coord
from ..runtime import Barrier, HostResult, Workgroup, host_run

MAX_BLOCK = 32


def block_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """float32 product of two blocks (exact for integer-valued inputs)."""
    return np.matmul(a.astype(np.float32, copy=False), b.astype(np.float32, copy=False))


def matmul_reference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Plain single-precision oracle for C = A @ B."""
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DomainError(f"incompatible shapes {a.shape} x {b.shape}")
    return block_multiply(a, b)


def matmul_core_cycles(m: int, n: int, k: int, model: MatmulCostModel | None = None) -> float:
    """Cycle cost of one single-core block product (A: m x n, B: n x k).

    One multiply-add pair per element-element step, plus per-result-row loop
    and store overhead; the macro cost scales linearly with row length.
    ``m`` is the row-loop count and is unbounded; ``n`` and ``k`` are limited
    by the unrolled macro width.
    """
    model = model or MatmulCostModel()
    for name, dim in (("m", m), ("n", n), ("k", k)):
        if dim < 1:
            raise DomainError(f"dimension {name} must be positive")
    for name, dim in (("n", n), ("k", k)):
        if dim > MAX_BLOCK:
            raise CapacityError(f"dimension {name}={dim} exceeds single-core capacity {MAX_BLOCK}")
    per_element = model.cycles_per_element
    return m * n * k * per_element + m * (model.row_overhead_cycles + model.store_cycles_per_word * k)


def single_core_gflops(size: int, config: SimConfig | None = None) -> float:
    config = config or SimConfig()
    cycles = matmul_core_cycles(size, size, size, config.matmul)
    return 2.0 * size**3 / (cycles / config.mesh.clock_hz) / 1e9


# --- half-buffer rotation plan (32x32 blocks) ---------------------------------

A_SLOTS = (0x4000, 0x4800, 0x5000)
B_SLOTS = (0x5800, 0x6000, 0x6800)
HALF_BYTES = 2048


@dataclass(frozen=True)
class HalfBufferTransfer:
    operand: str  # "a" | "b"
    half: str  # "low" | "high"
    src_addr: int
    dst_addr: int
    byte_count: int = HALF_BYTES


@dataclass(frozen=True)
class HalfBufferPhase:
    """One rotation round of the 2 KB-granularity scheme.

    ``first``/``second`` are the transfer lists separated by an all-cores
    sync; ``slots_after`` maps operand -> (low slot, high slot) once pointers
    swap.  Two consecutive phases restore the initial slot assignment.
    """

    parity: int
    first: tuple[HalfBufferTransfer, ...]
    second: tuple[HalfBufferTransfer, ...]
    slots_before: dict = field(hash=False, default_factory=dict)
    slots_after: dict = field(hash=False, default_factory=dict)


def _hb_slots(parity: int, slots: tuple[int, int, int]) -> tuple[int, int, int]:
    """(low, high, free) slot addresses at the start of a phase."""
    s0, s1, s2 = slots
    return (s0, s1, s2) if parity % 2 == 0 else (s2, s0, s1)


def half_buffer_plan(parity: int) -> HalfBufferPhase:
    """Transfer schedule for one rotation at the given round parity.

    Even rounds move the low halves into the neighbors' free slots, then
    (after all cores finish) the high halves into the slots just vacated.
    Odd rounds run the halves in the reverse order.  Every destination is
    either the receiver's free slot or one it vacated in the first leg, so no
    live data is ever overwritten.
    """
    first, second = [], []
    before, after = {}, {}
    for operand, slots in (("a", A_SLOTS), ("b", B_SLOTS)):
        low, high, free = _hb_slots(parity, slots)
        before[operand] = (low, high)
        if parity % 2 == 0:
            first.append(HalfBufferTransfer(operand, "low", src_addr=low, dst_addr=free))
            second.append(HalfBufferTransfer(operand, "high", src_addr=high, dst_addr=low))
            after[operand] = (free, low)
        else:
            first.append(HalfBufferTransfer(operand, "high", src_addr=high, dst_addr=free))
            second.append(HalfBufferTransfer(operand, "low", src_addr=low, dst_addr=high))
            after[operand] = (high, free)
    return HalfBufferPhase(
        parity=parity % 2,
        first=tuple(first),
        second=tuple(second),
        slots_before=before,
        slots_after=after,
    )


# --- on-chip multi-core kernel -------------------------------------------------

_FLAGS_BASE = 0x2C00
_FLAG_A_IN = _FLAGS_BASE + 0
_FLAG_B_IN = _FLAGS_BASE + 4
_FLAG_A_CREDIT = _FLAGS_BASE + 8
_FLAG_B_CREDIT = _FLAGS_BASE + 12


@dataclass
class CannonResult:
    c: np.ndarray
    cycles: float
    ns: float
    gflops: float
    rounds: int
    host: HostResult


def _block_dims(M: int, N: int, K: int, q: int) -> tuple[int, int, int]:
    if M % q or N % q or K % q:
        raise ConfigurationError(f"dims {M}x{N}x{K} do not divide over a {q}x{q} workgroup")
    return M // q, N // q, K // q


def _double_buffer_layout(m: int, n: int, k: int) -> BankLayout:
    layout = BankLayout()
    layout.add("code", 0x0000, 0x2C00)
    layout.add("flags", _FLAGS_BASE, 0x40)
    layout.add("stack", 0x3000, 0x1000)
    addr = 0x4000
    for name, words in (
        ("a0", m * n),
        ("a1", m * n),
        ("b0", n * k),
        ("b1", n * k),
        ("c", m * k),
    ):
        layout.add(name, addr, words * 4)
        addr += words * 4
    try:
        layout.validate()
    except LayoutError as exc:
        raise CapacityError(f"operands do not fit the 32 KB scratchpad: {exc}") from exc
    if addr > 0x8000:
        raise CapacityError("double buffers exceed the scratchpad data banks")
    return layout


def _single_core_layout(m: int, n: int, k: int) -> BankLayout:
    """No-rotation layout: the standalone kernel's code is small, leaving
    three full banks for operands."""
    layout = BankLayout()
    layout.add("code", 0x0000, 0x1800)
    layout.add("stack", 0x1800, 0x0800)
    addr = 0x2000
    for name, words in (("a0", m * n), ("b0", n * k), ("c", m * k)):
        layout.add(name, addr, words * 4)
        addr += words * 4
    try:
        layout.validate()
    except LayoutError as exc:
        raise CapacityError(f"operands do not fit the 32 KB scratchpad: {exc}") from exc
    if addr > 0x8000:
        raise CapacityError("operands exceed the scratchpad data banks")
    return layout


def cannon_multicore(
    a: np.ndarray,
    b: np.ndarray,
    workgroup: Workgroup,
    config: SimConfig | None = None,
    log_events: bool = False,
) -> CannonResult:
    """Block-rotation matrix multiply across a square workgroup.

    Operand blocks are pre-skewed at load time (row i of A rotated left by i,
    column j of B rotated up by j); each of the Q rounds multiplies the
    resident blocks and rotates A west / B north around the group.  Blocks
    smaller than 32x32 rotate through double buffers; exactly 32x32 uses the
    half-buffer schedule with an all-cores sync between half transfers.
    Initial distribution and final collection are host work and not timed.
    """
    config = config or SimConfig()
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if workgroup.rows != workgroup.cols:
        raise ConfigurationError("block rotation needs a square workgroup")
    q = workgroup.rows
    M, N = a.shape
    N2, K = b.shape
    if N2 != N:
        raise DomainError(f"incompatible shapes {a.shape} x {b.shape}")
    m, n, k = _block_dims(M, N, K, q)
    for name, dim in (("n", n), ("k", k)):
        if dim > MAX_BLOCK:
            raise CapacityError(f"per-core block dimension {name}={dim} exceeds {MAX_BLOCK}")

    half_buffer = (m, n, k) == (MAX_BLOCK, MAX_BLOCK, MAX_BLOCK)
    if half_buffer:
        layout = matmul_bank_layout()
    elif q == 1:
        layout = _single_core_layout(m, n, k)
    else:
        layout = _double_buffer_layout(m, n, k)
    compute_cycles = matmul_core_cycles(m, n, k, config.matmul)
    overhead = config.matmul.round_sync_overhead_cycles
    barrier = Barrier(workgroup.members()) if half_buffer else None

    def loc(coord: Coord) -> tuple[int, int]:
        return coord.row - workgroup.start.row, coord.col - workgroup.start.col

    def at(i: int, j: int) -> Coord:
        return Coord(workgroup.start.row + i % q, workgroup.start.col + j % q)

    def host_pre(host):
        for coord in workgroup.members():
            i, j = loc(coord)
            s = (i + j) % q  # initial skew
            a_blk = a[i * m : (i + 1) * m, s * n : (s + 1) * n]
            b_blk = b[s * n : (s + 1) * n, j * k : (j + 1) * k]
            if half_buffer:
                host.write_core(coord, A_SLOTS[0], a_blk[:16].tobytes())
                host.write_core(coord, A_SLOTS[1], a_blk[16:].tobytes())
                host.write_core(coord, B_SLOTS[0], b_blk[:16].tobytes())
                host.write_core(coord, B_SLOTS[1], b_blk[16:].tobytes())
                host.write_core(coord, layout.region("c").start, b"\x00" * (m * k * 4))
            else:
                host.write_core(coord, layout.region("a0").start, a_blk.tobytes())
                host.write_core(coord, layout.region("b0").start, b_blk.tobytes())
                host.write_core(coord, layout.region("c").start, b"\x00" * (m * k * 4))

    def kernel_factory(ctx):
        i, j = loc(ctx.coord)
        west, north = at(i, j - 1), at(i - 1, j)
        c_view = ctx.local_f32(layout.region("c").start, m * k).reshape(m, k)

        if half_buffer:
            return _half_buffer_kernel(
                ctx, c_view, west, north, q, compute_cycles, overhead, barrier
            )
        if q == 1:
            return _single_kernel(ctx, layout, c_view, (m, n, k), compute_cycles)
        return _double_buffer_kernel(
            ctx, layout, c_view, west, north, q, (m, n, k), compute_cycles, overhead
        )

    def host_post(host):
        out = np.empty((M, K), dtype=np.float32)
        for coord in workgroup.members():
            i, j = loc(coord)
            blk = np.frombuffer(
                host.read_core(coord, layout.region("c").start, m * k * 4), dtype=np.float32
            ).reshape(m, k)
            out[i * m : (i + 1) * m, j * k : (j + 1) * k] = blk
        return out

    result = host_run(
        workgroup, kernel_factory, host_pre, host_post, config=config, log_events=log_events
    )
    seconds = result.final_cycles / config.mesh.clock_hz
    return CannonResult(
        c=result.post_result,
        cycles=result.final_cycles,
        ns=result.final_ns,
        gflops=2.0 * M * N * K / seconds / 1e9,
        rounds=q,
        host=result,
    )


def _chain(ctx, specs) -> DmaDescriptor:
    chain = None
    for spec in reversed(specs):
        chain = DmaDescriptor(channel=0, mode=DmaMode.BLOCKING, chain=chain, **spec)
    return chain


def _single_kernel(ctx, layout, c_view, dims, compute_cycles):
    m, n, k = dims

    def gen():
        yield from ctx.compute(compute_cycles)
        a_view = ctx.local_f32(layout.region("a0").start, m * n).reshape(m, n)
        b_view = ctx.local_f32(layout.region("b0").start, n * k).reshape(n, k)
        np.add(c_view, block_multiply(a_view, b_view), out=c_view)

    return gen()


def _double_buffer_kernel(ctx, layout, c_view, west, north, q, dims, compute_cycles, overhead):
    m, n, k = dims
    a_regions = (layout.region("a0").start, layout.region("a1").start)
    b_regions = (layout.region("b0").start, layout.region("b1").start)
    wg = ctx.workgroup
    i = ctx.coord.row - wg.start.row
    j = ctx.coord.col - wg.start.col
    east = Coord(wg.start.row + i, wg.start.col + (j + 1) % q)
    south = Coord(wg.start.row + (i + 1) % q, wg.start.col + j)

    def block_spec(src_addr: int, dst_core: Coord, dst_addr: int, nbytes: int) -> dict:
        word = 8 if nbytes % 8 == 0 else 4
        return dict(
            src=ctx.global_addr(ctx.coord, src_addr),
            dst=ctx.global_addr(dst_core, dst_addr),
            word_size=word,
            inner_count=nbytes // word,
        )

    def gen():
        parity = 0
        for rnd in range(1, q + 1):
            a_cur, b_cur = a_regions[parity], b_regions[parity]
            a_other, b_other = a_regions[1 - parity], b_regions[1 - parity]
            yield from ctx.compute(compute_cycles)
            a_view = ctx.local_f32(a_cur, m * n).reshape(m, n)
            b_view = ctx.local_f32(b_cur, n * k).reshape(n, k)
            np.add(c_view, block_multiply(a_view, b_view), out=c_view)
            if q == 1:
                continue
            # in-buffers consumed: extend send credit to the cores writing here
            yield from ctx.store_word(ctx.global_addr(east, _FLAG_A_CREDIT), rnd)
            yield from ctx.store_word(ctx.global_addr(south, _FLAG_B_CREDIT), rnd)
            yield from ctx.compute(overhead)
            yield from ctx.flag_wait(_FLAG_A_CREDIT, rnd)  # from the send target (west)
            yield from ctx.flag_wait(_FLAG_B_CREDIT, rnd)  # from the send target (north)
            yield from ctx.dma_start(
                _chain(
                    ctx,
                    [
                        block_spec(a_cur, west, a_other, m * n * 4),
                        block_spec(b_cur, north, b_other, n * k * 4),
                    ],
                )
            )
            yield from ctx.store_word(ctx.global_addr(west, _FLAG_A_IN), rnd)
            yield from ctx.store_word(ctx.global_addr(north, _FLAG_B_IN), rnd)
            yield from ctx.flag_wait(_FLAG_A_IN, rnd)
            yield from ctx.flag_wait(_FLAG_B_IN, rnd)
            parity = 1 - parity

    return gen()


def _half_buffer_kernel(ctx, c_view, west, north, q, compute_cycles, overhead, barrier):
    def current_views(parity):
        a_low, a_high, _ = _hb_slots(parity, A_SLOTS)
        b_low, b_high, _ = _hb_slots(parity, B_SLOTS)
        a = np.vstack(
            [
                ctx.local_f32(a_low, 16 * 32).reshape(16, 32),
                ctx.local_f32(a_high, 16 * 32).reshape(16, 32),
            ]
        )
        bm = np.vstack(
            [
                ctx.local_f32(b_low, 16 * 32).reshape(16, 32),
                ctx.local_f32(b_high, 16 * 32).reshape(16, 32),
            ]
        )
        return a, bm

    def transfers(plan_leg):
        specs = []
        for t in plan_leg:
            dst_core = west if t.operand == "a" else north
            specs.append(
                dict(
                    src=ctx.global_addr(ctx.coord, t.src_addr),
                    dst=ctx.global_addr(dst_core, t.dst_addr),
                    word_size=8,
                    inner_count=t.byte_count // 8,
                )
            )
        return specs

    def gen():
        for rnd in range(q):
            parity = rnd % 2
            yield from ctx.compute(compute_cycles)
            a_view, b_view = current_views(parity)
            np.add(c_view, block_multiply(a_view, b_view), out=c_view)
            if q == 1:
                continue
            yield from ctx.compute(overhead)
            plan = half_buffer_plan(parity)
            yield from ctx.dma_start(_chain(ctx, transfers(plan.first)))
            yield from ctx.barrier_wait(barrier)
            yield from ctx.dma_start(_chain(ctx, transfers(plan.second)))
            yield from ctx.barrier_wait(barrier)

    return gen()


# --- paged (off-chip) kernel ---------------------------------------------------


@dataclass
class OffchipResult:
    c: np.ndarray
    cycles: float
    ns: float
    gflops: float
    compute_cycles: float
    transfer_cycles: float
    compute_share: float
    transfer_share: float
    transfer_to_compute_ratio: float
    tile_steps: int


def offchip_matmul(
    a: np.ndarray,
    b: np.ndarray,
    workgroup: Workgroup,
    config: SimConfig | None = None,
    per_core_block: int | None = None,
) -> OffchipResult:
    """Multiply matrices held in shared DRAM by paging tiles through the chip.

    Each on-chip tile of C accumulates over tile pairs of A and B paged in at
    the off-chip link's effective rate; finished C tiles stream back on the
    opposite link direction, overlapping subsequent page-ins.  Page-ins and
    the on-chip rotation are serial, as in the measured configuration.
    """
    config = config or SimConfig()
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if workgroup.rows != workgroup.cols:
        raise ConfigurationError("paged multiply needs a square workgroup")
    q = workgroup.rows
    blk = per_core_block or MAX_BLOCK
    tile = q * blk
    M, N = a.shape
    N2, K = b.shape
    if N2 != N:
        raise DomainError(f"incompatible shapes {a.shape} x {b.shape}")
    if M % tile or N % tile or K % tile:
        raise ConfigurationError(
            f"dims {M}x{N}x{K} do not page evenly into {tile}x{tile} tiles"
        )

    c = np.zeros((M, K), dtype=np.float32)
    wall = 0.0
    write_busy = 0.0
    compute_total = 0.0
    read_total = 0.0
    steps = 0
    exit_path = config.timing.hop_latency_cycles  # tile staging at the link edge

    def txn_cycles(nbytes: int) -> float:
        return ((nbytes + 3) // 4) * config.elink.cycles_per_transaction()

    for ti in range(M // tile):
        for tj in range(K // tile):
            acc = np.zeros((tile, tile), dtype=np.float32)
            for ts in range(N // tile):
                a_tile = a[ti * tile : (ti + 1) * tile, ts * tile : (ts + 1) * tile]
                b_tile = b[ts * tile : (ts + 1) * tile, tj * tile : (tj + 1) * tile]
                page_in = txn_cycles(a_tile.nbytes + b_tile.nbytes) + exit_path
                wall += page_in
                read_total += page_in
                run = cannon_multicore(a_tile, b_tile, workgroup, config)
                acc += run.c
                wall += run.cycles
                compute_total += run.cycles
                steps += 1
            c[ti * tile : (ti + 1) * tile, tj * tile : (tj + 1) * tile] = acc
            write_busy = max(write_busy, wall) + txn_cycles(acc.nbytes)

    wall = max(wall, write_busy)
    seconds = wall / config.mesh.clock_hz
    transfer_cycles = wall - compute_total
    return OffchipResult(
        c=c,
        cycles=wall,
        ns=wall * config.mesh.ns_per_cycle,
        gflops=2.0 * M * N * K / seconds / 1e9,
        compute_cycles=compute_total,
        transfer_cycles=transfer_cycles,
        compute_share=compute_total / wall,
        transfer_share=transfer_cycles / wall,
        transfer_to_compute_ratio=(read_total / steps) / (compute_total / steps),
        tile_steps=steps,
    )
