"""5-point stencil: reference oracle, cycle-cost model, and the distributed
halo-exchange kernel.

The update reads five points (up, center, down, right, left) with separate
coefficients and runs in place: sweeping a block in row-major order, the up
and left neighbors of a point have already been overwritten with
current-iteration values while the rest still hold the previous iteration.
The reference oracle reproduces that order exactly per block, so the
distributed kernel's assembled grid is bit-identical to it by construction.

Grids carry an implicit one-point boundary ring held at a fixed value
(Dirichlet); between blocks the ring is a halo refreshed from the neighbors'
edges once per iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ..config import SimConfig, StencilCostModel
from ..core import DmaDescriptor, DmaMode, stencil_bank_layout
from ..errors import ConfigurationError, DomainError
from ..mesh import Coord
from ..runtime import HostResult, Workgroup, host_run

FLOPS_PER_POINT = 10  # five fused multiply-adds


@dataclass(frozen=True)
class StencilWeights:
    """Coefficients (up, center, down, right, left) of the star stencil."""

    up: float
    center: float
    down: float
    right: float
    left: float

    def as_f32(self) -> tuple[np.float32, ...]:
        return tuple(np.float32(w) for w in (self.up, self.center, self.down, self.right, self.left))


def sweep_block(ext: np.ndarray, weights: StencilWeights) -> None:
    """One in-place iteration over a block stored with its halo ring.

    ``ext`` is float32, shape (rows + 2, cols + 2); the ring is read but never
    written.  Row-major device order: the up term reads this iteration's
    values, and the left term forms a first-order recurrence along the row
    (solved with an IIR filter; exact for integer-valued data).
    """
    w_up, w_c, w_down, w_right, w_left = weights.as_f32()
    for r in range(1, ext.shape[0] - 1):
        base = (
            w_up * ext[r - 1, 1:-1]
            + w_c * ext[r, 1:-1]
            + w_down * ext[r + 1, 1:-1]
            + w_right * ext[r, 2:]
        )
        if w_left == np.float32(0.0):
            ext[r, 1:-1] = base
            continue
        seed = np.float64(w_left) * np.float64(ext[r, 0])
        row = lfilter([1.0], [1.0, -np.float64(w_left)], base.astype(np.float64), zi=[seed])[0]
        ext[r, 1:-1] = row.astype(np.float32)


def _extend(grid: np.ndarray, boundary: float) -> np.ndarray:
    ext = np.full((grid.shape[0] + 2, grid.shape[1] + 2), np.float32(boundary), dtype=np.float32)
    ext[1:-1, 1:-1] = grid
    return ext


def _check_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float32)
    if grid.ndim != 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
        raise DomainError(f"grid must be at least 1x1, got shape {grid.shape}")
    return grid


def _split(rows: int, cols: int, blocks: tuple[int, int]) -> tuple[int, int]:
    br, bc = blocks
    if br < 1 or bc < 1 or rows % br or cols % bc:
        raise ConfigurationError(f"{rows}x{cols} grid does not divide over {br}x{bc} blocks")
    return rows // br, cols // bc


def stencil_reference(
    grid: np.ndarray,
    weights: StencilWeights,
    iterations: int,
    blocks: tuple[int, int] = (1, 1),
    boundary: float = 0.0,
) -> np.ndarray:
    """Sequential oracle with the same block decomposition as the device run.

    Each iteration sweeps every block in place against halo values captured at
    the end of the previous iteration, then refreshes the halos from the new
    block edges.  ``blocks=(1,1)`` is a plain global in-place sweep.
    """
    grid = _check_grid(grid)
    if iterations < 0:
        raise DomainError("iterations must be non-negative")
    rows, cols = grid.shape
    br, bc = blocks
    lr, lc = _split(rows, cols, blocks)

    ext = {}
    for i in range(br):
        for j in range(bc):
            ext[i, j] = _extend(grid[i * lr : (i + 1) * lr, j * lc : (j + 1) * lc], boundary)

    def refresh_halos():
        for i in range(br):
            for j in range(bc):
                e = ext[i, j]
                if i > 0:
                    e[0, 1:-1] = ext[i - 1, j][-2, 1:-1]
                if i < br - 1:
                    e[-1, 1:-1] = ext[i + 1, j][1, 1:-1]
                if j > 0:
                    e[1:-1, 0] = ext[i, j - 1][1:-1, -2]
                if j < bc - 1:
                    e[1:-1, -1] = ext[i, j + 1][1:-1, 1]

    refresh_halos()
    for _ in range(iterations):
        for i in range(br):
            for j in range(bc):
                sweep_block(ext[i, j], weights)
        refresh_halos()

    out = np.empty_like(grid)
    for i in range(br):
        for j in range(bc):
            out[i * lr : (i + 1) * lr, j * lc : (j + 1) * lc] = ext[i, j][1:-1, 1:-1]
    return out


def stencil_core_cycles(rows: int, cols: int, model: StencilCostModel | None = None) -> float:
    """Closed-form cycle cost of one in-place iteration over a rows x cols block.

    Full 20-point stripes run the unrolled 200-FMADD loop per row pair; a
    trailing partial stripe runs proportionally fewer FMADDs but pays the same
    per-pair penalties, and every stripe pays its register-preload setup.
    """
    if cols < 1 or rows < 1:
        raise DomainError("block must be at least 1x1")
    model = model or StencilCostModel()
    width = model.stripe_width
    per_pair_overhead = model.loop_penalty_cycles + model.row_pair_overhead_cycles
    pairs, odd = divmod(rows, 2)

    total = 0.0
    remaining = cols
    while remaining > 0:
        w = min(width, remaining)
        remaining -= w
        fmadds_pair = model.fmadds_per_stripe_pair * (w / width)
        total += model.stripe_setup_cycles
        total += pairs * (fmadds_pair + per_pair_overhead)
        if odd:
            total += fmadds_pair / 2.0 + per_pair_overhead
    return total


def stencil_gflops(rows: int, cols: int, iterations: int, seconds: float) -> float:
    return FLOPS_PER_POINT * rows * cols * iterations / seconds / 1e9


def single_core_gflops(rows: int, cols: int, config: SimConfig | None = None) -> float:
    """Implied sustained rate of the compute loop alone for one block shape."""
    config = config or SimConfig()
    cycles = stencil_core_cycles(rows, cols, config.stencil)
    seconds = cycles / config.mesh.clock_hz
    return stencil_gflops(rows, cols, 1, seconds)


# --- distributed kernel -------------------------------------------------------

_DIRS = ("north", "south", "west", "east")
_OFFS = {"north": (-1, 0), "south": (1, 0), "west": (0, -1), "east": (0, 1)}
_OPP = {"north": "south", "south": "north", "west": "east", "east": "west"}
# flag words inside the flags region: per direction, one compute-done flag
# and one edges-delivered flag
_DONE_OFF = {d: 4 * i for i, d in enumerate(_DIRS)}
_EDGE_OFF = {d: 16 + 4 * i for i, d in enumerate(_DIRS)}


@dataclass
class StencilResult:
    grid: np.ndarray
    cycles: float
    ns: float
    gflops: float
    host: HostResult


def _edge_descriptors(ctx, layout, lr, lc, neighbors) -> DmaDescriptor | None:
    """Chained halo-exchange DMA: row edges as 64-bit words where aligned,
    column edges as strided 32-bit words."""
    grid_base = layout.region("grid").start
    pitch = (lc + 2) * 4
    segs = []

    def row_desc(my_row: int, nbr: Coord, nbr_row: int):
        src = ctx.global_addr(ctx.coord, grid_base + (my_row * (lc + 2) + 1) * 4)
        dst = ctx.global_addr(nbr, grid_base + (nbr_row * (lc + 2) + 1) * 4)
        nbytes = lc * 4
        word = 8 if nbytes % 8 == 0 else 4
        segs.append(dict(src=src, dst=dst, word_size=word, inner_count=nbytes // word))

    def col_desc(my_col: int, nbr: Coord, nbr_col: int):
        src = ctx.global_addr(ctx.coord, grid_base + ((lc + 2) + my_col) * 4)
        dst = ctx.global_addr(nbr, grid_base + ((lc + 2) + nbr_col) * 4)
        segs.append(
            dict(
                src=src,
                dst=dst,
                word_size=4,
                inner_count=1,
                outer_count=lr,
                src_stride=pitch,
                dst_stride=pitch,
            )
        )

    if "north" in neighbors:
        row_desc(1, neighbors["north"], lr + 1)
    if "south" in neighbors:
        row_desc(lr, neighbors["south"], 0)
    if "west" in neighbors:
        col_desc(1, neighbors["west"], lc + 1)
    if "east" in neighbors:
        col_desc(lc, neighbors["east"], 0)

    chain = None
    for spec in reversed(segs):
        chain = DmaDescriptor(channel=0, mode=DmaMode.BLOCKING, chain=chain, **spec)
    return chain


def stencil_distributed(
    grid: np.ndarray,
    weights: StencilWeights,
    iterations: int,
    workgroup: Workgroup,
    config: SimConfig | None = None,
    boundary: float = 0.0,
    communicate: bool = True,
    log_events: bool = False,
) -> StencilResult:
    """Run the stencil across a workgroup with per-iteration halo exchange.

    Per core per iteration: compute the block (charged at the cost model),
    handshake with each neighbor, then push the four edges into the
    neighbors' halo rings with one chained DMA.  Returns the assembled grid
    (bit-identical to :func:`stencil_reference` at the same decomposition)
    plus end-to-end timing.

    ``communicate=False`` runs the same per-core blocks as private problems
    with frozen halos (the replicated-computation measurement variant); the
    assembled grid then only matches the reference for a 1x1 workgroup.
    """
    config = config or SimConfig()
    grid = _check_grid(grid)
    rows, cols = grid.shape
    lr, lc = _split(rows, cols, (workgroup.rows, workgroup.cols))
    layout = stencil_bank_layout(lr, lc)  # raises LayoutError when it cannot fit
    grid_region = layout.region("grid")
    flags_region = layout.region("flags")
    core_cycles = stencil_core_cycles(lr, lc, config.stencil)

    def block_of(coord: Coord) -> tuple[int, int]:
        return coord.row - workgroup.start.row, coord.col - workgroup.start.col

    def neighbors_of(coord: Coord) -> dict[str, Coord]:
        out = {}
        for d, (dr, dc) in _OFFS.items():
            cand = Coord(coord.row + dr, coord.col + dc)
            if cand in workgroup:
                out[d] = cand
        return out

    ext_global = _extend(grid, boundary)

    def host_pre(host):
        # each block ships with its halo ring already holding the neighbors'
        # initial edges (or the fixed boundary at the global rim)
        for coord in workgroup.members():
            i, j = block_of(coord)
            ext = np.ascontiguousarray(
                ext_global[i * lr : i * lr + lr + 2, j * lc : j * lc + lc + 2]
            )
            host.write_core(coord, grid_region.start, ext.tobytes())

    def kernel_factory(ctx):
        neighbors = neighbors_of(ctx.coord) if communicate else {}
        chain = _edge_descriptors(ctx, layout, lr, lc, neighbors)
        ext_view = ctx.local_f32(grid_region.start, (lr + 2) * (lc + 2)).reshape(lr + 2, lc + 2)

        def kernel(ctx):
            for it in range(1, iterations + 1):
                yield from ctx.compute(core_cycles)
                sweep_block(ext_view, weights)
                if not neighbors:
                    continue
                # announce compute done, then wait for all neighbors: halos
                # must not be overwritten under a still-running sweep
                for d, nbr in neighbors.items():
                    addr = ctx.global_addr(nbr, flags_region.start + _DONE_OFF[_OPP[d]])
                    yield from ctx.store_word(addr, it)
                for d in neighbors:
                    yield from ctx.flag_wait(flags_region.start + _DONE_OFF[d], it)
                yield from ctx.dma_start(chain)
                for d, nbr in neighbors.items():
                    addr = ctx.global_addr(nbr, flags_region.start + _EDGE_OFF[_OPP[d]])
                    yield from ctx.store_word(addr, it)
                for d in neighbors:
                    yield from ctx.flag_wait(flags_region.start + _EDGE_OFF[d], it)

        return kernel(ctx)

    def host_post(host):
        out = np.empty_like(grid)
        for coord in workgroup.members():
            i, j = block_of(coord)
            ext = np.frombuffer(
                host.read_core(coord, grid_region.start, (lr + 2) * (lc + 2) * 4),
                dtype=np.float32,
            ).reshape(lr + 2, lc + 2)
            out[i * lr : (i + 1) * lr, j * lc : (j + 1) * lc] = ext[1:-1, 1:-1]
        return out

    result = host_run(
        workgroup,
        kernel_factory,
        host_pre,
        host_post,
        config=config,
        log_events=log_events,
    )
    seconds = result.final_cycles / config.mesh.clock_hz
    gflops = stencil_gflops(rows, cols, iterations, seconds) if iterations else 0.0
    return StencilResult(
        grid=result.post_result,
        cycles=result.final_cycles,
        ns=result.final_ns,
        gflops=gflops,
        host=result,
    )
