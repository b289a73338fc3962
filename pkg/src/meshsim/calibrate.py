"""Derivation of the calibrated cost-model constants from reference data.

The fits here are the provenance of the frozen defaults in
:mod:`meshsim.config`; re-running them must reproduce those defaults exactly
(a regression test enforces this).  Exposed on the CLI as
``meshsim calibrate`` so the derivation stays reproducible.
"""

from __future__ import annotations

from . import reference as ref
from .config import (
    CLOCK_HZ_DEFAULT,
    MatmulCostModel,
    SimConfig,
    StencilCostModel,
    TimingModel,
)

# Free parameters not pinned by any measurement; documented choices.
DIRECT_WRITE_ISSUE_CYCLES = 2.0  # puts the direct-write plateau at 1.2 GB/s, below the DMA plateau
CROSSOVER_TARGET_BYTES = 500.0
STENCIL_STRIPE_SETUP_CYCLES = 44.0  # preload of two 22-register row buffers
STENCIL_SINGLE_CORE_TARGET = 1.13  # GFLOPS for the 80x20 block
CANNON_ROUND_SYNC_OVERHEAD = 600.0  # descriptor prep, pointer swaps, loop control per rotation round


def _lsq_line(points: list[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares (intercept, slope) for y = a + b*x."""
    n = len(points)
    sx = sum(x for x, _ in points)
    sy = sum(y for _, y in points)
    sxx = sum(x * x for x, _ in points)
    sxy = sum(x * y for x, y in points)
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    intercept = (sy - slope * sx) / n
    return intercept, slope


def fit_timing_model(clock_hz: float = CLOCK_HZ_DEFAULT) -> TimingModel:
    """Fit hop latency and per-message costs to the latency table and rate targets.

    The table reports amortized ns per 4-byte transfer of an 80-byte (20-word)
    message; a line over distance gives the hop latency (slope) and the
    message-fixed cost (intercept).  The intercept splits into per-word issue
    cost (a free parameter bounded by the direct-write plateau) and message
    setup.  DMA setup is then pinned by the crossover point.
    """
    cycles_per_ns = clock_hz / 1e9
    words = 20.0

    points = [(float(d), t) for _, _, d, t in ref.LATENCY_VS_DISTANCE]
    intercept, slope = _lsq_line(points)

    hop = slope * words * cycles_per_ns
    fixed_cycles = intercept * words * cycles_per_ns  # setup + words * issue
    issue = DIRECT_WRITE_ISSUE_CYCLES
    setup = fixed_cycles - words * issue

    dma_rate = ref.DMA_PLATEAU_BYTES_PER_S / clock_hz  # bytes per cycle
    # equal transfer times at the crossover size for adjacent cores
    dma_setup = setup + CROSSOVER_TARGET_BYTES * (issue / 4.0 - 1.0 / dma_rate)

    return TimingModel(
        hop_latency_cycles=hop,
        direct_write_issue_cycles=issue,
        direct_write_setup_cycles=setup,
        dma_setup_cycles=dma_setup,
        dma_bytes_per_cycle=dma_rate,
        sync_flag_poll_cycles=0.0,
    )


def fit_matmul_model(clock_hz: float = CLOCK_HZ_DEFAULT) -> MatmulCostModel:
    """Fit the per-row overhead terms to measured single-core throughput.

    With the macro running one multiply-add pair per cycle, an s^3 product
    leaves s * (row_overhead + store_per_word * s) unexplained cycles per
    measured GFLOPS figure; those fit a line in s.
    """
    ghz = clock_hz / 1e9
    points = []
    for s, gflops in sorted(ref.MATMUL_SINGLE_CORE_GFLOPS.items()):
        excess = s * s * (2.0 * ghz / gflops - 1.0)
        points.append((float(s), excess))
    row_overhead, store_per_word = _lsq_line(points)
    return MatmulCostModel(
        row_overhead_cycles=row_overhead,
        store_cycles_per_word=store_per_word,
        round_sync_overhead_cycles=CANNON_ROUND_SYNC_OVERHEAD,
    )


def fit_stencil_model(clock_hz: float = CLOCK_HZ_DEFAULT) -> StencilCostModel:
    """Pin the row-pair overhead so the 80x20 block lands on its measured rate."""
    ghz = clock_hz / 1e9
    base = StencilCostModel()
    rows, cols = ref.STENCIL_PERF_BLOCK
    flops = 10.0 * rows * cols
    target_cycles = flops * ghz / STENCIL_SINGLE_CORE_TARGET
    pairs = rows / 2.0  # single 20-wide stripe
    row_pair_overhead = (
        (target_cycles - STENCIL_STRIPE_SETUP_CYCLES) / pairs
        - base.fmadds_per_stripe_pair
        - base.loop_penalty_cycles
    )
    return StencilCostModel(
        row_pair_overhead_cycles=row_pair_overhead,
        stripe_setup_cycles=STENCIL_STRIPE_SETUP_CYCLES,
    )


def calibrated_config() -> SimConfig:
    """Full default config regenerated from the reference data."""
    return SimConfig(
        timing=fit_timing_model(),
        stencil=fit_stencil_model(),
        matmul=fit_matmul_model(),
    )
