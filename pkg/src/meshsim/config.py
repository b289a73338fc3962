"""Machine description and calibrated timing constants.

Everything the simulator needs to know about the modeled machine lives in a
:class:`SimConfig`: mesh geometry and clock, the analytic transfer-timing
model, the off-chip link parameters, and the kernel cycle-cost models.  The
shipped defaults describe a 64-core device at 600 MHz; the numeric constants
marked "calibrated" are produced by :mod:`meshsim.calibrate` from the embedded
reference measurements and are frozen here so that a default-constructed
config is calibration-complete.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError

CLOCK_HZ_DEFAULT = 6.0e8


@dataclass(frozen=True)
class MeshConfig:
    """Mesh geometry and core clock."""

    rows: int = 8
    cols: int = 8
    clock_hz: float = CLOCK_HZ_DEFAULT

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError(f"mesh must be at least 1x1, got {self.rows}x{self.cols}")
        if self.clock_hz <= 0:
            raise ConfigurationError("clock_hz must be positive")

    @property
    def ns_per_cycle(self) -> float:
        return 1e9 / self.clock_hz


@dataclass(frozen=True)
class TimingModel:
    """Analytic cost model for core-to-core transfers.

    Times are in core clock cycles.  ``direct_write_setup_cycles`` is the
    per-message software envelope of a store loop (loop prologue, flag
    handshake); a raw single-word store costs only the issue slot.  The hop
    latency, per-word issue cost, and both setup constants are calibrated
    jointly against the measured latency-vs-distance table, the 2 GB/s DMA
    plateau, and the ~500-byte DMA/direct-write crossover.
    """

    hop_latency_cycles: float = 1.4402462380301053
    direct_write_issue_cycles: float = 2.0  # per 32-bit word
    direct_write_setup_cycles: float = 91.24626538987681
    dma_setup_cycles: float = 191.2462653898768
    dma_bytes_per_cycle: float = 3.3333333333333335
    sync_flag_poll_cycles: float = 0.0

    def __post_init__(self):
        for name in (
            "hop_latency_cycles",
            "direct_write_issue_cycles",
            "direct_write_setup_cycles",
            "dma_setup_cycles",
            "dma_bytes_per_cycle",
            "sync_flag_poll_cycles",
        ):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")
        # one 64-bit word per cycle is the hardware ceiling
        if self.dma_bytes_per_cycle > 8.0:
            raise ConfigurationError("dma_bytes_per_cycle exceeds 8 bytes/cycle")


@dataclass(frozen=True)
class ELinkConfig:
    """Off-chip link and its mesh-side arbitration.

    The link is 1 byte/cycle each direction; every 4-byte write transaction
    occupies ``transaction_overhead_factor * 4`` link-byte slots, so the
    effective payload rate is the raw rate divided by the overhead factor.
    ``exit_row``/``exit_col`` locate the mesh corner adjacent to the link
    (col ``None`` means the last column).  Arbitration is "exit-proximity":
    writers in the exit column are trunk traffic with absolute priority,
    served round-robin within a window of ``trunk_window`` cores nearest the
    exit row; all other writers share leftover slots in proportion to
    ``col_weight_growth**col * row_weight_decay**row``.
    """

    link_bytes_per_cycle: float = 1.0
    transaction_overhead_factor: float = 4.0
    exit_row: int = 0
    exit_col: int | None = None
    arbitration: str = "exit-proximity"
    trunk_window: int = 5
    row_weight_decay: float = 1.0 / 3.0
    col_weight_growth: float = 2.0

    def __post_init__(self):
        if self.transaction_overhead_factor < 1.0:
            raise ConfigurationError("transaction_overhead_factor must be >= 1")
        if self.arbitration != "exit-proximity":
            raise ConfigurationError(f"unknown arbitration scheme {self.arbitration!r}")
        if self.trunk_window < 1:
            raise ConfigurationError("trunk_window must be >= 1")

    def exit_coord(self, mesh: MeshConfig) -> tuple[int, int]:
        col = self.exit_col if self.exit_col is not None else mesh.cols - 1
        return (self.exit_row, col)

    def payload_bytes_per_second(self, mesh: MeshConfig) -> float:
        """Effective payload rate (150 MB/s at defaults)."""
        return self.link_bytes_per_cycle * mesh.clock_hz / self.transaction_overhead_factor

    def cycles_per_transaction(self) -> float:
        return self.transaction_overhead_factor * 4.0 / self.link_bytes_per_cycle


@dataclass(frozen=True)
class StencilCostModel:
    """Cycle cost of the hand-tuned 5-point stencil inner loop.

    A stripe is 20 points wide; one unrolled loop covers two stripe rows with
    200 fused multiply-adds.  ``loop_penalty_cycles`` is the decrement/branch
    cost at the end of each row pair; ``row_pair_overhead_cycles`` covers
    accumulator spills and pointer arithmetic (calibrated);
    ``stripe_setup_cycles`` is the register preload of the two buffered rows
    when a stripe starts.
    """

    stripe_width: int = 20
    fmadds_per_stripe_pair: int = 200
    loop_penalty_cycles: float = 4.5
    flops_per_fmadd: int = 2
    row_pair_overhead_cycles: float = 6.78938053097346
    stripe_setup_cycles: float = 44.0

    @property
    def pair_efficiency(self) -> float:
        """Ideal-loop efficiency, ~97.8% at defaults."""
        return self.fmadds_per_stripe_pair / (self.fmadds_per_stripe_pair + self.loop_penalty_cycles)


@dataclass(frozen=True)
class MatmulCostModel:
    """Cycle cost of the single-core matrix-multiply inner kernel.

    The 32-wide macro executes 64 flops in 32 cycles (one multiply-add pair
    per cycle); its cost scales linearly with row length.  The per-row terms
    (loop control plus result-row store) are calibrated against measured
    single-core throughput for sizes 8..32.
    """

    cycles_per_macro: float = 32.0
    flops_per_macro: float = 64.0
    row_overhead_cycles: float = 18.973942907494557
    store_cycles_per_word: float = 0.8068305908303978
    round_sync_overhead_cycles: float = 600.0  # per multi-core rotation round

    @property
    def cycles_per_element(self) -> float:
        return self.cycles_per_macro / (self.flops_per_macro / 2.0)


@dataclass(frozen=True)
class CoreMemoryConfig:
    """Per-core scratchpad geometry and shared DRAM size."""

    bank_count: int = 4
    bank_bytes: int = 8192
    shared_bytes: int = 32 * 1024 * 1024

    @property
    def local_bytes(self) -> int:
        return self.bank_count * self.bank_bytes


@dataclass(frozen=True)
class SimConfig:
    """Aggregate machine description; the unit the JSON config maps onto."""

    mesh: MeshConfig = field(default_factory=MeshConfig)
    timing: TimingModel = field(default_factory=TimingModel)
    elink: ELinkConfig = field(default_factory=ELinkConfig)
    stencil: StencilCostModel = field(default_factory=StencilCostModel)
    matmul: MatmulCostModel = field(default_factory=MatmulCostModel)
    memory: CoreMemoryConfig = field(default_factory=CoreMemoryConfig)

    def to_dict(self) -> dict:
        return {
            "mesh": dataclasses.asdict(self.mesh),
            "timing": dataclasses.asdict(self.timing),
            "elink": dataclasses.asdict(self.elink),
            "cost_models": {
                "stencil": dataclasses.asdict(self.stencil),
                "matmul": dataclasses.asdict(self.matmul),
            },
            "memory": dataclasses.asdict(self.memory),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        def build(klass, payload):
            if payload is None:
                return klass()
            known = {f.name for f in dataclasses.fields(klass)}
            unknown = set(payload) - known
            if unknown:
                raise ConfigurationError(f"unknown {klass.__name__} keys: {sorted(unknown)}")
            return klass(**payload)

        cost = data.get("cost_models") or {}
        return cls(
            mesh=build(MeshConfig, data.get("mesh")),
            timing=build(TimingModel, data.get("timing")),
            elink=build(ELinkConfig, data.get("elink")),
            stencil=build(StencilCostModel, cost.get("stencil")),
            matmul=build(MatmulCostModel, cost.get("matmul")),
            memory=build(CoreMemoryConfig, data.get("memory")),
        )

    def dump_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def load_config(path: str | Path | None = None) -> SimConfig:
    """Load a config JSON, or the packaged defaults when *path* is None."""
    if path is None:
        text = resources.files("meshsim").joinpath("data/default_config.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed config JSON: {exc}") from exc
    return SimConfig.from_dict(data)


DEFAULT_CONFIG = SimConfig()
