"""Per-core resources: banked scratchpad, flat global address map, DMA
descriptors, event timers, and scratchpad region layouts.

Memory content is a flat byte array per owner; bank structure is tracked for
layout validation only (bank-conflict timing is folded into the calibrated
kernel cost models).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .config import CoreMemoryConfig, MeshConfig
from .errors import AddressError, DescriptorError, LayoutError, MemoryFault, OrderingError
from .mesh import Coord, check_bounds

# Global map: 1 MB window per core starting at CORE_WINDOW, cores numbered
# row-major from 1 so address 0 stays unmapped; shared DRAM has its own base.
CORE_WINDOW_BYTES = 1 << 20
SHARED_BASE = 0x3000_0000
SHARED_OWNER = "shared"


class Scratchpad:
    """One core's local memory: byte-addressable, organized as equal banks."""

    def __init__(self, memcfg: CoreMemoryConfig = CoreMemoryConfig()):
        self.bank_bytes = memcfg.bank_bytes
        self.size = memcfg.local_bytes
        self.data = np.zeros(self.size, dtype=np.uint8)

    def bank_of(self, addr: int) -> int:
        if not 0 <= addr < self.size:
            raise AddressError(f"local address {addr:#x} outside scratchpad")
        return addr // self.bank_bytes

    def read(self, addr: int, length: int) -> bytes:
        self._check_range(addr, length)
        return self.data[addr : addr + length].tobytes()

    def write(self, addr: int, payload: bytes) -> None:
        self._check_range(addr, len(payload))
        self.data[addr : addr + len(payload)] = np.frombuffer(bytes(payload), dtype=np.uint8)

    def f32_view(self, addr: int, count: int) -> np.ndarray:
        """Mutable float32 view of a scratchpad range (addr must be 4-aligned)."""
        self._check_range(addr, count * 4)
        if addr % 4:
            raise AddressError(f"unaligned float32 view at {addr:#x}")
        return self.data[addr : addr + count * 4].view(np.float32)

    def _check_range(self, addr: int, length: int) -> None:
        if length < 0 or not (0 <= addr and addr + length <= self.size):
            raise AddressError(
                f"range [{addr:#x}, {addr + length:#x}) outside {self.size // 1024} KB scratchpad"
            )


class AddressMap:
    """Flat global address space over all cores plus the shared DRAM region.

    encode/decode are exact inverses; decoding an address in no window
    raises :class:`MemoryFault`.
    """

    def __init__(self, mesh: MeshConfig, memcfg: CoreMemoryConfig = CoreMemoryConfig()):
        self.mesh = mesh
        self.memcfg = memcfg
        if mesh.rows * mesh.cols * CORE_WINDOW_BYTES + CORE_WINDOW_BYTES > SHARED_BASE:
            raise LayoutError("core windows overlap the shared region")

    def core_base(self, coord: Coord) -> int:
        coord = check_bounds(coord, self.mesh)
        index = coord.row * self.mesh.cols + coord.col
        return (index + 1) * CORE_WINDOW_BYTES

    def encode(self, coord: Coord, local_addr: int) -> int:
        if not 0 <= local_addr < self.memcfg.local_bytes:
            raise AddressError(f"local address {local_addr:#x} outside scratchpad")
        return self.core_base(coord) + local_addr

    def encode_shared(self, offset: int) -> int:
        if not 0 <= offset < self.memcfg.shared_bytes:
            raise AddressError(f"shared offset {offset:#x} outside {self.memcfg.shared_bytes} bytes")
        return SHARED_BASE + offset

    def decode(self, global_addr: int) -> tuple[Coord | str, int]:
        """Map a global address to (owner, offset); owner is a Coord or "shared"."""
        if SHARED_BASE <= global_addr < SHARED_BASE + self.memcfg.shared_bytes:
            return SHARED_OWNER, global_addr - SHARED_BASE
        index, offset = divmod(global_addr, CORE_WINDOW_BYTES)
        index -= 1
        n_cores = self.mesh.rows * self.mesh.cols
        if 0 <= index < n_cores and 0 <= offset < self.memcfg.local_bytes:
            return Coord(index // self.mesh.cols, index % self.mesh.cols), offset
        raise MemoryFault(f"unmapped global address {global_addr:#x}")

    def decode_range(self, global_addr: int, length: int) -> tuple[Coord | str, int]:
        """Decode a range that must lie entirely within one owner."""
        if length <= 0:
            raise AddressError("range length must be positive")
        owner, offset = self.decode(global_addr)
        owner_end, _ = self.decode(global_addr + length - 1)
        if owner_end != owner:
            raise AddressError(
                f"range [{global_addr:#x}, {global_addr + length:#x}) spans owners"
            )
        return owner, offset


class DmaMode(enum.Enum):
    BLOCKING = "blocking"
    NON_BLOCKING = "non_blocking"


VALID_WORD_SIZES = (1, 2, 4, 8)


@dataclass(frozen=True)
class DmaDescriptor:
    """One (possibly 2D, possibly chained) DMA transfer description.

    Addresses are global.  ``inner_count`` words of ``word_size`` bytes per
    row, ``outer_count`` rows, row starts separated by the strides (ignored
    for 1D transfers where outer_count == 1).
    """

    channel: int
    src: int
    dst: int
    word_size: int = 4
    inner_count: int = 1
    outer_count: int = 1
    src_stride: int = 0
    dst_stride: int = 0
    mode: DmaMode = DmaMode.NON_BLOCKING
    chain: "DmaDescriptor | None" = None

    def __post_init__(self):
        if self.channel not in (0, 1):
            raise DescriptorError(f"channel must be 0 or 1, got {self.channel}")
        if self.word_size not in VALID_WORD_SIZES:
            raise DescriptorError(f"word_size must be one of {VALID_WORD_SIZES}")
        if self.inner_count < 1 or self.outer_count < 1:
            raise DescriptorError("inner_count and outer_count must be >= 1")
        if self.outer_count > 1 and (self.src_stride < 0 or self.dst_stride < 0):
            raise DescriptorError("2D strides must be non-negative")

    @property
    def row_bytes(self) -> int:
        return self.inner_count * self.word_size

    @property
    def payload_bytes(self) -> int:
        return self.row_bytes * self.outer_count

    def segments(self) -> list["DmaDescriptor"]:
        """The chain flattened in execution order."""
        out, d = [], self
        while d is not None:
            out.append(d)
            d = d.chain
        return out


@dataclass
class EventTimer:
    """One of the two per-core cycle counters."""

    start_cycles: float | None = None
    elapsed_cycles: float | None = None

    def start(self, now: float) -> None:
        self.start_cycles = now
        self.elapsed_cycles = None

    def stop(self, now: float) -> float:
        if self.start_cycles is None:
            raise OrderingError("timer stopped before start")
        if now < self.start_cycles:
            raise OrderingError("timer stop precedes start")
        self.elapsed_cycles = now - self.start_cycles
        return self.elapsed_cycles


@dataclass(frozen=True)
class Region:
    """Named scratchpad region."""

    name: str
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length

    def banks(self, bank_bytes: int = 8192) -> range:
        return range(self.start // bank_bytes, (self.end - 1) // bank_bytes + 1)


@dataclass
class BankLayout:
    """A core's scratchpad partitioning; validated for overlap and bounds."""

    regions: list[Region] = field(default_factory=list)
    local_bytes: int = 32768

    def add(self, name: str, start: int, length: int) -> Region:
        region = Region(name, start, length)
        self.regions.append(region)
        return region

    def region(self, name: str) -> Region:
        for r in self.regions:
            if r.name == name:
                return r
        raise KeyError(name)

    def validate(self) -> None:
        for r in self.regions:
            if r.length <= 0:
                raise LayoutError(f"region {r.name} has non-positive length")
            if r.start < 0 or r.end > self.local_bytes:
                raise LayoutError(
                    f"region {r.name} [{r.start:#x}, {r.end:#x}) outside scratchpad"
                )
        ordered = sorted(self.regions, key=lambda r: r.start)
        for a, b in zip(ordered, ordered[1:]):
            if a.end > b.start:
                raise LayoutError(f"regions {a.name} and {b.name} overlap")

    def total_bytes(self) -> int:
        return sum(r.length for r in self.regions)


def matmul_bank_layout() -> BankLayout:
    """The scratchpad map used by the 32x32 multi-core matmul kernel.

    Operands sit in the upper two data banks with 2 KB rotation buffers
    adjacent to each, the product in the last bank; code plus stack take the
    first 16 KB.
    """
    layout = BankLayout()
    layout.add("code", 0x0000, 0x2C00)  # ~11 KB
    layout.add("flags", 0x2C00, 0x40)
    layout.add("stack", 0x3000, 0x1000)
    layout.add("a", 0x4000, 0x1000)
    layout.add("a_buffer", 0x5000, 0x0800)
    layout.add("b", 0x5800, 0x1000)
    layout.add("b_buffer", 0x6800, 0x0800)
    layout.add("c", 0x7000, 0x1000)
    layout.validate()
    return layout


def stencil_bank_layout(block_rows: int, block_cols: int) -> BankLayout:
    """Scratchpad map for a stencil block stored with its one-point halo ring."""
    grid_bytes = (block_rows + 2) * (block_cols + 2) * 4
    layout = BankLayout()
    layout.add("code", 0x0000, 0x1800)
    layout.add("stack", 0x1800, 0x0700)
    layout.add("flags", 0x1F00, 0x0100)
    layout.add("grid", 0x2000, grid_bytes)
    layout.validate()
    return layout
