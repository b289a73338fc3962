"""Mesh topology, dimension-order routing, and analytic transfer timing.

Pure functions over immutable configs; all state mutation lives in the
simulation engine.  Times are computed in clock cycles internally and exposed
in nanoseconds where the public contract asks for wall time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

from .config import MeshConfig, TimingModel
from .errors import BoundsError, DomainError


class Coord(NamedTuple):
    """Mesh node coordinate, (row, col) with (0, 0) in the corner."""

    row: int
    col: int


class NetworkClass(enum.Enum):
    ON_CHIP_WRITE = "on_chip_write"
    OFF_CHIP_WRITE = "off_chip_write"
    READ_REQUEST = "read_request"


class TransferMethod(enum.Enum):
    DIRECT_WRITE = "direct_write"
    DMA = "dma"


@dataclass(frozen=True)
class TransferRequest:
    """One in-flight core-to-core message."""

    src: Coord
    dst: Coord
    byte_count: int
    method: TransferMethod
    network: NetworkClass = NetworkClass.ON_CHIP_WRITE
    issue_time_ns: float = 0.0

    def __post_init__(self):
        if self.byte_count <= 0:
            raise DomainError(f"byte_count must be positive, got {self.byte_count}")


def check_bounds(coord: Coord, mesh: MeshConfig) -> Coord:
    if not (0 <= coord[0] < mesh.rows and 0 <= coord[1] < mesh.cols):
        raise BoundsError(f"coordinate {tuple(coord)} outside {mesh.rows}x{mesh.cols} mesh")
    return Coord(*coord)


def manhattan_distance(a: Coord, b: Coord, mesh: MeshConfig) -> int:
    """Hop count between two nodes: |dr| + |dc|."""
    a = check_bounds(a, mesh)
    b = check_bounds(b, mesh)
    return abs(a.row - b.row) + abs(a.col - b.col)


def route(src: Coord, dst: Coord, mesh: MeshConfig) -> list[Coord]:
    """Dimension-order path from src to dst: all column moves, then all row moves.

    Returns the hops visited after leaving *src*, ending at *dst*; the empty
    list when src == dst.  Path length always equals the Manhattan distance.
    """
    src = check_bounds(src, mesh)
    dst = check_bounds(dst, mesh)
    hops: list[Coord] = []
    r, c = src
    step = 1 if dst.col > c else -1
    while c != dst.col:
        c += step
        hops.append(Coord(r, c))
    step = 1 if dst.row > r else -1
    while r != dst.row:
        r += step
        hops.append(Coord(r, c))
    return hops


def direct_write_cycles(byte_count: int, distance: int, timing: TimingModel, bulk: bool = True) -> float:
    """Cycles for a direct-write message over *distance* hops.

    ``bulk`` includes the per-message software envelope (setup); raw
    single-word stores issued from a kernel skip it.
    """
    if byte_count <= 0:
        raise DomainError("byte_count must be positive")
    words = (byte_count + 3) // 4
    cycles = timing.hop_latency_cycles * distance + words * timing.direct_write_issue_cycles
    if bulk:
        cycles += timing.direct_write_setup_cycles
    return cycles


def dma_cycles(byte_count: int, distance: int, timing: TimingModel) -> float:
    """Cycles for one DMA descriptor's transfer over *distance* hops."""
    if byte_count <= 0:
        raise DomainError("byte_count must be positive")
    return (
        timing.dma_setup_cycles
        + timing.hop_latency_cycles * distance
        + byte_count / timing.dma_bytes_per_cycle
    )


def transfer_cycles(req: TransferRequest, timing: TimingModel, mesh: MeshConfig) -> float:
    distance = manhattan_distance(req.src, req.dst, mesh)
    if req.method is TransferMethod.DIRECT_WRITE:
        return direct_write_cycles(req.byte_count, distance, timing)
    return dma_cycles(req.byte_count, distance, timing)


def transfer_time(req: TransferRequest, timing: TimingModel, mesh: MeshConfig) -> float:
    """End-to-end message time in nanoseconds."""
    return transfer_cycles(req, timing, mesh) * mesh.ns_per_cycle


def crossover_bytes(timing: TimingModel, max_bytes: int = 4096) -> int | None:
    """Smallest message size for which DMA beats direct writes between neighbors.

    Swept over 4-byte-aligned sizes up to *max_bytes*; returns None when no
    crossover exists in that range (flagged by config validation).
    """
    for size in range(4, max_bytes + 1, 4):
        if dma_cycles(size, 1, timing) < direct_write_cycles(size, 1, timing):
            return size
    return None


def validate_timing(timing: TimingModel) -> list[str]:
    """Sanity findings for a timing model; empty list means clean."""
    findings = []
    if crossover_bytes(timing) is None:
        findings.append("no DMA/direct-write crossover below 4096 bytes")
    direct_peak = 4.0 / timing.direct_write_issue_cycles
    if direct_peak > timing.dma_bytes_per_cycle:
        findings.append("direct-write peak rate exceeds DMA peak rate")
    return findings
