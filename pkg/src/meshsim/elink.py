"""Off-chip link contention: slot accounting for concurrent writers.

The link drains one 4-byte write transaction per ``overhead_factor * 4``
link-byte slots, capping payload throughput at a quarter of the raw rate.
Position decides who gets those slots.  Writers in the exit column inject
straight onto the exit trunk and carry absolute priority over everything
merging in from the rows; the trunk itself can track only ``trunk_window``
sources nearest the exit row, which it serves round-robin — cores beyond the
window, and every off-trunk writer while the trunk is busy, get nothing.
With no trunk traffic, row writers share slots in proportion to a static
exit-proximity weight (column proximity dominating row proximity).

This is a steady-state model: writer sets are fixed for the experiment
duration and every writer is assumed to saturate its injection port, so slot
totals follow in closed form.  ``slot_loop_reference`` replays the same
arbitration slot by slot for cross-checking at small scales.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import SimConfig
from .errors import DomainError
from .mesh import Coord, check_bounds


@dataclass(frozen=True)
class UtilizationRecord:
    """One writer's share of the off-chip link over an experiment."""

    core: Coord
    completed_iterations: int
    utilization: float
    slots: int
    payload_bytes: int


def _exit(config: SimConfig) -> Coord:
    return Coord(*config.elink.exit_coord(config.mesh))


def service_weight(coord: Coord, config: SimConfig) -> float:
    """Static share weight for off-trunk writers; higher nearer the exit corner."""
    cfg = config.elink
    exit_coord = _exit(config)
    row_dist = abs(coord.row - exit_coord.row)
    return (cfg.col_weight_growth ** coord.col) * (cfg.row_weight_decay ** row_dist)


def split_slots(writers: list[Coord], total_slots: int, config: SimConfig) -> dict[Coord, int]:
    """Deterministic slot allocation for a saturating writer set."""
    exit_coord = _exit(config)
    trunk = [w for w in writers if w.col == exit_coord.col]
    grants = {w: 0 for w in writers}
    if trunk:
        trunk.sort(key=lambda w: (abs(w.row - exit_coord.row), w.row, w.col))
        window = trunk[: config.elink.trunk_window]
        share = total_slots // len(window)
        for w in window:
            grants[w] = share
        return grants
    weights = {w: service_weight(w, config) for w in writers}
    denom = sum(weights.values())
    for w in writers:
        grants[w] = int(total_slots * weights[w] / denom)
    return grants


def contention_experiment(
    writers,
    block_bytes: int = 2048,
    duration_s: float = 2.0,
    config: SimConfig | None = None,
) -> list[UtilizationRecord]:
    """Sustained-writer benchmark: every core in *writers* streams
    *block_bytes* blocks of 4-byte stores for *duration_s* simulated seconds.

    Returns one record per writer (row-major order) with completed block
    count and link-slot share.
    """
    config = config or SimConfig()
    if duration_s <= 0:
        raise DomainError("duration must be positive")
    if block_bytes <= 0:
        raise DomainError("block_bytes must be positive")
    coords = [check_bounds(Coord(*w), config.mesh) for w in writers]
    if len(set(coords)) != len(coords):
        raise DomainError("duplicate writer coordinates")
    if not coords:
        return []

    cycles_per_txn = config.elink.cycles_per_transaction()
    total_slots = int(duration_s * config.mesh.clock_hz / cycles_per_txn)
    txns_per_block = (block_bytes + 3) // 4

    grants = split_slots(coords, total_slots, config)
    records = []
    for coord in sorted(coords):
        slots = grants[coord]
        records.append(
            UtilizationRecord(
                core=coord,
                completed_iterations=slots // txns_per_block,
                utilization=slots / total_slots,
                slots=slots,
                payload_bytes=slots * 4,
            )
        )
    return records


def single_writer_bytes_per_second(config: SimConfig | None = None) -> float:
    """Sustained payload rate of one uncontended writer (the link ceiling)."""
    config = config or SimConfig()
    records = contention_experiment([Coord(0, 0)], duration_s=1.0, config=config)
    return records[0].payload_bytes / 1.0


def slot_loop_reference(writers, n_slots: int, config: SimConfig | None = None) -> dict[Coord, int]:
    """Slot-by-slot replay of the arbitration (test oracle for small n).

    Trunk actives rotate a grant token; off-trunk actives run weighted
    round-robin with credit accounting.  Matches :func:`split_slots` to
    within one slot per writer.
    """
    config = config or SimConfig()
    coords = [check_bounds(Coord(*w), config.mesh) for w in writers]
    if not coords:
        return {}
    exit_coord = _exit(config)
    grants = {w: 0 for w in coords}

    trunk = sorted(
        (w for w in coords if w.col == exit_coord.col),
        key=lambda w: (abs(w.row - exit_coord.row), w.row, w.col),
    )[: config.elink.trunk_window]
    if trunk:
        for slot in range(n_slots):
            grants[trunk[slot % len(trunk)]] += 1
        return grants

    weights = {w: service_weight(w, config) for w in coords}
    denom = sum(weights.values())
    credit = {w: 0.0 for w in coords}
    for _ in range(n_slots):
        for w in coords:
            credit[w] += weights[w] / denom
        winner = max(coords, key=lambda w: (credit[w], -w.row, -w.col))
        credit[winner] -= 1.0
        grants[winner] += 1
    return grants
