"""Topology, routing, and the calibrated transfer-time model."""

import dataclasses

import pytest

from meshsim.calibrate import fit_timing_model
from meshsim.config import MeshConfig, SimConfig, TimingModel
from meshsim.errors import BoundsError, DomainError
from meshsim.mesh import (
    Coord,
    TransferMethod,
    TransferRequest,
    crossover_bytes,
    dma_cycles,
    direct_write_cycles,
    manhattan_distance,
    route,
    transfer_time,
    validate_timing,
)
from meshsim import reference as ref

MESH = MeshConfig()


def test_manhattan_distance_reference_pairs():
    assert manhattan_distance(Coord(0, 0), Coord(0, 1), MESH) == 1
    assert manhattan_distance(Coord(0, 0), Coord(7, 7), MESH) == 14
    assert manhattan_distance(Coord(3, 5), Coord(3, 5), MESH) == 0


def test_manhattan_distance_bounds():
    with pytest.raises(BoundsError):
        manhattan_distance(Coord(0, 0), Coord(8, 0), MESH)
    with pytest.raises(BoundsError):
        manhattan_distance(Coord(-1, 0), Coord(0, 0), MESH)


def test_route_examples():
    assert route(Coord(0, 0), Coord(0, 2), MESH) == [Coord(0, 1), Coord(0, 2)]
    # column moves first, then row moves
    assert route(Coord(0, 0), Coord(2, 1), MESH) == [Coord(0, 1), Coord(1, 1), Coord(2, 1)]
    assert route(Coord(4, 4), Coord(4, 4), MESH) == []


def test_route_length_equals_distance_exhaustive():
    coords = [Coord(r, c) for r in range(8) for c in range(8)]
    for a in coords:
        for b in coords:
            path = route(a, b, MESH)
            assert len(path) == manhattan_distance(a, b, MESH)
            prev = a
            for hop in path:
                assert manhattan_distance(prev, hop, MESH) == 1
                prev = hop
            if path:
                assert path[-1] == b


def test_transfer_request_validation():
    with pytest.raises(DomainError):
        TransferRequest(Coord(0, 0), Coord(0, 1), 0, TransferMethod.DMA)


def _per_transfer_ns(config: SimConfig, distance: int) -> float:
    dst = Coord(0, distance) if distance < 8 else Coord(7, 7)
    req = TransferRequest(Coord(0, 0), dst, 80, TransferMethod.DIRECT_WRITE)
    return transfer_time(req, config.timing, config.mesh) / 20.0


def test_latency_table_within_five_percent(config):
    for src, dst, distance, expected in ref.LATENCY_VS_DISTANCE:
        req = TransferRequest(Coord(*src), Coord(*dst), 80, TransferMethod.DIRECT_WRITE)
        measured = transfer_time(req, config.timing, config.mesh) / 20.0
        assert measured == pytest.approx(expected, rel=ref.LATENCY_TOLERANCE), (distance, measured)


def test_latency_spread_matches_reference(config):
    spread = _per_transfer_ns(config, 14) - _per_transfer_ns(config, 1)
    assert spread == pytest.approx(12.57 - 11.12, rel=0.10)


def test_transfer_time_monotonicity(config):
    timing = config.timing
    for method in (TransferMethod.DIRECT_WRITE, TransferMethod.DMA):
        last = 0.0
        for size in range(4, 4096, 4):
            req = TransferRequest(Coord(0, 0), Coord(0, 1), size, method)
            t = transfer_time(req, timing, config.mesh)
            assert t > last
            last = t
    # non-decreasing in distance
    for size in (4, 80, 4096):
        times = [
            transfer_time(
                TransferRequest(Coord(0, 0), Coord(d % 8, d // 8 * 7), size, TransferMethod.DMA),
                timing,
                config.mesh,
            )
            for d in range(1, 8)
        ]
        assert all(b >= a for a, b in zip(times, times[1:]))


def test_transfer_time_deterministic(config):
    req = TransferRequest(Coord(1, 2), Coord(5, 6), 1234, TransferMethod.DMA)
    a = transfer_time(req, config.timing, config.mesh)
    b = transfer_time(req, config.timing, config.mesh)
    assert a == b


def test_dma_plateau(config):
    req = TransferRequest(Coord(0, 0), Coord(0, 1), 65536, TransferMethod.DMA)
    rate = 65536 / (transfer_time(req, config.timing, config.mesh) * 1e-9)
    assert rate == pytest.approx(ref.DMA_PLATEAU_BYTES_PER_S, rel=ref.DMA_PLATEAU_TOLERANCE)


def test_crossover_brute_force_matches(config):
    """Independent sweep: smallest size where the DMA form beats direct writes."""
    timing = config.timing
    expected = None
    for size in range(4, 4097, 4):
        if dma_cycles(size, 1, timing) < direct_write_cycles(size, 1, timing):
            expected = size
            break
    assert expected is not None
    assert crossover_bytes(timing) == expected
    lo, hi = ref.CROSSOVER_WINDOW_BYTES
    assert lo <= expected <= hi


def test_crossover_no_setup_limit(config):
    timing = dataclasses.replace(config.timing, dma_setup_cycles=0.0)
    # with no setup the DMA wins from the smallest message the sweep visits
    assert crossover_bytes(timing) == 4


def test_crossover_never_sentinel():
    timing = TimingModel(dma_setup_cycles=1e9)
    assert crossover_bytes(timing) is None
    assert any("crossover" in finding for finding in validate_timing(timing))


def test_calibration_reproduces_defaults(config):
    fitted = fit_timing_model()
    for field in dataclasses.fields(TimingModel):
        assert getattr(fitted, field.name) == pytest.approx(
            getattr(config.timing, field.name), abs=1e-12
        ), field.name
