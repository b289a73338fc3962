"""Experiment definitions: each kind runs simulations, collects datapoints,
and grades them against the embedded reference measurements.

Results are plain data (JSON-serializable) so runs can be saved and fed to
``meshsim report`` later.  Everything here is deterministic: fixed seeds,
fixed sweep grids, no wall-clock anywhere in the output.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import reference as ref
from ..config import SimConfig
from ..elink import contention_experiment
from ..errors import ConfigurationError
from ..kernels.matmul import (
    cannon_multicore,
    matmul_reference,
    offchip_matmul,
    single_core_gflops as matmul_single_gflops,
)
from ..kernels.stencil import (
    StencilWeights,
    stencil_distributed,
    stencil_reference,
    single_core_gflops as stencil_single_gflops,
)
from ..mesh import (
    Coord,
    TransferMethod,
    TransferRequest,
    crossover_bytes,
    transfer_time,
)
from ..runtime import Workgroup

KINDS = (
    "bandwidth",
    "latency",
    "elink",
    "stencil",
    "matmul",
    "weak_scaling",
    "strong_scaling",
)

# Optional check groups a report marks "skipped" when no result exercises them.
OPTIONAL_GROUPS = {
    "stencil-shape-band": "per-shape single-core stencil rates against the published band",
    "matmul-offchip-large": "paged matmul at the 1024 and 1536 sizes",
}

_BANDWIDTH_SIZES = [4 << i for i in range(15)]  # 4 B .. 64 KB
_LATENCY_MESSAGE_BYTES = 80
_STENCIL_WEIGHTS = StencilWeights(0.1, 0.5, 0.15, 0.1, 0.15)
_DATA_SEED = 20140331


@dataclass
class Check:
    """One reference comparison row."""

    dataset: str
    name: str
    measured: float
    reference: str
    passed: bool
    mandatory: bool = True
    group: str = ""
    detail: str = ""

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run; validated before any simulation starts."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}")


@dataclass
class ExperimentResult:
    kind: str
    params: dict
    datapoints: list[dict]
    checks: list[Check]

    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.mandatory)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "datapoints": self.datapoints,
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        # construction order is deterministic; keep it so CSV columns derived
        # from saved results match those from fresh runs
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentResult":
        return cls(
            kind=data["kind"],
            params=data.get("params", {}),
            datapoints=data.get("datapoints", []),
            checks=[Check(**c) for c in data.get("checks", [])],
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentResult":
        return cls.from_dict(json.loads(Path(path).read_text()))


def datapoints_csv(result: "ExperimentResult") -> str:
    """Raw datapoints as CSV (header + one row per point), for external plotting."""
    import csv
    import io

    if not result.datapoints:
        return ""
    columns: list[str] = []
    for point in result.datapoints:
        for key in point:
            if key not in columns:
                columns.append(key)
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=columns, restval="", lineterminator="\n")
    writer.writeheader()
    for point in result.datapoints:
        writer.writerow(point)
    return out.getvalue()


def _rel_check(dataset, name, measured, target, tol, mandatory=True, group="") -> Check:
    passed = abs(measured - target) <= tol * abs(target)
    return Check(
        dataset,
        name,
        measured,
        f"{target:g} ±{tol:.0%}",
        passed,
        mandatory,
        group,
    )


def _window_check(dataset, name, measured, lo, hi, mandatory=True, group="") -> Check:
    return Check(dataset, name, measured, f"[{lo:g}, {hi:g}]", lo <= measured <= hi, mandatory, group)


def _bool_check(dataset, name, passed, detail="", mandatory=True) -> Check:
    return Check(dataset, name, float(passed), "true", bool(passed), mandatory, detail=detail)


# --- bandwidth / latency ------------------------------------------------------


def _message_ns(config: SimConfig, size: int, method: TransferMethod, distance_pair=None) -> float:
    src, dst = distance_pair or (Coord(0, 0), Coord(0, 1))
    req = TransferRequest(Coord(*src), Coord(*dst), size, method)
    return transfer_time(req, config.timing, config.mesh)


def run_bandwidth(params: dict, config: SimConfig) -> ExperimentResult:
    """Message-size sweep for both transfer methods between adjacent cores."""
    datapoints = []
    curves = {}
    for method in (TransferMethod.DIRECT_WRITE, TransferMethod.DMA):
        rates = []
        for size in _BANDWIDTH_SIZES:
            ns = _message_ns(config, size, method)
            rate = size / (ns * 1e-9)
            rates.append(rate)
            datapoints.append(
                {
                    "method": method.value,
                    "message_bytes": size,
                    "transfer_ns": ns,
                    "bytes_per_s": rate,
                }
            )
        curves[method] = rates

    checks = []
    plateau = curves[TransferMethod.DMA][-1]
    checks.append(
        _rel_check(
            "dma-plateau",
            "DMA sustained rate at 64 KB (bytes/s)",
            plateau,
            ref.DMA_PLATEAU_BYTES_PER_S,
            ref.DMA_PLATEAU_TOLERANCE,
        )
    )
    cross = crossover_bytes(config.timing)
    lo, hi = ref.CROSSOVER_WINDOW_BYTES
    checks.append(
        _window_check(
            "dma-crossover", "DMA/direct crossover (bytes)", float(cross or -1), lo, hi
        )
    )
    for method, rates in curves.items():
        monotone = all(b >= a for a, b in zip(rates, rates[1:]))
        checks.append(
            _bool_check(
                "bandwidth-monotone",
                f"{method.value} bandwidth non-decreasing in size",
                monotone,
            )
        )
    return ExperimentResult("bandwidth", params, datapoints, checks)


def run_latency(params: dict, config: SimConfig) -> ExperimentResult:
    """Amortized per-transfer latency for the reference node pairs, plus the
    small-message latency curves for both methods."""
    datapoints = []
    checks = []
    words = _LATENCY_MESSAGE_BYTES // 4
    for src, dst, distance, expected_ns in ref.LATENCY_VS_DISTANCE:
        ns = _message_ns(
            config, _LATENCY_MESSAGE_BYTES, TransferMethod.DIRECT_WRITE, (src, dst)
        )
        per_transfer = ns / words
        datapoints.append(
            {
                "src": list(src),
                "dst": list(dst),
                "distance_hops": distance,
                "per_transfer_ns": per_transfer,
                "reference_ns": expected_ns,
            }
        )
        checks.append(
            _rel_check(
                "latency-vs-distance",
                f"per-transfer ns at distance {distance} ({src}->{dst})",
                per_transfer,
                expected_ns,
                ref.LATENCY_TOLERANCE,
            )
        )
    for method in (TransferMethod.DIRECT_WRITE, TransferMethod.DMA):
        for size in [s for s in _BANDWIDTH_SIZES if s <= 2048]:
            datapoints.append(
                {
                    "method": method.value,
                    "message_bytes": size,
                    "transfer_ns": _message_ns(config, size, method),
                }
            )
    return ExperimentResult("latency", params, datapoints, checks)


# --- off-chip link -------------------------------------------------------------


def _writer_set(n: int, config: SimConfig) -> list[Coord]:
    if n == 4:
        return [Coord(0, 0), Coord(0, 1), Coord(1, 0), Coord(1, 1)]
    coords = [Coord(r, c) for r in range(config.mesh.rows) for c in range(config.mesh.cols)]
    if not 1 <= n <= len(coords):
        raise ConfigurationError(f"writer count {n} outside 1..{len(coords)}")
    return coords[:n]


def run_elink(params: dict, config: SimConfig) -> ExperimentResult:
    writers = int(params.get("writers", 4))
    duration = float(params.get("duration_s", 2.0))
    block = int(params.get("block_bytes", 2048))
    records = contention_experiment(_writer_set(writers, config), block, duration, config)
    datapoints = [
        {
            "core": list(r.core),
            "iterations": r.completed_iterations,
            "utilization_fraction": r.utilization,
            "payload_bytes": r.payload_bytes,
        }
        for r in records
    ]
    checks = []
    total_util = sum(r.utilization for r in records)
    checks.append(
        _bool_check(
            "elink-conservation",
            "utilization sum <= 1",
            total_util <= 1.0 + 1e-9,
            detail=f"sum={total_util:.6f}",
        )
    )
    if writers == 1:
        rate = records[0].payload_bytes / duration
        checks.append(
            _rel_check(
                "elink-single-writer",
                "single-writer payload rate (bytes/s)",
                rate,
                ref.ELINK_PAYLOAD_BYTES_PER_S,
                ref.ELINK_RATE_TOLERANCE,
            )
        )
    if writers == 4:
        utils = {tuple(r.core): r.utilization for r in records}
        ordered = sorted(utils.values(), reverse=True)
        checks.append(
            _bool_check(
                "elink-4writer-ordering",
                "four utilizations strictly ordered",
                all(a > b for a, b in zip(ordered, ordered[1:])),
                detail=f"utils={ordered}",
            )
        )
        checks.append(
            _bool_check(
                "elink-4writer-sum",
                f"utilization sum >= {ref.ELINK_4WRITER_MIN_TOTAL}",
                total_util >= ref.ELINK_4WRITER_MIN_TOTAL,
                detail=f"sum={total_util:.4f}",
            )
        )
        row0 = min(utils[(0, 0)], utils[(0, 1)])
        row1 = max(utils[(1, 0)], utils[(1, 1)])
        checks.append(
            _bool_check(
                "elink-4writer-rows",
                "row-0 writers strictly above row-1 writers",
                row0 > row1,
            )
        )
    if writers == config.mesh.rows * config.mesh.cols:
        exit_row, exit_col = config.elink.exit_coord(config.mesh)
        top = [
            Coord(exit_row + i, exit_col) for i in range(ref.ELINK_64WRITER_TOP_COUNT)
        ]
        utils = {r.core: r.utilization for r in records}
        for coord in top:
            measured = utils.get(coord, 0.0)
            lo = ref.ELINK_64WRITER_TOP_SHARE - ref.ELINK_64WRITER_TOP_TOLERANCE
            hi = ref.ELINK_64WRITER_TOP_SHARE + ref.ELINK_64WRITER_TOP_TOLERANCE
            checks.append(
                _window_check(
                    "elink-64writer-top",
                    f"utilization of exit-column core {tuple(coord)}",
                    measured,
                    lo,
                    hi,
                )
            )
        starved = sum(1 for r in records if r.completed_iterations == 0)
        checks.append(
            _bool_check(
                "elink-64writer-starved",
                f">= {ref.ELINK_64WRITER_MIN_STARVED} cores complete zero iterations",
                starved >= ref.ELINK_64WRITER_MIN_STARVED,
                detail=f"starved={starved}",
            )
        )
    return ExperimentResult("elink", {**params, "writers": writers}, datapoints, checks)


# --- stencil --------------------------------------------------------------------


def _parse_cores(value, default=(8, 8)) -> tuple[int, int]:
    if value is None:
        return default
    if isinstance(value, (list, tuple)):
        return int(value[0]), int(value[1])
    r, _, c = str(value).partition("x")
    return int(r), int(c)


def run_stencil(params: dict, config: SimConfig) -> ExperimentResult:
    """Sustained-rate measurements: single core, replicated blocks, and the
    full halo-exchange run, at the published per-core block shape."""
    variant = params.get("variant", "all")
    iters = int(params.get("iters", ref.STENCIL_ITERATIONS))
    block_rows, block_cols = ref.STENCIL_PERF_BLOCK
    wg_rows, wg_cols = _parse_cores(params.get("cores"))
    rows = int(params.get("rows", block_rows * wg_rows))
    cols = int(params.get("cols", block_cols * wg_cols))
    workgroup = Workgroup(Coord(0, 0), wg_rows, wg_cols)

    rng = np.random.default_rng(_DATA_SEED)
    grid = rng.integers(-8, 9, size=(rows, cols)).astype(np.float32)

    datapoints = []
    checks = []
    lo, hi = ref.STENCIL_SINGLE_CORE_BAND

    if variant in ("single", "all"):
        gflops = stencil_single_gflops(rows // wg_rows, cols // wg_cols, config)
        datapoints.append(
            {
                "variant": "single",
                "rows": rows // wg_rows,
                "cols": cols // wg_cols,
                "iterations": iters,
                "gflops": gflops,
            }
        )
        checks.append(
            _window_check(
                "stencil-single-core",
                f"single-core rate for {rows // wg_rows}x{cols // wg_cols} (GFLOPS)",
                gflops,
                lo,
                hi,
            )
        )
    if variant in ("shapes",):
        for shape in ((80, 20), (20, 80), (40, 40), (60, 60), (100, 100)):
            gflops = stencil_single_gflops(*shape, config)
            datapoints.append(
                {"variant": "single", "rows": shape[0], "cols": shape[1], "gflops": gflops}
            )
            checks.append(
                _window_check(
                    "stencil-shape-band",
                    f"single-core rate for {shape[0]}x{shape[1]} (GFLOPS)",
                    gflops,
                    lo,
                    hi,
                    mandatory=False,
                    group="stencil-shape-band",
                )
            )
    if variant in ("nocomm", "all"):
        run = stencil_distributed(
            grid, _STENCIL_WEIGHTS, iters, workgroup, config, communicate=False
        )
        datapoints.append(
            {
                "variant": "nocomm",
                "rows": rows,
                "cols": cols,
                "cores": workgroup.size,
                "iterations": iters,
                "simulated_ns": run.ns,
                "gflops": run.gflops,
            }
        )
        checks.append(
            _rel_check(
                "stencil-nocomm",
                f"replicated-block aggregate on {workgroup.size} cores (GFLOPS)",
                run.gflops,
                ref.STENCIL_64CORE_NOCOMM_GFLOPS,
                ref.STENCIL_64CORE_NOCOMM_TOLERANCE,
            )
        )
    if variant in ("comm", "all"):
        events_path = params.get("events_path")
        run = stencil_distributed(
            grid, _STENCIL_WEIGHTS, iters, workgroup, config, log_events=bool(events_path)
        )
        if events_path:
            run.host.simulator.dump_event_log(events_path)
        expected = stencil_reference(
            grid, _STENCIL_WEIGHTS, iters, blocks=(wg_rows, wg_cols)
        )
        exact = bool(np.array_equal(run.grid, expected))
        datapoints.append(
            {
                "variant": "comm",
                "rows": rows,
                "cols": cols,
                "cores": workgroup.size,
                "iterations": iters,
                "simulated_ns": run.ns,
                "gflops": run.gflops,
                "matches_reference": exact,
            }
        )
        checks.append(
            _rel_check(
                "stencil-comm",
                f"halo-exchange aggregate on {workgroup.size} cores (GFLOPS)",
                run.gflops,
                ref.STENCIL_64CORE_COMM_GFLOPS,
                ref.STENCIL_64CORE_COMM_TOLERANCE,
            )
        )
        checks.append(
            _bool_check("stencil-exact", "assembled grid equals the reference oracle", exact)
        )
    return ExperimentResult(
        "stencil",
        {**params, "variant": variant, "rows": rows, "cols": cols},
        datapoints,
        checks,
    )


# --- matmul ---------------------------------------------------------------------


def _random_operands(m: int, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(_DATA_SEED + m * 13 + n * 7 + k)
    a = rng.integers(-8, 9, size=(m, n)).astype(np.float32)
    b = rng.integers(-8, 9, size=(n, k)).astype(np.float32)
    return a, b


def run_matmul(params: dict, config: SimConfig) -> ExperimentResult:
    mode = params.get("mode", "multicore")
    datapoints = []
    checks = []

    if mode == "single":
        for size, target in sorted(ref.MATMUL_SINGLE_CORE_GFLOPS.items()):
            gflops = matmul_single_gflops(size, config)
            datapoints.append({"mode": "single", "size": size, "gflops": gflops})
            checks.append(
                _rel_check(
                    "matmul-single-core",
                    f"single-core {size}x{size}x{size} (GFLOPS)",
                    gflops,
                    target,
                    ref.MATMUL_SINGLE_CORE_TOLERANCE,
                )
            )
    elif mode == "multicore":
        wg_rows, wg_cols = _parse_cores(params.get("cores"))
        size = int(params.get("size", 256))
        workgroup = Workgroup(Coord(0, 0), wg_rows, wg_cols)
        a, b = _random_operands(size, size, size)
        events_path = params.get("events_path")
        run = cannon_multicore(a, b, workgroup, config, log_events=bool(events_path))
        if events_path:
            run.host.simulator.dump_event_log(events_path)
        exact = bool(np.array_equal(run.c, matmul_reference(a, b)))
        block = size // wg_rows
        datapoints.append(
            {
                "mode": "multicore",
                "size": size,
                "cores": f"{wg_rows}x{wg_cols}",
                "block": block,
                "simulated_ns": run.ns,
                "gflops": run.gflops,
                "matches_reference": exact,
            }
        )
        checks.append(
            _bool_check("matmul-exact", f"{size} result equals the reference oracle", exact)
        )
        target = None
        if (wg_rows, wg_cols) == (8, 8):
            target = ref.MATMUL_8X8_GFLOPS.get(block)
        elif (wg_rows, wg_cols) == (2, 2) and block == 32:
            target = ref.MATMUL_2X2_32_GFLOPS
        elif (wg_rows, wg_cols) == (4, 4) and block == 32:
            target = ref.MATMUL_4X4_32_GFLOPS
        if target is not None:
            checks.append(
                _rel_check(
                    "matmul-multicore",
                    f"{size} on {wg_rows}x{wg_cols} cores (GFLOPS)",
                    run.gflops,
                    target,
                    ref.MATMUL_8X8_TOLERANCE,
                )
            )
    elif mode == "offchip":
        size = int(params.get("size", 512))
        wg_rows, wg_cols = _parse_cores(params.get("cores"))
        workgroup = Workgroup(Coord(0, 0), wg_rows, wg_cols)
        block = int(params.get("block", 32))
        a, b = _random_operands(size, size, size)
        run = offchip_matmul(a, b, workgroup, config, per_core_block=block)
        exact = bool(np.array_equal(run.c, matmul_reference(a, b)))
        datapoints.append(
            {
                "mode": "offchip",
                "size": size,
                "cores": f"{wg_rows}x{wg_cols}",
                "block": block,
                "simulated_ns": run.ns,
                "gflops": run.gflops,
                "compute_fraction": run.compute_share,
                "transfer_fraction": run.transfer_share,
                "transfer_to_compute_ratio": run.transfer_to_compute_ratio,
                "matches_reference": exact,
            }
        )
        checks.append(
            _bool_check(
                "matmul-exact", f"paged {size} result equals the reference oracle", exact
            )
        )
        if size in ref.MATMUL_OFFCHIP and block in (32, 24):
            target, _, transfer_pct = ref.MATMUL_OFFCHIP[size]
            mandatory = size == 512
            group = "" if mandatory else "matmul-offchip-large"
            checks.append(
                _rel_check(
                    "matmul-offchip",
                    f"paged {size} (GFLOPS)",
                    run.gflops,
                    target,
                    ref.MATMUL_OFFCHIP_GFLOPS_TOLERANCE,
                    mandatory=mandatory,
                    group=group,
                )
            )
            pts = ref.MATMUL_OFFCHIP_SHARE_TOLERANCE_PTS
            checks.append(
                _window_check(
                    "matmul-offchip-share",
                    f"paged {size} transfer share (%)",
                    run.transfer_share * 100.0,
                    transfer_pct - pts,
                    transfer_pct + pts,
                    mandatory=mandatory,
                    group=group,
                )
            )
            if mandatory:
                lo, hi = ref.MATMUL_COMPUTE_TRANSFER_RATIO_WINDOW
                checks.append(
                    _window_check(
                        "matmul-ratio",
                        "page-in : compute time ratio per tile step",
                        run.transfer_to_compute_ratio,
                        lo,
                        hi,
                    )
                )
    else:
        raise ConfigurationError(f"unknown matmul mode {mode!r}")
    return ExperimentResult("matmul", {**params, "mode": mode}, datapoints, checks)


# --- scaling --------------------------------------------------------------------

_STENCIL_WEAK_SHAPES = [(1, 1), (1, 2), (2, 2), (2, 4), (4, 4), (4, 8), (8, 8)]
_STENCIL_STRONG_SIZES = [(40, 40), (60, 60), (80, 60)]
_STENCIL_STRONG_SHAPES = [(1, 1), (2, 1), (2, 2), (4, 2)]
# per-core work held constant: M*N*K scales with the square of the group edge
_MATMUL_WEAK_LADDERS = {
    "ladder1": {1: (16, 16, 32), 2: (32, 32, 32), 4: (64, 64, 32), 8: (64, 128, 64)},
    "ladder2": {1: (64, 32, 32), 2: (64, 64, 64), 4: (128, 128, 64), 8: (128, 256, 128)},
}
_MATMUL_STRONG_SIZES = [32, 64, 128]


def run_weak_scaling(params: dict, config: SimConfig) -> ExperimentResult:
    app = params.get("app", "stencil")
    iters = int(params.get("iters", 10))
    datapoints = []
    checks = []
    if app == "stencil":
        block = int(params.get("block", 60))
        times = {}
        for shape in _STENCIL_WEAK_SHAPES:
            r, c = shape
            grid = np.zeros((block * r, block * c), dtype=np.float32)
            run = stencil_distributed(
                grid, _STENCIL_WEIGHTS, iters, Workgroup(Coord(0, 0), r, c), config
            )
            times[shape] = run.ns
            datapoints.append(
                {
                    "app": app,
                    "cores": f"{r}x{c}",
                    "core_count": r * c,
                    "rows": block * r,
                    "cols": block * c,
                    "simulated_ns": run.ns,
                }
            )
        series = [times[s] for s in _STENCIL_WEAK_SHAPES]
        checks.append(
            _bool_check(
                "weak-scaling-monotone",
                "stencil weak-scaling time non-decreasing in core count",
                all(b >= a - 1e-9 for a, b in zip(series, series[1:])),
            )
        )
        ratio = times[(8, 8)] / times[(2, 4)]
        checks.append(
            _window_check(
                "weak-scaling-plateau",
                "time(64 cores) / time(8 cores)",
                ratio,
                0.0,
                ref.WEAK_SCALING_MAX_RATIO,
            )
        )
    elif app == "matmul":
        for ladder, sizes in _MATMUL_WEAK_LADDERS.items():
            series = []
            for q, (M, N, K) in sorted(sizes.items()):
                a, b = _random_operands(M, N, K)
                run = cannon_multicore(a, b, Workgroup(Coord(0, 0), q, q), config)
                series.append(run.ns)
                datapoints.append(
                    {
                        "app": app,
                        "ladder": ladder,
                        "cores": f"{q}x{q}",
                        "core_count": q * q,
                        "problem": f"{M}x{N}x{K}",
                        "simulated_ns": run.ns,
                    }
                )
            checks.append(
                _bool_check(
                    "weak-scaling-monotone",
                    f"matmul weak-scaling time non-decreasing ({ladder})",
                    all(y >= x - 1e-9 for x, y in zip(series, series[1:])),
                )
            )
    else:
        raise ConfigurationError(f"unknown scaling app {app!r}")
    return ExperimentResult("weak_scaling", {**params, "app": app}, datapoints, checks)



def run_strong_scaling(params: dict, config: SimConfig) -> ExperimentResult:
    app = params.get("app", "stencil")
    iters = int(params.get("iters", 10))
    datapoints = []
    checks = []
    if app == "stencil":
        first_doubling = {}
        for size in _STENCIL_STRONG_SIZES:
            rows, cols = size
            base_ns = None
            for shape in _STENCIL_STRONG_SHAPES:
                r, c = shape
                if rows % r or cols % c:
                    continue
                grid = np.zeros(size, dtype=np.float32)
                run = stencil_distributed(
                    grid, _STENCIL_WEIGHTS, iters, Workgroup(Coord(0, 0), r, c), config
                )
                if base_ns is None:
                    base_ns = run.ns
                speedup = base_ns / run.ns
                datapoints.append(
                    {
                        "app": app,
                        "rows": rows,
                        "cols": cols,
                        "cores": f"{r}x{c}",
                        "core_count": r * c,
                        "simulated_ns": run.ns,
                        "speedup": speedup,
                    }
                )
                if r * c == 2:
                    first_doubling[size] = speedup
        largest = _STENCIL_STRONG_SIZES[-1]
        checks.append(
            _window_check(
                "strong-scaling-doubling",
                f"first-doubling speedup at {largest[0]}x{largest[1]}",
                first_doubling[largest],
                ref.STRONG_SCALING_MIN_DOUBLING_SPEEDUP,
                float("inf"),
            )
        )
        series = [first_doubling[s] for s in _STENCIL_STRONG_SIZES]
        checks.append(
            _bool_check(
                "strong-scaling-monotone",
                "first-doubling speedup non-decreasing in problem size",
                all(y >= x - 1e-9 for x, y in zip(series, series[1:])),
            )
        )
    elif app == "matmul":
        times: dict[int, dict[int, float]] = {}
        for size in _MATMUL_STRONG_SIZES:
            base_ns = None
            times[size] = {}
            for q in (1, 2, 4, 8):
                if size % q or size // q > 32 or size // q < 1:
                    continue
                a, b = _random_operands(size, size, size)
                run = cannon_multicore(a, b, Workgroup(Coord(0, 0), q, q), config)
                times[size][q] = run.ns
                if base_ns is None:
                    base_ns = run.ns
                datapoints.append(
                    {
                        "app": app,
                        "problem": f"{size}x{size}x{size}",
                        "cores": f"{q}x{q}",
                        "core_count": q * q,
                        "simulated_ns": run.ns,
                        "speedup": base_ns / run.ns,
                    }
                )
        # at a fixed core-count step, larger problems must scale at least as well
        for q in (1, 2, 4):
            ratios = [
                times[s][q] / times[s][2 * q]
                for s in _MATMUL_STRONG_SIZES
                if q in times[s] and 2 * q in times[s]
            ]
            if len(ratios) > 1:
                checks.append(
                    _bool_check(
                        "strong-scaling-monotone",
                        f"{q}x{q}->{2 * q}x{2 * q} speedup non-decreasing in problem size",
                        all(y >= x - 1e-9 for x, y in zip(ratios, ratios[1:])),
                        detail=f"ratios={[round(r, 4) for r in ratios]}",
                    )
                )
    else:
        raise ConfigurationError(f"unknown scaling app {app!r}")
    return ExperimentResult("strong_scaling", {**params, "app": app}, datapoints, checks)


_RUNNERS = {
    "bandwidth": run_bandwidth,
    "latency": run_latency,
    "elink": run_elink,
    "stencil": run_stencil,
    "matmul": run_matmul,
    "weak_scaling": run_weak_scaling,
    "strong_scaling": run_strong_scaling,
}


def run_experiment(spec: ExperimentSpec, config: SimConfig | None = None) -> ExperimentResult:
    config = config or SimConfig()
    return _RUNNERS[spec.kind](dict(spec.params), config)
