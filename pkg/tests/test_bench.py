"""Harness behavior: experiment plumbing, report verdicts, CLI, file formats."""

import dataclasses
import json

import numpy as np
import pytest

from meshsim.bench.cli import main as cli_main
from meshsim.bench.experiments import ExperimentSpec, ExperimentResult, run_experiment
from meshsim.bench.report import build_report, load_results, report_exit_status
from meshsim.config import SimConfig
from meshsim.errors import ConfigurationError
from meshsim.kernels import gridio

CFG = SimConfig()

FAST_SPECS = [
    ExperimentSpec("bandwidth"),
    ExperimentSpec("latency"),
    ExperimentSpec("elink", {"writers": 4}),
    ExperimentSpec("matmul", {"mode": "single"}),
]


def test_unknown_kind_rejected():
    with pytest.raises(ConfigurationError):
        ExperimentSpec("power")


def test_result_json_roundtrip():
    result = run_experiment(ExperimentSpec("latency"), CFG)
    clone = ExperimentResult.from_dict(json.loads(result.to_json()))
    assert clone.kind == result.kind
    assert clone.datapoints == result.datapoints
    assert [c.to_dict() for c in clone.checks] == [c.to_dict() for c in result.checks]


def test_identical_runs_byte_identical():
    """Reproducibility: identical specs give identical serialized output."""
    payloads = []
    for _ in range(2):
        blobs = [run_experiment(spec, SimConfig()).to_json() for spec in FAST_SPECS]
        payloads.append("".join(blobs))
    assert payloads[0] == payloads[1]


def test_report_shape_and_exit_status():
    results = [run_experiment(spec, CFG) for spec in FAST_SPECS]
    report = build_report(results)
    assert report.passed()
    assert report_exit_status(report) == 0
    csv_text = report.to_csv()
    header = csv_text.splitlines()[0]
    assert header == "experiment,dataset,name,measured,reference,verdict,mandatory"
    # optional groups nobody exercised are marked skipped, not failed
    assert any("skipped" in line for line in csv_text.splitlines())
    assert "fail" not in {line.split(",")[5] for line in csv_text.splitlines()[1:]}


def test_corrupted_calibration_flags_only_affected_checks():
    """A wrong DMA payload rate must fail the bandwidth plateau and nothing else."""
    broken = dataclasses.replace(
        CFG, timing=dataclasses.replace(CFG.timing, dma_bytes_per_cycle=2.6)
    )
    good = build_report([run_experiment(s, CFG) for s in FAST_SPECS])
    bad = build_report([run_experiment(s, broken) for s in FAST_SPECS])
    assert good.passed()
    failing = {(r["dataset"], r["name"]) for r in bad.failed}
    assert failing == {("dma-plateau", "DMA sustained rate at 64 KB (bytes/s)")}
    assert report_exit_status(bad) == 1


def test_stencil_experiment_small_config():
    spec = ExperimentSpec(
        "stencil", {"variant": "comm", "cores": "2x2", "rows": 40, "cols": 40, "iters": 5}
    )
    result = run_experiment(spec, CFG)
    exact = [d for d in result.datapoints if "matches_reference" in d]
    assert exact and exact[0]["matches_reference"] is True


def test_elink_bad_writer_count():
    with pytest.raises(ConfigurationError):
        run_experiment(ExperimentSpec("elink", {"writers": 100}), CFG)


# --- CLI -----------------------------------------------------------------------


def test_cli_bench_writes_result_and_figure(tmp_path):
    out = tmp_path / "latency.json"
    svg = tmp_path / "latency.svg"
    code = cli_main(
        ["bench", "latency", "--out", str(out), "--format", "json", "--svg", str(svg)]
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert data["kind"] == "latency"
    assert svg.exists() and svg.stat().st_size > 0
    assert b"<svg" in svg.read_bytes()[:500] or svg.read_bytes()[:5] == b"<?xml"


def test_cli_bench_csv_format(tmp_path):
    out = tmp_path / "bw.csv"
    code = cli_main(["bench", "bandwidth", "--out", str(out), "--format", "csv"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "method,message_bytes,transfer_ns,bytes_per_s"
    assert len(lines) == 1 + 2 * 15


def test_cli_bench_reproducible_bytes(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        assert cli_main(["bench", "bandwidth", "--out", str(path), "--format", "csv"]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_cli_report_flow(tmp_path):
    inputs = []
    for name, argv in [
        ("lat", ["bench", "latency"]),
        ("el", ["bench", "elink", "--writers", "4"]),
    ]:
        path = tmp_path / f"{name}.json"
        assert cli_main(argv + ["--out", str(path)]) == 0
        inputs.append(str(path))
    report_csv = tmp_path / "report.csv"
    figures = tmp_path / "figs"
    code = cli_main(
        ["report", "--in", *inputs, "--out", str(report_csv), "--figures", str(figures)]
    )
    assert code == 0
    assert report_csv.exists()
    rendered = sorted(p.name for p in figures.iterdir())
    # one figure per result, with the raw curves alongside
    assert rendered == ["elink.csv", "elink.svg", "latency.csv", "latency.svg"]
    assert (figures / "latency.csv").read_text().startswith("src,dst,distance_hops")
    loaded = load_results(inputs)
    assert [r.kind for r in loaded] == ["latency", "elink"]


def test_cli_report_nonzero_on_failure(tmp_path):
    result = run_experiment(ExperimentSpec("latency"), CFG)
    result.checks[0].passed = False
    path = tmp_path / "bad.json"
    path.write_text(result.to_json())
    code = cli_main(["report", "--in", str(path), "--out", str(tmp_path / "r.csv")])
    assert code == 1


def test_cli_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        cli_main(["bench", "nonsense"])
    assert info.value.code == 2


def test_cli_config_error_exit_code(tmp_path):
    with pytest.raises(SystemExit) as info:
        cli_main(["bench", "elink", "--writers", "900"])
    assert info.value.code == 2


def test_cli_calibrate_roundtrip(tmp_path):
    out = tmp_path / "cfg.json"
    assert cli_main(["calibrate", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert set(data) >= {"mesh", "timing", "elink", "cost_models"}
    # a bench run accepts the written config
    assert cli_main(["bench", "latency", "--config", str(out), "--out", str(tmp_path / "x.json")]) == 0


def test_packaged_default_config_matches_calibration():
    from meshsim.calibrate import calibrated_config
    from meshsim.config import load_config

    assert load_config() == calibrated_config()


# --- grid/matrix file formats ------------------------------------------------------


def test_matrix_binary_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    m = rng.standard_normal((7, 5)).astype(np.float32)
    path = tmp_path / "m.bin"
    gridio.write_matrix(path, m)
    assert path.stat().st_size == 8 + 7 * 5 * 4
    back = gridio.read_matrix(path)
    assert np.array_equal(back, m)


def test_matrix_binary_header_is_dims(tmp_path):
    path = tmp_path / "m.bin"
    gridio.write_matrix(path, np.zeros((3, 9), dtype=np.float32))
    raw = path.read_bytes()
    assert int.from_bytes(raw[0:4], "little") == 3
    assert int.from_bytes(raw[4:8], "little") == 9


def test_matrix_csv_roundtrip(tmp_path):
    m = np.array([[1.5, -2.25], [0.0, 3.0]], dtype=np.float32)
    path = tmp_path / "m.csv"
    gridio.write_matrix_csv(path, m)
    assert np.array_equal(gridio.read_matrix_csv(path), m)


def test_matrix_truncated_file_rejected(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"\x02\x00\x00\x00\x02\x00\x00\x00" + b"\x00" * 8)
    with pytest.raises(Exception):
        gridio.read_matrix(path)
