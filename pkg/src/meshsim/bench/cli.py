"""``meshsim`` command-line interface.

Subcommands::

    meshsim bench {bandwidth|latency|elink|stencil|matmul|weak_scaling|strong_scaling}
                  [--cores RxC] [--size N | --rows R --cols C] [--iters N]
                  [--writers N] [--config PATH] [--out PATH] [--format csv|json]
                  [--svg PATH] [--events PATH]
    meshsim report --in RESULT.json ... [--out report.csv] [--json report.json]
                   [--figures DIR]
    meshsim calibrate --out config.json

``bench`` prints (or writes) one experiment result; ``report`` merges saved
results into a pass/fail table, rendering one figure per result alongside the
delimited output, and exits nonzero if any mandatory check failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..calibrate import calibrated_config
from ..config import SimConfig, load_config
from ..errors import MeshSimError
from .experiments import KINDS, ExperimentSpec, datapoints_csv, run_experiment
from .report import build_report, load_results, report_exit_status


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshsim",
        description="mesh network-on-chip simulator benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run one experiment against the simulator")
    bench.add_argument("kind", choices=KINDS)
    bench.add_argument("--cores", help="workgroup shape, e.g. 8x8")
    bench.add_argument("--size", type=int, help="square matrix dimension")
    bench.add_argument("--rows", type=int, help="grid rows")
    bench.add_argument("--cols", type=int, help="grid cols")
    bench.add_argument("--iters", type=int, help="iteration count")
    bench.add_argument("--writers", type=int, help="off-chip writer count")
    bench.add_argument("--duration", type=float, help="off-chip experiment seconds")
    bench.add_argument(
        "--variant",
        help="stencil variant (single|nocomm|comm|shapes|all)",
    )
    bench.add_argument("--mode", help="matmul mode (single|multicore|offchip)")
    bench.add_argument("--block", type=int, help="per-core block for paged matmul")
    bench.add_argument("--app", help="scaling application (stencil|matmul)")
    bench.add_argument("--config", help="JSON machine config (default: calibrated)")
    bench.add_argument("--out", help="output path (default: stdout)")
    bench.add_argument("--format", choices=("csv", "json"), default="json")
    bench.add_argument("--svg", help="render the experiment figure to this path")
    bench.add_argument("--events", help="write the JSONL event log here (where supported)")

    report = sub.add_parser("report", help="compare saved results against the references")
    report.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="RESULT")
    report.add_argument("--out", help="write the verdict table CSV here (default: stdout)")
    report.add_argument("--json", dest="json_out", help="also write the report as JSON")
    report.add_argument("--figures", help="directory for one figure per input result")

    calibrate = sub.add_parser("calibrate", help="re-derive the calibrated default config")
    calibrate.add_argument("--out", required=True, help="where to write the config JSON")
    return parser


def _bench_params(args) -> dict:
    params = {}
    for name in ("cores", "size", "rows", "cols", "iters", "variant", "mode", "block", "app"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    if args.writers is not None:
        params["writers"] = args.writers
    if args.duration is not None:
        params["duration_s"] = args.duration
    if args.events is not None:
        params["events_path"] = args.events
    return params


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_bench(args) -> int:
    config = load_config(args.config) if args.config else SimConfig()
    spec = ExperimentSpec(args.kind, _bench_params(args))
    result = run_experiment(spec, config)
    payload = result.to_json() if args.format == "json" else datapoints_csv(result)
    _emit(payload, args.out)
    if args.svg:
        from .plots import render_result

        render_result(result, args.svg)
    for check in result.checks:
        status = "pass" if check.passed else "FAIL"
        sys.stderr.write(f"[{status}] {check.name}: {check.measured:.6g} vs {check.reference}\n")
    return 0 if result.passed() else 1


def _cmd_report(args) -> int:
    results = load_results(args.inputs)
    report = build_report(results)
    _emit(report.to_csv(), args.out)
    if args.json_out:
        Path(args.json_out).write_text(report.to_json())
    if args.figures:
        from .plots import render_all

        figures = render_all(results, args.figures)
        # raw curves land next to each figure for external plotting
        for result, figure in zip(results, figures):
            figure.with_suffix(".csv").write_text(datapoints_csv(result))
    sys.stderr.write(report.summary() + "\n")
    return report_exit_status(report)


def _cmd_calibrate(args) -> int:
    calibrated_config().dump_json(args.out)
    sys.stderr.write(f"wrote calibrated config to {args.out}\n")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "report":
            return _cmd_report(args)
        return _cmd_calibrate(args)
    except MeshSimError as exc:
        parser.exit(2, f"meshsim: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
