"""Figure rendering for experiment results.

Static matplotlib figures written straight to files (SVG, PNG, or PDF by
extension); no interactive backend is ever touched.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .experiments import ExperimentResult  # noqa: E402


def _fig(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def _series_by(datapoints, key):
    groups: dict = {}
    for point in datapoints:
        groups.setdefault(point.get(key), []).append(point)
    return groups


def render_bandwidth(result: ExperimentResult, path) -> Path:
    fig, ax = _fig("Core-to-core bandwidth", "message size (bytes)", "GB/s")
    for method, points in _series_by(result.datapoints, "method").items():
        xs = [p["message_bytes"] for p in points]
        ys = [p["bytes_per_s"] / 1e9 for p in points]
        ax.plot(xs, ys, marker="o", markersize=3, label=method)
    ax.set_xscale("log", base=2)
    ax.legend()
    return _save(fig, path)


def render_latency(result: ExperimentResult, path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.4))
    curves = [p for p in result.datapoints if "method" in p]
    for method, points in _series_by(curves, "method").items():
        xs = [p["message_bytes"] for p in points]
        ys = [p["transfer_ns"] / 1e3 for p in points]
        axes[0].plot(xs, ys, marker="o", markersize=3, label=method)
    axes[0].set_xscale("log", base=2)
    axes[0].set_xlabel("message size (bytes)")
    axes[0].set_ylabel("latency (µs)")
    axes[0].set_title("Small-message latency")
    axes[0].grid(True, alpha=0.3)
    axes[0].legend()

    table = [p for p in result.datapoints if "distance_hops" in p]
    axes[1].plot(
        [p["distance_hops"] for p in table],
        [p["per_transfer_ns"] for p in table],
        marker="o",
        markersize=4,
        label="model",
    )
    axes[1].plot(
        [p["distance_hops"] for p in table],
        [p["reference_ns"] for p in table],
        marker="x",
        linestyle="none",
        label="measured reference",
    )
    axes[1].set_xlabel("hop distance")
    axes[1].set_ylabel("ns per 4-byte transfer")
    axes[1].set_title("Latency vs distance (80-byte message)")
    axes[1].grid(True, alpha=0.3)
    axes[1].legend()
    fig.tight_layout()
    return _save(fig, path)


def render_elink(result: ExperimentResult, path) -> Path:
    fig, ax = _fig("Off-chip link utilization by writer", "core", "utilization fraction")
    points = sorted(result.datapoints, key=lambda p: -p["utilization_fraction"])
    labels = [f"({p['core'][0]},{p['core'][1]})" for p in points]
    ax.bar(range(len(points)), [p["utilization_fraction"] for p in points])
    step = max(1, len(points) // 16)
    ax.set_xticks(range(0, len(points), step))
    ax.set_xticklabels(labels[::step], rotation=60, fontsize=7)
    return _save(fig, path)


def render_stencil(result: ExperimentResult, path) -> Path:
    fig, ax = _fig("Stencil sustained rate", "variant", "GFLOPS")
    points = [p for p in result.datapoints if "gflops" in p]
    labels = [p["variant"] for p in points]
    ax.bar(range(len(points)), [p["gflops"] for p in points])
    ax.set_xticks(range(len(points)))
    ax.set_xticklabels(labels)
    return _save(fig, path)


def render_matmul(result: ExperimentResult, path) -> Path:
    fig, ax = _fig("Matmul sustained rate", "configuration", "GFLOPS")
    points = [p for p in result.datapoints if "gflops" in p]
    labels = [f"{p.get('size')}@{p.get('cores', '1x1')}" for p in points]
    ax.bar(range(len(points)), [p["gflops"] for p in points])
    ax.set_xticks(range(len(points)))
    ax.set_xticklabels(labels, rotation=30, fontsize=8)
    return _save(fig, path)


def render_scaling(result: ExperimentResult, path) -> Path:
    ylabel = "time (ms)" if result.kind == "weak_scaling" else "speedup"
    fig, ax = _fig(result.kind.replace("_", " "), "core count", ylabel)
    key = "ladder" if result.params.get("app") == "matmul" else None
    if result.kind == "strong_scaling":
        key = "problem" if result.params.get("app") == "matmul" else "rows"
    for label, points in _series_by(result.datapoints, key).items():
        xs = [p["core_count"] for p in points]
        if result.kind == "weak_scaling":
            ys = [p["simulated_ns"] / 1e6 for p in points]
        else:
            ys = [p["speedup"] for p in points]
        ax.plot(xs, ys, marker="o", markersize=4, label=str(label))
    ax.set_xscale("log", base=2)
    if key:
        ax.legend()
    return _save(fig, path)


_RENDERERS = {
    "bandwidth": render_bandwidth,
    "latency": render_latency,
    "elink": render_elink,
    "stencil": render_stencil,
    "matmul": render_matmul,
    "weak_scaling": render_scaling,
    "strong_scaling": render_scaling,
}


def render_result(result: ExperimentResult, path: str | Path) -> Path:
    """Render the figure for one experiment result to *path*."""
    return _RENDERERS[result.kind](result, path)


def render_all(results, directory: str | Path, fmt: str = "svg") -> list[Path]:
    directory = Path(directory)
    written = []
    counts: dict[str, int] = {}
    for result in results:
        counts[result.kind] = counts.get(result.kind, 0) + 1
        suffix = "" if counts[result.kind] == 1 else f"-{counts[result.kind]}"
        written.append(render_result(result, directory / f"{result.kind}{suffix}.{fmt}"))
    return written
