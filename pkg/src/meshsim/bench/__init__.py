"""Benchmark harness: experiment runners, reference comparison, reporting."""

from .experiments import ExperimentResult, ExperimentSpec, run_experiment  # noqa: F401
from .report import build_report, report_exit_status  # noqa: F401
