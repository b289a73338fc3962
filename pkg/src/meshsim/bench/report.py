"""Comparison report: one verdict row per reference check exercised.

The report aggregates experiment results, renders a pass/fail table (CSV and
JSON), and carries a nonzero exit status when any mandatory check failed.
Optional check groups nobody exercised are listed as "skipped".
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .experiments import OPTIONAL_GROUPS, ExperimentResult

_COLUMNS = ("experiment", "dataset", "name", "measured", "reference", "verdict", "mandatory")


@dataclass
class Report:
    rows: list[dict] = field(default_factory=list)

    @property
    def failed(self) -> list[dict]:
        return [r for r in self.rows if r["verdict"] == "fail" and r["mandatory"]]

    def passed(self) -> bool:
        return not self.failed

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row[k] for k in _COLUMNS})
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "passed": self.passed()}, indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        total = sum(1 for r in self.rows if r["verdict"] in ("pass", "fail"))
        failed = len(self.failed)
        skipped = sum(1 for r in self.rows if r["verdict"] == "skipped")
        status = "PASS" if self.passed() else "FAIL"
        return f"{status}: {total - failed}/{total} checks passed, {failed} failed, {skipped} skipped"


def build_report(results: list[ExperimentResult]) -> Report:
    if not results:
        raise ValueError("report needs at least one experiment result")
    report = Report()
    exercised_groups = set()
    for result in results:
        for check in result.checks:
            if check.group:
                exercised_groups.add(check.group)
            report.rows.append(
                {
                    "experiment": result.kind,
                    "dataset": check.dataset,
                    "name": check.name,
                    "measured": f"{check.measured:.6g}",
                    "reference": check.reference,
                    "verdict": "pass" if check.passed else ("fail" if check.mandatory else "fail (optional)"),
                    "mandatory": check.mandatory,
                }
            )
    for group, description in sorted(OPTIONAL_GROUPS.items()):
        if group not in exercised_groups:
            report.rows.append(
                {
                    "experiment": "-",
                    "dataset": group,
                    "name": description,
                    "measured": "-",
                    "reference": "-",
                    "verdict": "skipped",
                    "mandatory": False,
                }
            )
    return report


def report_exit_status(report: Report) -> int:
    return 0 if report.passed() else 1


def load_results(paths: list[str | Path]) -> list[ExperimentResult]:
    return [ExperimentResult.load(p) for p in paths]
