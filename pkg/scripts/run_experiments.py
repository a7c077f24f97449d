#!/usr/bin/env python3
"""Run the shipped closed-loop experiments and print one summary line each.

With no arguments every JSON spec under src/fibrestab/data/experiments is
executed; pass names (with or without .json) or explicit file paths to run
a subset, and --json to dump full reports instead of one-liners.  The
heavyweight entry is pendulum_basin (a 100x50 grid, about 40 s); everything
else finishes in seconds.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from fibrestab.bundlesim import (
    BasinReport,
    CompatibilityReport,
    RetractionReport,
    TrajectoryRecord,
    load_experiment,
    run_experiment,
)

SPEC_DIR = (
    Path(__file__).resolve().parent.parent
    / "src"
    / "fibrestab"
    / "data"
    / "experiments"
)


def one_liner(report):
    if isinstance(report, CompatibilityReport):
        worst = max(report.max_residual_f, report.max_residual_g)
        word = "pass" if report.passed else "FAIL"
        return (
            f"{word}, worst residual {worst:.3e} "
            f"({report.samples_per_component} samples/component)"
        )
    if isinstance(report, BasinReport):
        return (
            f"{report.converged_cells}/{report.total_cells} converged "
            f"({report.converged_fraction:.2%}), "
            f"{len(report.nonconvergent)} stuck"
        )
    if isinstance(report, RetractionReport):
        return (
            f"defects: identity={report.identity_defect:.1e} "
            f"fixed={report.fixed_on_target_defect:.1e} "
            f"endpoint={report.endpoint_defect:.1e}"
        )
    if isinstance(report, TrajectoryRecord):
        chart, theta, u = report.final_state()
        status = report.terminal_status or "recorded"
        return (
            f"{status}, {report.chart_switches} chart switches, "
            f"ends in {chart} at (theta={theta:.4f}, u={u:.4f})"
        )
    return type(report).__name__


def resolve(arg):
    path = Path(arg)
    if path.exists():
        return path
    candidate = SPEC_DIR / (arg if arg.endswith(".json") else f"{arg}.json")
    if candidate.exists():
        return candidate
    raise SystemExit(f"no such experiment: {arg} (looked in {SPEC_DIR})")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "specs",
        nargs="*",
        help="experiment names or JSON paths (default: all shipped)",
    )
    parser.add_argument(
        "--json",
        action="store_true",
        help="print full report JSON instead of summaries",
    )
    args = parser.parse_args(argv)

    paths = [resolve(a) for a in args.specs] or sorted(SPEC_DIR.glob("*.json"))
    for path in paths:
        config = load_experiment(json.loads(path.read_text()))
        start = time.perf_counter()
        report = run_experiment(config)
        elapsed = time.perf_counter() - start
        if args.json:
            print(json.dumps({path.stem: report.to_json_dict()}, indent=2))
        else:
            print(f"{path.stem:24s} [{elapsed:6.1f}s] {one_liner(report)}")


if __name__ == "__main__":
    main()
