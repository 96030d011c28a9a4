"""Run artifacts: report table, per-trial trajectories, risk timeline and
plot data.

Layout of an output directory::

    manifest.json
    report.csv            one row per method, table columns
    trials.csv            raw per-trial metrics
    summary.txt           the table printed to stdout
    risk_timeline.csv     t_s,z
    plot_data.json        obstacle geometry over time plus trajectories
    trajectories/trial_000.csv ...
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .audio import RiskTimeline
from .config import RunManifest
from .sim import METRIC_FIELDS, AggregateReport, ScenarioConfig, TrialMetrics, Trajectory

REPORT_HEADER = (
    "Method",
    "Path Length [m]",
    "Minimum Signed Distance [m]",
    "Safety Violation Time [s]",
    "Completion Time [s]",
    "Success Rate",
)
# decimals per metric column, as printed in the result tables
_DECIMALS = {"path_length": 3, "min_signed_distance": 3, "violation_time": 2, "completion_time": 2}

TRIALS_HEADER = ("trial", *METRIC_FIELDS, "success", "qp_infeasible_steps", "diagnostic")


class OutputExistsError(FileExistsError):
    pass


def report_row(report: AggregateReport) -> list[str]:
    row = [report.method]
    for name in METRIC_FIELDS:
        if report.available:
            d = _DECIMALS[name]
            row.append(f"{report.mean[name]:.{d}f} ± {report.std[name]:.{d}f}")
        else:
            row.append("n/a")
    n = len(report.trials)
    row.append(f"{report.successes}/{n} ({100.0 * report.success_ratio:.0f}%)")
    return row


def format_table(reports: Sequence[AggregateReport]) -> str:
    rows = [list(REPORT_HEADER)] + [report_row(r) for r in reports]
    widths = [max(len(r[i]) for r in rows) for i in range(len(REPORT_HEADER))]
    lines = []
    for k, r in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def parse_cell(cell: str) -> tuple[float, float]:
    """``'6.750 ± 0.000'`` -> ``(6.75, 0.0)``; ``'n/a'`` -> NaNs."""
    if cell.strip() == "n/a":
        return math.nan, math.nan
    mean, std = cell.split("±")
    return float(mean), float(std)


def parse_success(cell: str) -> tuple[int, int]:
    frac = cell.split()[0]
    k, n = frac.split("/")
    return int(k), int(n)


def read_report_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != REPORT_HEADER:
            raise ValueError(f"{path}: unexpected report header {header}")
        out = []
        for row in reader:
            rec = {"method": row[0]}
            for name, cell in zip(METRIC_FIELDS, row[1:5]):
                rec[name] = parse_cell(cell)
            rec["success"] = parse_success(row[5])
            out.append(rec)
    return out


def write_trajectory_csv(path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(Trajectory.CSV_HEADER)
        for row in traj.rows():
            w.writerow([repr(float(v)) if not isinstance(v, int) else v for v in row])


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != Trajectory.CSV_HEADER:
            raise ValueError(f"{path}: unexpected trajectory header {reader.fieldnames}")
        rows = list(reader)
    return {k: np.array([float(r[k]) for r in rows]) for k in Trajectory.CSV_HEADER}


def plot_data(config: ScenarioConfig, trajectories: Sequence[Trajectory], trials: Sequence[TrialMetrics]) -> dict:
    return {
        "scenario": config.name,
        "mode": config.mode.value,
        "arena": list(config.arena),
        "start": [config.start.x, config.start.y],
        "waypoints": [list(p) for p in config.plan.waypoints],
        "trials": [
            {
                "index": i,
                "success": m.success,
                "t": traj.t.tolist(),
                "x": traj.states[:, 0].tolist(),
                "y": traj.states[:, 1].tolist(),
                "z": traj.z.tolist(),
                "obstacles": [
                    {
                        "xc": o.xc,
                        "yc": o.yc,
                        "r": o.r,
                        "r_eff": traj.r_eff[:, k].tolist(),
                        "axis_a": traj.barrier_axes[:, k, 0].tolist(),
                        "axis_b": traj.barrier_axes[:, k, 1].tolist(),
                        "phi": traj.barrier_axes[:, k, 2].tolist(),
                    }
                    for k, o in enumerate(traj.obstacles)
                ],
            }
            for i, (traj, m) in enumerate(zip(trajectories, trials))
        ],
    }


def planned_files(out_dir, trials: int) -> list[Path]:
    out = Path(out_dir)
    files = [
        out / n
        for n in ("manifest.json", "report.csv", "trials.csv", "summary.txt", "risk_timeline.csv", "plot_data.json")
    ]
    files += [out / "trajectories" / f"trial_{i:03d}.csv" for i in range(trials)]
    return files


def prepare_output_dir(manifest: RunManifest, force: bool = False) -> Path:
    """Create the directory, refusing to clobber a previous run unless forced."""
    out = Path(manifest.out_dir)
    if out.exists() and not out.is_dir():
        raise NotADirectoryError(f"{out}: not a directory")
    existing = [p for p in planned_files(out, manifest.trials) if p.exists()]
    old_traj = sorted((out / "trajectories").glob("trial_*.csv")) if out.is_dir() else []
    if (existing or old_traj) and not force:
        first = (existing or old_traj)[0]
        raise OutputExistsError(f"{first} exists; pass --force to overwrite")
    if force:
        # drop trajectories a larger previous run left behind
        for p in old_traj:
            p.unlink()
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    return out


def emit_outputs(
    report: AggregateReport,
    trajectories: Sequence[Trajectory],
    manifest: RunManifest,
    config: ScenarioConfig,
    timeline: Optional[RiskTimeline] = None,
    force: bool = False,
    echo: bool = True,
) -> list[Path]:
    out = prepare_output_dir(manifest, force)
    written = []

    def mark(p: Path) -> Path:
        written.append(p)
        return p

    with open(mark(out / "manifest.json"), "w") as fh:
        json.dump(asdict(manifest), fh, indent=2)
    with open(mark(out / "report.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        w.writerow(report_row(report))
    with open(mark(out / "trials.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRIALS_HEADER)
        for i, m in enumerate(report.trials):
            w.writerow([i, *(repr(getattr(m, f)) for f in METRIC_FIELDS), int(m.success), m.qp_infeasible_steps, m.diagnostic])
    table = format_table([report])
    mark(out / "summary.txt").write_text(table + "\n", encoding="utf-8")
    (timeline or RiskTimeline.constant(0)).to_csv(mark(out / "risk_timeline.csv"))
    with open(mark(out / "plot_data.json"), "w") as fh:
        json.dump(plot_data(config, trajectories, report.trials), fh)
    for i, traj in enumerate(trajectories):
        write_trajectory_csv(mark(out / "trajectories" / f"trial_{i:03d}.csv"), traj)
    if echo:
        print(table)
    return written
