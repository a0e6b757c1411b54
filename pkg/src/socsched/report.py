"""CSV and JSON outputs: per-task traces, per-episode summaries, run metadata."""
from __future__ import annotations

import csv
import json
import math
import subprocess
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .metrics import CUMULATIVE_TIME_DEFINITION, summarize

TRACE_HEADER = ["job_id", "task_id", "pe", "ready_clk", "start_clk", "finish_clk", "job_type", "assign_clk"]
JOBS_HEADER = ["job_id", "job_type", "inject_clk", "admit_clk", "complete_clk"]
CLOCK_HEADER = ["clk", "jobs_completed", "reward", "injected", "completed", "in_queue", "backlog"]
SUMMARY_HEADER = [
    "scheduler", "scale", "seed", "horizon", "completed", "avg_latency", "cumulative_time",
    "total_energy", "edp", "throughput_jobs_per_kflop", "digest", "error",
]
AGGREGATE_HEADER = [
    "scheduler", "scale", "runs", "failed",
    "avg_latency_mean", "avg_latency_std", "completed_mean", "completed_std",
    "total_energy_mean", "total_energy_std", "edp_mean", "edp_std",
]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_trace(trace, out_dir, prefix: str = "") -> dict[str, Path]:
    """Write ``<prefix>trace.csv``, ``<prefix>jobs.csv`` and ``<prefix>clocks.csv``.

    Unset clocks (task never reached that state) are left empty.
    """
    from .env import reward_track

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {k: out / f"{prefix}{k}.csv" for k in ("trace", "jobs", "clocks")}

    def cell(x):
        return "" if x < 0 else int(x)

    with open(paths["trace"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for job_id, task_id, job_type, pe, ready, assign, _, start, finish in trace.tasks.tolist():
            w.writerow([job_id, task_id, cell(pe), cell(ready), cell(start), cell(finish), job_type, cell(assign)])
    with open(paths["jobs"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(JOBS_HEADER)
        for job_id, job_type, inject, admit, complete in trace.jobs.tolist():
            w.writerow([job_id, job_type, inject, cell(admit), cell(complete)])
    rewards = reward_track(trace)
    with open(paths["clocks"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CLOCK_HEADER)
        for clk in range(trace.horizon):
            w.writerow([clk, int(trace.jobs_completed_at[clk]), repr(float(rewards[clk])), int(trace.injected[clk]),
                        int(trace.completed[clk]), int(trace.in_queue[clk]), int(trace.backlog[clk])])
    return paths


def summary_row(trace, scheduler: str) -> dict:
    s = summarize(trace)
    return {
        "scheduler": scheduler,
        "scale": trace.scale,
        "seed": trace.seed,
        "horizon": trace.horizon,
        **s.as_dict(),
        "digest": trace.digest(),
        "error": "",
    }


def failed_row(scheduler: str, scale: float, seed: int, horizon: int, error: str) -> dict:
    row = {k: "" for k in SUMMARY_HEADER}
    row.update(scheduler=scheduler, scale=scale, seed=seed, horizon=horizon, error=error)
    return row


def write_rows(rows, path, header) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


def aggregate(rows) -> list[dict]:
    """Mean and sample std per (scheduler, scale); failed rows are only counted."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["scheduler"], float(r["scale"])), []).append(r)
    out = []
    for (name, scale), rs in groups.items():
        ok = [r for r in rs if not r["error"]]
        agg = {"scheduler": name, "scale": scale, "runs": len(rs), "failed": len(rs) - len(ok)}
        for key in ("avg_latency", "completed", "total_energy", "edp"):
            vals = np.array([float(r[key]) for r in ok], dtype=np.float64)
            vals = vals[~np.isnan(vals)]
            agg[f"{key}_mean"] = float(vals.mean()) if len(vals) else math.nan
            agg[f"{key}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        out.append(agg)
    return out


def git_revision(path=None) -> str | None:
    try:
        res = subprocess.run(["git", "rev-parse", "HEAD"], cwd=path, capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return None
    return res.stdout.strip() or None if res.returncode == 0 else None


def run_metadata(command: str, config: dict, **extra) -> dict:
    return {
        "command": command,
        "package_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "git_revision": git_revision(Path(__file__).resolve().parent),
        "cumulative_time_definition": CUMULATIVE_TIME_DEFINITION,
        "latency_definition": "mean over completed jobs of complete_clk - inject_clk",
        "config": config,
        **extra,
    }


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True, default=str) + "\n")
