"""Episode metrics: latency, completions, energy and energy-delay product.

Average latency is the mean inject-to-complete time of the jobs finished in
the episode (clocks per job, lower is better). Its reciprocal view is emitted
as ``throughput_jobs_per_kflop`` = completed jobs per 1000 clocks of
cumulative execution time, where cumulative execution time is the clock of
the last job completion. EDP = total energy x cumulative execution time.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

CUMULATIVE_TIME_DEFINITION = "clock of the last job completion in the episode"


@dataclass
class Summary:
    completed: int
    avg_latency: float
    cumulative_time: int
    total_energy: float
    edp: float
    throughput_jobs_per_kflop: float

    def as_dict(self) -> dict:
        return asdict(self)


def summarize(trace) -> Summary:
    jobs = trace.jobs
    done = jobs[jobs[:, 4] >= 0] if len(jobs) else jobs
    completed = int(len(done))
    if completed:
        avg_latency = float((done[:, 4] - done[:, 2]).sum()) / completed
        cumulative = int(done[:, 4].max())
    else:
        avg_latency = math.nan
        cumulative = 0
    energy = trace.total_energy
    throughput = 1000.0 * completed / cumulative if cumulative else 0.0
    return Summary(completed, avg_latency, cumulative, energy, energy * cumulative, throughput)


def energy_breakdown(trace) -> dict[str, float]:
    return {
        "task": float(np.sum(trace.pe_task_energy)),
        "idle": float(np.sum(trace.pe_idle_energy)),
    }
