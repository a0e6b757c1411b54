"""Trace audits: precedence, non-preemption, job conservation and energy accounting.

Every check works from the exported trace rows plus the catalog and platform,
never from kernel internals.
"""
from __future__ import annotations

from collections import defaultdict

import numpy as np

J, T, TYPE, PE, READY, ASSIGN, DREADY, START, FINISH = range(9)


def check_trace(trace, catalog, platform, energy_tol: float = 1e-9) -> list[str]:
    problems: list[str] = []
    rows = trace.tasks
    H = trace.horizon
    by_job: dict[int, dict[int, np.ndarray]] = defaultdict(dict)
    for r in rows:
        by_job[int(r[J])][int(r[T])] = r

    per_pe: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for r in rows:
        if r[START] < 0:
            continue
        dag = catalog[int(r[TYPE])]
        pe = int(r[PE])
        task = dag.tasks[int(r[T])]
        dur = platform.exec_time(pe, task)
        if r[FINISH] - r[START] != dur:
            problems.append(f"job {r[J]} task {r[T]}: ran {r[FINISH] - r[START]} clocks, exec is {dur}")
        if not (r[READY] >= 0 and r[ASSIGN] >= r[READY] and r[START] >= r[ASSIGN]):
            problems.append(f"job {r[J]} task {r[T]}: ready/assign/start out of order")
        earliest = 0
        for p, volume in dag.preds[int(r[T])]:
            pr = by_job[int(r[J])][p]
            if pr[START] < 0 or pr[FINISH] > r[START]:
                problems.append(f"job {r[J]} task {r[T]} started before predecessor {p} finished")
                continue
            earliest = max(earliest, int(pr[FINISH]) + platform.comm_delay(int(pr[PE]), pe, volume))
        if r[START] < earliest:
            problems.append(f"job {r[J]} task {r[T]}: start {r[START]} < data ready {earliest}")
        per_pe[pe].append((int(r[START]), int(r[FINISH])))

    for pe, iv in per_pe.items():
        iv.sort()
        for (s1, f1), (s2, _) in zip(iv, iv[1:]):
            if s2 < f1:
                problems.append(f"PE {pe}: intervals overlap at {s2} < {f1}")

    for job_id, job_type, inject, admit, complete in trace.jobs:
        tasks = by_job.get(int(job_id), {})
        if complete >= 0:
            finishes = [int(r[FINISH]) for r in tasks.values()]
            if len(tasks) != catalog[int(job_type)].num_tasks or max(finishes) != complete:
                problems.append(f"job {job_id}: completion {complete} does not match its tasks")
            if complete >= H:
                problems.append(f"job {job_id}: completed after the horizon")
        if admit >= 0 and admit < inject:
            problems.append(f"job {job_id}: admitted before injection")

    lhs = trace.injected
    rhs = trace.completed + trace.in_queue + trace.backlog
    bad = np.nonzero(lhs != rhs)[0]
    if bad.size:
        problems.append(f"job conservation broken at clk {int(bad[0])}")
    if np.any(trace.in_queue > trace.queue_capacity):
        problems.append("job queue exceeded capacity")
    if H and int(trace.completed[-1]) != int((trace.jobs[:, 4] >= 0).sum()):
        problems.append("completed counter disagrees with job records")

    expected = expected_energy(trace, catalog, platform)
    if abs(expected - trace.total_energy) > energy_tol * max(1.0, abs(expected)):
        problems.append(f"energy {trace.total_energy!r} != recomputed {expected!r}")
    return problems


def expected_energy(trace, catalog, platform) -> float:
    """Task energy of everything that ran (pro rata if cut by the horizon) plus idle energy."""
    H = trace.horizon
    busy = np.zeros(platform.num_pes, dtype=np.int64)
    task_energy = 0.0
    for r in trace.tasks:
        if r[START] < 0 or r[START] >= H:
            continue
        pe = int(r[PE])
        task = catalog[int(r[TYPE])].tasks[int(r[T])]
        ran = min(int(r[FINISH]), H) - int(r[START])
        busy[pe] += ran
        task_energy += platform.task_energy(pe, task) * ran / platform.exec_time(pe, task)
    idle = sum(p.idle_power * (H - busy[p.pe_id]) for p in platform.pes)
    return task_energy + idle
