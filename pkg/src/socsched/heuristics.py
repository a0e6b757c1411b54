"""Baseline policies: random, MET, ETF and a dynamic insertion-based HEFT."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernel import Assignment, Kernel, Scheduler, TaskInstance
from .platform import Platform
from .workload import JobDag, JobTypeCatalog


def random_policy(ready: list[TaskInstance], state: Kernel, rng: np.random.Generator) -> list[Assignment]:
    P = state.num_pes
    return [Assignment(t, int(rng.integers(P))) for t in ready]


def met_policy(ready: list[TaskInstance], state: Kernel) -> list[Assignment]:
    out = []
    for t in ready:
        times = [state.exec_time(t, pe) for pe in range(state.num_pes)]
        out.append(Assignment(t, times.index(min(times))))
    return out


def etf_policy(ready: list[TaskInstance], state: Kernel) -> list[Assignment]:
    """Repeatedly commit the (task, PE) pair with the earliest append-only finish."""
    P = state.num_pes
    clk = state.clk
    avail = [state.pe_available(pe) for pe in range(P)]
    data_ready = [[state.data_ready(t, pe) for pe in range(P)] for t in ready]
    exec_ = [[state.exec_time(t, pe) for pe in range(P)] for t in ready]
    pending = list(range(len(ready)))
    out = []
    while pending:
        best = None
        for i in pending:
            for pe in range(P):
                finish = max(avail[pe], data_ready[i][pe], clk) + exec_[i][pe]
                key = (finish, i, pe)
                if best is None or key < best:
                    best = key
        finish, i, pe = best
        avail[pe] = finish
        pending.remove(i)
        out.append(Assignment(ready[i], pe))
    return out


def heft_rank(dag: JobDag, platform: Platform) -> dict[int, float]:
    """Upward rank of every task of ``dag``.

    rank(t) = mean exec(t) + max over successors s of (mean edge delay + rank(s)).
    """
    P = platform.num_pes
    order = dag.topological_order()
    if order is None:
        raise ValueError(f"job type {dag.job_type_id} is cyclic")
    rank: dict[int, float] = {}
    for t in reversed(order):
        task = dag.tasks[t]
        mean_exec = sum(platform.exec_time(pe, task) for pe in range(P)) / P
        tail = max(
            (platform.mean_comm_delay(v) + rank[s] for s, v in dag.succs[t]),
            default=0.0,
        )
        rank[t] = mean_exec + tail
    return rank


RankTable = dict[tuple[int, int], float]


def rank_table(catalog: JobTypeCatalog, platform: Platform) -> RankTable:
    return {
        (dag.job_type_id, t): r
        for dag in catalog.job_types
        for t, r in heft_rank(dag, platform).items()
    }


def insertion_eft(timeline: list[tuple[int, int]], earliest_start: int, duration: int) -> int:
    """Earliest start >= ``earliest_start`` fitting ``duration`` into ``timeline``'s gaps."""
    if duration < 1:
        raise ValueError("duration must be >= 1")
    return kernels.insertion_start(timeline, earliest_start, duration)


def _reserve(timeline: list[tuple[int, int]], start: int, finish: int) -> None:
    bisect.insort(timeline, (start, finish))


def heft_policy(ready: list[TaskInstance], state: Kernel, ranks: RankTable, audit=None) -> list[Assignment]:
    P = state.num_pes
    clk = state.clk
    timelines = [state.pe_timeline(pe) for pe in range(P)]
    position = {t.uid: i for i, t in enumerate(ready)}
    order = sorted(ready, key=lambda t: (-ranks[(t.job.job_type_id, t.task_id)], position[t.uid]))
    out = []
    for task in order:
        best = None
        for pe in range(P):
            earliest = max(clk, state.data_ready(task, pe))
            dur = state.exec_time(task, pe)
            start = insertion_eft(timelines[pe], earliest, dur)
            appended = max(earliest, timelines[pe][-1][1]) if timelines[pe] else earliest
            assert start <= appended, "insertion EFT exceeded append EFT"
            if audit is not None:
                audit.append((start + dur, appended + dur))
            if best is None or start + dur < best[0]:
                best = (start + dur, pe, start)
        finish, pe, start = best
        _reserve(timelines[pe], start, finish)
        out.append(Assignment(task, pe, planned_start=start))
    return out


class RandomScheduler(Scheduler):
    name = "random"

    def decide(self, ready, kernel):
        return random_policy(ready, kernel, kernel.rng)


class METScheduler(Scheduler):
    name = "met"

    def decide(self, ready, kernel):
        return met_policy(ready, kernel)


class ETFScheduler(Scheduler):
    name = "etf"

    def decide(self, ready, kernel):
        return etf_policy(ready, kernel)


class HEFTScheduler(Scheduler):
    """Dynamic HEFT: per-type upward ranks, live insertion-based PE timelines."""

    name = "heft"

    def __init__(self, keep_audit: bool = False):
        self.ranks: RankTable = {}
        self._ranked_for = None
        self.audit: list[tuple[int, int]] | None = [] if keep_audit else None

    def reset(self, kernel):
        key = (id(kernel.catalog), id(kernel.platform))
        if key != self._ranked_for:
            self.ranks = rank_table(kernel.catalog, kernel.platform)
            self._ranked_for = key

    def decide(self, ready, kernel):
        return heft_policy(ready, kernel, self.ranks, self.audit)


@dataclass
class StaticSchedule:
    placement: dict[int, tuple[int, int, int]]  # task -> (pe, start, finish)
    audit: list[tuple[int, int]] = field(default_factory=list)

    @property
    def makespan(self) -> int:
        return max((f for _, _, f in self.placement.values()), default=0)


def heft_schedule(dag: JobDag, platform: Platform) -> StaticSchedule:
    """Classic offline HEFT for one job on an empty platform."""
    ranks = heft_rank(dag, platform)
    order = sorted(range(dag.num_tasks), key=lambda t: (-ranks[t], t))
    P = platform.num_pes
    timelines: list[list[tuple[int, int]]] = [[] for _ in range(P)]
    sched = StaticSchedule({})
    for t in order:
        task = dag.tasks[t]
        best = None
        for pe in range(P):
            earliest = 0
            for p, v in dag.preds[t]:
                ppe, _, pf = sched.placement[p]
                earliest = max(earliest, pf + platform.comm_delay(ppe, pe, v))
            dur = platform.exec_time(pe, task)
            start = insertion_eft(timelines[pe], earliest, dur)
            appended = max(earliest, timelines[pe][-1][1]) if timelines[pe] else earliest
            sched.audit.append((start + dur, appended + dur))
            if best is None or start + dur < best[0]:
                best = (start + dur, pe, start)
        finish, pe, start = best
        _reserve(timelines[pe], start, finish)
        sched.placement[t] = (pe, start, finish)
    return sched


SCHEDULERS = {
    "random": RandomScheduler,
    "met": METScheduler,
    "etf": ETFScheduler,
    "heft": HEFTScheduler,
}
