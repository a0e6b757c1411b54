"""Observation encoding, per-clock reward, and the learned-policy scheduler adapter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eim import EimBuffer
from .kernel import OUTSTANDING, READY, RUNNING, Assignment, Kernel, Scheduler, SchedulingError, TaskInstance
from .workload import JobTypeCatalog

CLOCK_PENALTY = -0.5
COMPLETION_BONUS = 50.0

_STAT_INDEX = {READY: 0, RUNNING: 1, OUTSTANDING: 2}


def reward_at(clk: int, completions_at_clk: int) -> float:
    """Per-clock reward: a fixed penalty plus a bonus for every job finished at ``clk``."""
    if completions_at_clk < 0:
        raise ValueError("completions must be non-negative")
    return CLOCK_PENALTY + COMPLETION_BONUS * completions_at_clk


def reward_track(trace) -> np.ndarray:
    return CLOCK_PENALTY + COMPLETION_BONUS * trace.jobs_completed_at.astype(np.float64)


@dataclass(frozen=True)
class ObservationLayout:
    """Shape of the flat observation vector.

    Per task slot: PE one-hot (slot 0 = unassigned), status one-hot
    (ready, running, outstanding), task waiting time, remaining-predecessor
    fraction, validity bit, focus bit. Per job slot: remaining dependency
    depth, job waiting time, validity bit. Then one global awaiting-task count.
    With ``focus_context`` the focus task's per-PE execution time, PE backlog
    and data-arrival delay are appended.
    """

    queue_capacity: int
    max_tasks: int
    num_pes: int
    focus_context: bool = False
    # scale for the focus-context clock features
    context_clocks: float = 100.0

    @property
    def task_width(self) -> int:
        return self.num_pes + 1 + 3 + 4

    @property
    def job_width(self) -> int:
        return 3

    @property
    def job_block(self) -> int:
        return self.max_tasks * self.task_width + self.job_width

    @property
    def size(self) -> int:
        n = self.queue_capacity * self.job_block + 1
        if self.focus_context:
            n += 3 * self.num_pes
        return n

    def to_dict(self) -> dict:
        return {
            "queue_capacity": self.queue_capacity,
            "max_tasks": self.max_tasks,
            "num_pes": self.num_pes,
            "focus_context": self.focus_context,
            "context_clocks": self.context_clocks,
        }


class Featurizer:
    def __init__(self, catalog: JobTypeCatalog, layout: ObservationLayout, horizon: int):
        self.layout = layout
        self.horizon = max(int(horizon), 1)
        self._heights = {d.job_type_id: d.heights() for d in catalog.job_types}
        self._depth = {d.job_type_id: d.depth() for d in catalog.job_types}
        self._indeg = {d.job_type_id: [len(p) for p in d.preds] for d in catalog.job_types}
        self._max_exec = max(
            (v for d in catalog.job_types for t in d.tasks for v in t.exec_time.values()), default=1
        )
        lay = layout
        self._o_stat = lay.num_pes + 1
        self._o_wt = self._o_stat + 3
        self._o_pred = self._o_wt + 1
        self._o_valid = self._o_pred + 1
        self._o_focus = self._o_valid + 1

    def base(self, kernel: Kernel) -> np.ndarray:
        """Observation with every focus bit cleared."""
        lay = self.layout
        obs = np.zeros(lay.size)
        if len(kernel.job_queue) > lay.queue_capacity:
            raise ValueError("job queue larger than the observation layout")
        clk = kernel.clk
        H = self.horizon
        awaiting = 0
        for j, job in enumerate(kernel.job_queue):
            off = j * lay.job_block
            jt = job.job_type_id
            indeg = self._indeg[jt]
            heights = self._heights[jt]
            remaining_depth = 0
            for task in job.tasks:
                status = task.status
                if status == "completed":
                    continue
                base = off + task.task_id * lay.task_width
                pe = task.assigned_pe
                obs[base + (0 if pe is None else pe + 1)] = 1.0
                obs[base + self._o_stat + _STAT_INDEX[status]] = 1.0
                if task.ready_clk is not None:
                    obs[base + self._o_wt] = min((clk - task.ready_clk) / H, 1.0)
                if indeg[task.task_id]:
                    obs[base + self._o_pred] = task.remaining_preds / indeg[task.task_id]
                obs[base + self._o_valid] = 1.0
                if status != RUNNING:
                    awaiting += 1
                if heights[task.task_id] > remaining_depth:
                    remaining_depth = heights[task.task_id]
            jb = off + lay.max_tasks * lay.task_width
            obs[jb] = remaining_depth / self._depth[jt]
            obs[jb + 1] = min((clk - job.inject_clk) / H, 1.0)
            obs[jb + 2] = 1.0
        obs[lay.queue_capacity * lay.job_block] = awaiting / max(lay.queue_capacity * lay.max_tasks, 1)
        return obs

    def focus_offset(self, kernel: Kernel, task: TaskInstance) -> int:
        j = kernel.job_queue.index(task.job)
        return j * self.layout.job_block + task.task_id * self.layout.task_width + self._o_focus

    def _context(self, kernel: Kernel, task: TaskInstance) -> np.ndarray:
        lay = self.layout
        P = lay.num_pes
        clk = kernel.clk
        ctx = np.empty(3 * P)
        for pe in range(P):
            ctx[pe] = kernel.exec_time(task, pe) / self._max_exec
            ctx[P + pe] = min((kernel.pe_available(pe) - clk) / lay.context_clocks, 1.0)
            ctx[2 * P + pe] = min(max(kernel.data_ready(task, pe) - clk, 0) / lay.context_clocks, 1.0)
        return ctx

    def batch(self, kernel: Kernel, tasks: list[TaskInstance]) -> np.ndarray:
        """One observation row per task, each flagging its own focus slot."""
        base = self.base(kernel)
        out = np.repeat(base[None, :], len(tasks), axis=0)
        ctx_at = self.layout.queue_capacity * self.layout.job_block + 1
        for i, task in enumerate(tasks):
            out[i, self.focus_offset(kernel, task)] = 1.0
            if self.layout.focus_context:
                out[i, ctx_at:] = self._context(kernel, task)
        return out

    def sequential(self, kernel: Kernel, tasks: list[TaskInstance], choose):
        """Featurize ``tasks`` one at a time; earlier tentative picks show up in later rows.

        ``choose(row)`` returns the PE for the task the row focuses on. Nothing
        is written to the kernel; the caller applies all picks together.
        """
        lay = self.layout
        obs = self.base(kernel)
        ctx_at = lay.queue_capacity * lay.job_block + 1
        extra_busy = [0] * lay.num_pes
        rows, picks = [], []
        for task in tasks:
            focus = self.focus_offset(kernel, task)
            row = obs.copy()
            row[focus] = 1.0
            if lay.focus_context:
                ctx = self._context(kernel, task)
                P = lay.num_pes
                for pe in range(P):
                    ctx[P + pe] = min(ctx[P + pe] + extra_busy[pe] / lay.context_clocks, 1.0)
                row[ctx_at:] = ctx
            pe = choose(row)
            rows.append(row)
            picks.append(pe)
            slot = focus - self._o_focus
            obs[slot] = 0.0
            obs[slot + 1 + pe] = 1.0
            extra_busy[pe] += kernel.exec_time(task, pe)
        return np.array(rows), picks

    def featurize(self, kernel: Kernel, focus_task: TaskInstance) -> np.ndarray:
        return self.batch(kernel, [focus_task])[0]


class NeuralScheduler(Scheduler):
    """Scheduler driven by a policy network.

    Every presented ready task gets its own observation (same paused clock,
    its own focus slot, earlier picks of the burst marked as assigned) and one
    policy query; the N picks are applied to the kernel together. With
    ``record=True`` an :class:`EimBuffer` collects decisions, task start and
    finish clocks and the reward track for training.
    """

    name = "neural"

    def __init__(self, net, layout: ObservationLayout, *, greedy: bool = True, record: bool = False):
        self.net = net
        self.layout = layout
        self.greedy = greedy
        self.record = record
        self.buffer: EimBuffer | None = None
        self._featurizers: dict = {}
        self.num_queries = 0

    def reset(self, kernel: Kernel) -> None:
        key = (id(kernel.catalog), kernel.horizon)
        if key not in self._featurizers:
            self._featurizers = {key: Featurizer(kernel.catalog, self.layout, kernel.horizon)}
        self.featurizer = self._featurizers[key]
        if self.layout.num_pes != kernel.num_pes:
            raise ValueError(f"network expects {self.layout.num_pes} PEs, platform has {kernel.num_pes}")
        self.rng = kernel.rng
        self.buffer = EimBuffer() if self.record else None
        self.num_queries = 0

    def decide(self, ready, kernel):
        from .neural import greedy_action, sample_action

        info = []

        def choose(row):
            probs, values = self.net.forward(row)
            p = probs[0]
            a = greedy_action(p) if self.greedy else sample_action(p, self.rng)
            if not 0 <= a < self.layout.num_pes:
                raise SchedulingError(f"policy returned PE {a}")
            info.append((float(np.log(max(p[a], 1e-300))), float(values[0])))
            return a

        rows, picks = self.featurizer.sequential(kernel, ready, choose)
        self.num_queries += len(ready)
        out = []
        for i, task in enumerate(ready):
            if self.buffer is not None:
                logp, value = info[i]
                self.buffer.record_decision(rows[i], picks[i], task.uid, kernel.clk, logp=logp, value=value)
            out.append(Assignment(task, picks[i]))
        return out

    def on_task_start(self, task, clk):
        if self.buffer is not None and task.uid in self.buffer.by_task:
            self.buffer.record_start(task.uid, clk)

    def on_task_complete(self, task, clk):
        if self.buffer is None:
            return
        buf = self.buffer
        if task.uid in buf.by_task:
            buf.record_completion(task.uid, clk)
        if task.job.remaining == 0:
            for t in task.job.tasks:
                if t.uid in buf.by_task:
                    buf.record_job_completion(t.uid, clk, COMPLETION_BONUS)

    def on_tick(self, clk, jobs_completed):
        if self.buffer is not None:
            self.buffer.record_reward(clk, reward_at(clk, jobs_completed), COMPLETION_BONUS * jobs_completed)

    def on_episode_end(self, kernel):
        if self.buffer is not None:
            self.buffer.close(kernel.horizon)
