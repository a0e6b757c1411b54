"""Clock-driven SoC simulation core.

One call to :meth:`Kernel.tick` processes clock ``clk`` in this order:

1. task completions (successors whose predecessors are all done become ready),
2. job completions (the job leaves the queue),
3. injections of new arrivals into the backlog,
4. admissions from the backlog into free job-queue slots,
5. scheduler invocation on never-assigned ready tasks,
6. dispatch: an idle PE starts the head of its queue once its data is ready.

Scheduling precedes dispatch so a task assigned at ``clk`` may start at ``clk``.
"""
from __future__ import annotations

import hashlib
import struct
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .platform import Platform
from .workload import JobDag, JobTypeCatalog, sample_arrivals

OUTSTANDING = "outstanding"
READY = "ready"
RUNNING = "running"
COMPLETED = "completed"


class SchedulingError(RuntimeError):
    """A scheduler broke the decision contract; the simulation is aborted."""


class TaskInstance:
    __slots__ = (
        "uid", "job", "template", "task_id", "status", "assigned_pe", "ready_clk",
        "assign_clk", "data_ready_clk", "planned_start", "start_clk", "finish_clk",
        "remaining_preds",
    )

    def __init__(self, uid: int, job: "JobInstance", task_id: int):
        self.uid = uid
        self.job = job
        self.task_id = task_id
        self.template = job.dag.tasks[task_id]
        self.status = OUTSTANDING
        self.assigned_pe: int | None = None
        self.ready_clk: int | None = None
        self.assign_clk: int | None = None
        self.data_ready_clk: int | None = None
        self.planned_start: int | None = None
        self.start_clk: int | None = None
        self.finish_clk: int | None = None
        self.remaining_preds = len(job.dag.preds[task_id])

    @property
    def canonical_key(self):
        return (self.job.admit_clk, self.job.job_id, self.task_id)

    def __repr__(self):
        return f"<Task j{self.job.job_id}.t{self.task_id} {self.status} pe={self.assigned_pe}>"


class JobInstance:
    __slots__ = ("job_id", "job_type_id", "dag", "inject_clk", "admit_clk", "complete_clk", "tasks", "remaining")

    def __init__(self, job_id: int, dag: JobDag, inject_clk: int):
        self.job_id = job_id
        self.job_type_id = dag.job_type_id
        self.dag = dag
        self.inject_clk = inject_clk
        self.admit_clk: int | None = None
        self.complete_clk: int | None = None
        self.tasks: list[TaskInstance] = []
        self.remaining = dag.num_tasks

    def __repr__(self):
        return f"<Job {self.job_id} type={self.job_type_id} inject={self.inject_clk}>"


@dataclass
class Assignment:
    task: TaskInstance
    pe: int
    # insertion schedulers pass the start they reserved; None means append
    planned_start: int | None = None


class Scheduler:
    """Base policy. Subclasses implement :meth:`decide`; hooks are optional."""

    name = "base"

    def reset(self, kernel: "Kernel") -> None:
        pass

    def decide(self, ready: list[TaskInstance], kernel: "Kernel") -> list[Assignment]:
        raise NotImplementedError

    def on_task_start(self, task: TaskInstance, clk: int) -> None:
        pass

    def on_task_complete(self, task: TaskInstance, clk: int) -> None:
        pass

    def on_tick(self, clk: int, jobs_completed: int) -> None:
        pass

    def on_episode_end(self, kernel: "Kernel") -> None:
        pass


@dataclass
class Trace:
    """Everything a finished episode leaves behind."""

    horizon: int
    scale: float
    queue_capacity: int
    seed: int
    scheduler: str
    # (job_id, task_id, job_type, pe, ready, assign, data_ready, start, finish); -1 = unset
    tasks: np.ndarray
    # (job_id, job_type, inject, admit, complete); -1 = unset
    jobs: np.ndarray
    jobs_completed_at: np.ndarray
    injected: np.ndarray
    completed: np.ndarray
    in_queue: np.ndarray
    backlog: np.ndarray
    pe_busy_clocks: np.ndarray
    pe_task_energy: np.ndarray
    pe_idle_energy: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def total_energy(self) -> float:
        return float(self.pe_task_energy.sum() + self.pe_idle_energy.sum())

    @property
    def num_completed(self) -> int:
        return int(self.jobs_completed_at.sum())

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(struct.pack("<qdq", self.horizon, self.scale, self.queue_capacity))
        for arr in (self.tasks, self.jobs, self.jobs_completed_at, self.injected, self.completed,
                    self.in_queue, self.backlog, self.pe_busy_clocks):
            h.update(np.ascontiguousarray(arr, dtype="<i8").tobytes())
        for arr in (self.pe_task_energy, self.pe_idle_energy):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()


class Kernel:
    def __init__(
        self,
        catalog: JobTypeCatalog,
        platform: Platform,
        scheduler: Scheduler,
        *,
        horizon: int = 5000,
        scale: float = 25.0,
        queue_capacity: int = 3,
        seed: int = 0,
    ):
        if horizon < 0:
            raise ValueError("horizon must be non-negative")
        if queue_capacity < 0:
            raise ValueError("queue_capacity must be non-negative")
        if not catalog.pe_types.issuperset(platform.pe_types):
            raise ValueError(
                f"catalog covers PE types {sorted(catalog.pe_types)}, platform uses {sorted(set(platform.pe_types))}"
            )
        self.catalog = catalog
        self.platform = platform
        self.scheduler = scheduler
        self.horizon = horizon
        self.scale = scale
        self.queue_capacity = queue_capacity
        self.seed = seed

        init_ss, arrival_ss, sched_ss = np.random.SeedSequence(seed).spawn(3)
        self.rng = np.random.default_rng(sched_ss)
        self.arrivals = sample_arrivals(catalog, scale, max(horizon, 0), arrival_ss).arrivals
        self._next_arrival = 0

        P = platform.num_pes
        self.num_pes = P
        self.clk = 0
        self.backlog: deque[JobInstance] = deque()
        self.job_queue: list[JobInstance] = []
        self.all_jobs: list[JobInstance] = []
        self.ready: list[TaskInstance] = []
        self.pe_current: list[TaskInstance | None] = [None] * P
        self.pe_queue: list[list[TaskInstance]] = [[] for _ in range(P)]
        self.started: list[list[TaskInstance]] = [[] for _ in range(P)]
        self._completions: dict[int, list[TaskInstance]] = {}
        self._uid = 0
        self.num_injected = 0
        self.num_completed = 0

        self._jobs_completed_at = np.zeros(horizon, dtype=np.int64)
        self._injected = np.zeros(horizon, dtype=np.int64)
        self._completed = np.zeros(horizon, dtype=np.int64)
        self._in_queue = np.zeros(horizon, dtype=np.int64)
        self._backlog = np.zeros(horizon, dtype=np.int64)

        # pseudo-steady state: the queue starts full
        for job_type in catalog.sample_types(np.random.default_rng(init_ss), queue_capacity):
            self._inject(job_type, 0)
        self._admit_from_backlog(0)
        scheduler.reset(self)

    # ---- helpers exposed to schedulers -------------------------------------------------

    def exec_time(self, task: TaskInstance, pe: int) -> int:
        return self.platform.exec_time(pe, task.template)

    def data_ready(self, task: TaskInstance, pe: int) -> int:
        """Clock at which all predecessor outputs are present on ``pe``."""
        clk = 0
        job = task.job
        for p, volume in job.dag.preds[task.task_id]:
            pred = job.tasks[p]
            t = pred.finish_clk + self.platform.comm_delay(pred.assigned_pe, pe, volume)
            if t > clk:
                clk = t
        return clk

    def pe_timeline(self, pe: int) -> list[tuple[int, int]]:
        """Reserved ``[start, finish)`` intervals on ``pe`` from the current clock on."""
        out = []
        t = self.clk
        cur = self.pe_current[pe]
        if cur is not None:
            out.append((cur.start_clk, cur.finish_clk))
            t = cur.finish_clk
        for task in self.pe_queue[pe]:
            s = max(t, task.data_ready_clk)
            t = s + self.exec_time(task, pe)
            out.append((s, t))
        return out

    def pe_available(self, pe: int) -> int:
        iv = self.pe_timeline(pe)
        return max(self.clk, iv[-1][1]) if iv else self.clk

    # ---- lifecycle -----------------------------------------------------------------------

    def _inject(self, job_type: int, clk: int) -> JobInstance:
        job = JobInstance(len(self.all_jobs), self.catalog[job_type], clk)
        self.all_jobs.append(job)
        self.backlog.append(job)
        self.num_injected += 1
        return job

    def _admit_from_backlog(self, clk: int, events=None) -> None:
        while self.backlog and len(self.job_queue) < self.queue_capacity:
            job = self.backlog.popleft()
            job.admit_clk = clk
            job.tasks = [TaskInstance(self._uid + t, job, t) for t in range(job.dag.num_tasks)]
            self._uid += job.dag.num_tasks
            self.job_queue.append(job)
            for task in job.tasks:
                if task.remaining_preds == 0:
                    task.status = READY
                    task.ready_clk = clk
                    self.ready.append(task)
            if events is not None:
                events.append(("admit", clk, job.job_id))

    def invoke_scheduler(self) -> list[Assignment]:
        ready = sorted(self.ready, key=lambda t: t.canonical_key)
        decision = list(self.scheduler.decide(ready, self))
        self._apply(ready, decision)
        return decision

    def _apply(self, ready: list[TaskInstance], decision: list[Assignment]) -> None:
        presented = {t.uid for t in ready}
        covered = [a.task.uid for a in decision]
        if len(covered) != len(set(covered)) or set(covered) != presented:
            raise SchedulingError(
                f"{self.scheduler.name} at clk {self.clk}: decision covers {sorted(covered)}, "
                f"ready set is {sorted(presented)}"
            )
        for a in decision:
            if not (isinstance(a.pe, (int, np.integer)) and 0 <= a.pe < self.num_pes):
                raise SchedulingError(
                    f"{self.scheduler.name} at clk {self.clk}: invalid PE {a.pe!r} for {a.task}"
                )
        for a in decision:
            task, pe = a.task, int(a.pe)
            task.assigned_pe = pe
            task.assign_clk = self.clk
            task.data_ready_clk = self.data_ready(task, pe)
            task.planned_start = a.planned_start
            queue = self.pe_queue[pe]
            if a.planned_start is None:
                queue.append(task)
            else:
                i = 0
                while i < len(queue) and queue[i].planned_start is not None and queue[i].planned_start <= a.planned_start:
                    i += 1
                queue.insert(i, task)
        self.ready.clear()

    def tick(self) -> list[tuple]:
        if self.clk >= self.horizon:
            raise RuntimeError("tick past the horizon")
        clk = self.clk
        events: list[tuple] = []
        sched = self.scheduler

        jobs_done = 0
        done = self._completions.pop(clk, None)
        if done:
            finished = []
            for task in done:
                task.status = COMPLETED
                self.pe_current[task.assigned_pe] = None
                events.append(("task_complete", clk, task.uid))
                job = task.job
                job.remaining -= 1
                for s, _ in job.dag.succs[task.task_id]:
                    succ = job.tasks[s]
                    succ.remaining_preds -= 1
                    if succ.remaining_preds == 0:
                        succ.status = READY
                        succ.ready_clk = clk
                        self.ready.append(succ)
                sched.on_task_complete(task, clk)
                if job.remaining == 0:
                    job.complete_clk = clk
                    finished.append(job)
            for job in finished:
                self.job_queue.remove(job)
                events.append(("job_complete", clk, job.job_id))
            jobs_done = len(finished)
            self.num_completed += jobs_done

        arrivals = self.arrivals
        while self._next_arrival < len(arrivals) and arrivals[self._next_arrival][0] == clk:
            job = self._inject(arrivals[self._next_arrival][1], clk)
            events.append(("inject", clk, job.job_id))
            self._next_arrival += 1

        if self.backlog and len(self.job_queue) < self.queue_capacity:
            self._admit_from_backlog(clk, events)

        if self.ready:
            for a in self.invoke_scheduler():
                events.append(("assign", clk, a.task.uid, int(a.pe)))

        for pe in range(self.num_pes):
            queue = self.pe_queue[pe]
            if self.pe_current[pe] is None and queue and queue[0].data_ready_clk <= clk:
                task = queue.pop(0)
                task.status = RUNNING
                task.start_clk = clk
                task.finish_clk = clk + self.exec_time(task, pe)
                self.pe_current[pe] = task
                self.started[pe].append(task)
                self._completions.setdefault(task.finish_clk, []).append(task)
                events.append(("start", clk, task.uid, pe))
                sched.on_task_start(task, clk)

        self._jobs_completed_at[clk] = jobs_done
        self._injected[clk] = self.num_injected
        self._completed[clk] = self.num_completed
        self._in_queue[clk] = len(self.job_queue)
        self._backlog[clk] = len(self.backlog)
        sched.on_tick(clk, jobs_done)
        self.clk += 1
        return events

    def run(self) -> Trace:
        while self.clk < self.horizon:
            self.tick()
        self.scheduler.on_episode_end(self)
        return self.trace()

    # ---- output --------------------------------------------------------------------------

    def trace(self) -> Trace:
        def v(x):
            return -1 if x is None else x

        task_rows = [
            (job.job_id, t.task_id, job.job_type_id, v(t.assigned_pe), v(t.ready_clk), v(t.assign_clk),
             v(t.data_ready_clk), v(t.start_clk), v(t.finish_clk))
            for job in self.all_jobs for t in job.tasks
        ]
        job_rows = [
            (job.job_id, job.job_type_id, job.inject_clk, v(job.admit_clk), v(job.complete_clk))
            for job in self.all_jobs
        ]
        H = self.horizon
        P = self.num_pes
        busy = np.zeros(P, dtype=np.int64)
        task_energy = np.zeros(P)
        for pe in range(P):
            for t in self.started[pe]:
                if t.start_clk >= H:
                    continue
                ran = min(t.finish_clk, H) - t.start_clk
                busy[pe] += ran
                # a task cut off by the horizon is charged pro rata
                task_energy[pe] += self.platform.task_energy(pe, t.template) * ran / self.exec_time(t, pe)
        idle = np.array([p.idle_power for p in self.platform.pes]) * (H - busy)
        return Trace(
            horizon=H,
            scale=self.scale,
            queue_capacity=self.queue_capacity,
            seed=self.seed,
            scheduler=self.scheduler.name,
            tasks=np.array(task_rows, dtype=np.int64).reshape(-1, 9),
            jobs=np.array(job_rows, dtype=np.int64).reshape(-1, 5),
            jobs_completed_at=self._jobs_completed_at.copy(),
            injected=self._injected.copy(),
            completed=self._completed.copy(),
            in_queue=self._in_queue.copy(),
            backlog=self._backlog.copy(),
            pe_busy_clocks=busy,
            pe_task_energy=task_energy,
            pe_idle_energy=idle,
        )


def run(
    catalog: JobTypeCatalog,
    platform: Platform,
    scheduler: Scheduler,
    *,
    horizon: int = 5000,
    scale: float = 25.0,
    queue_capacity: int = 3,
    seed: int = 0,
) -> Trace:
    kernel = Kernel(catalog, platform, scheduler, horizon=horizon, scale=scale,
                    queue_capacity=queue_capacity, seed=seed)
    return kernel.run()
