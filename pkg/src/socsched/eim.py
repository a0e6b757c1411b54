"""Eclectic Interaction Matching: pair each decision with the return over its task's span.

Decisions arrive in bursts at paused clocks, while their consequences show up
whenever the chosen tasks finish. The buffer keeps both sides plus the
per-clock reward track; :func:`redistribute` then discounts rewards from each
decision's own anchor clock to its task's completion (``span``) or to the end
of the episode (``to-horizon``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels

MODES = ("span", "to-horizon")
ANCHORS = ("start", "decision")
ATTRIBUTIONS = ("global", "own-job")


class EimContractError(RuntimeError):
    pass


@dataclass
class DecisionRecord:
    obs: np.ndarray
    action: int
    task: int
    decision_clk: int
    start_clk: int | None = None
    end_clk: int | None = None
    logp: float | None = None
    value: float | None = None
    # completion bonus of the task's job and the clock that job finished
    own_bonus: float = 0.0
    job_end_clk: int | None = None


class EimBuffer:
    def __init__(self):
        self.decisions: list[DecisionRecord] = []
        self.by_task: dict[int, DecisionRecord] = {}
        self.rewards: list[float] = []
        self.bonuses: list[float] = []
        self.closed = False
        self._last_clk = -1

    def _advance(self, clk: int) -> None:
        if self.closed:
            raise EimContractError("buffer already closed")
        if clk < self._last_clk:
            raise EimContractError(f"clock went backwards: {clk} after {self._last_clk}")
        self._last_clk = clk

    def record_decision(self, obs, action: int, task: int, clk: int, logp=None, value=None) -> None:
        self._advance(clk)
        if task in self.by_task:
            raise EimContractError(f"task {task} decided twice")
        rec = DecisionRecord(np.asarray(obs), int(action), task, clk, logp=logp, value=value)
        self.decisions.append(rec)
        self.by_task[task] = rec

    def record_start(self, task: int, clk: int) -> None:
        self._advance(clk)
        rec = self.by_task.get(task)
        if rec is None:
            raise EimContractError(f"start of undecided task {task}")
        if rec.start_clk is not None:
            raise EimContractError(f"task {task} started twice")
        if clk < rec.decision_clk:
            raise EimContractError(f"task {task} started before it was decided")
        rec.start_clk = clk

    def record_completion(self, task: int, clk: int) -> None:
        self._advance(clk)
        rec = self.by_task.get(task)
        if rec is None:
            raise EimContractError(f"completion of undecided task {task}")
        if rec.start_clk is None:
            raise EimContractError(f"task {task} completed before it started")
        if rec.end_clk is not None:
            raise EimContractError(f"task {task} completed twice")
        if clk <= rec.start_clk:
            raise EimContractError(f"task {task} completed at {clk}, not after its start {rec.start_clk}")
        rec.end_clk = clk

    def record_job_completion(self, task: int, clk: int, bonus: float) -> None:
        """The job of ``task`` finished at ``clk`` and paid ``bonus``."""
        self._advance(clk)
        rec = self.by_task.get(task)
        if rec is None:
            raise EimContractError(f"job completion for undecided task {task}")
        if rec.end_clk is None or rec.end_clk > clk:
            raise EimContractError(f"job of task {task} completed before the task itself")
        if rec.job_end_clk is not None:
            raise EimContractError(f"job of task {task} completed twice")
        rec.job_end_clk = clk
        rec.own_bonus = float(bonus)

    def record_reward(self, clk: int, reward: float, bonus: float = 0.0) -> None:
        """``bonus`` is the share of ``reward`` paid for job completions at ``clk``."""
        self._advance(clk)
        if clk != len(self.rewards):
            raise EimContractError(f"reward for clk {clk} but track has length {len(self.rewards)}")
        self.rewards.append(float(reward))
        self.bonuses.append(float(bonus))

    def close(self, horizon: int | None = None) -> None:
        if horizon is not None and len(self.rewards) != horizon:
            raise EimContractError(f"reward track has {len(self.rewards)} entries, horizon is {horizon}")
        self.closed = True


@dataclass
class EimBatch:
    obs: np.ndarray
    actions: np.ndarray
    returns: np.ndarray
    logp: np.ndarray
    values: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    dropped: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.actions)


def redistribute(buffer: EimBuffer, gamma: float, mode: str = "span", anchor: str = "start",
                 attribution: str = "global") -> EimBatch:
    """Turn a closed buffer into (observation, action, return) training tuples.

    span:       G_i = sum_{clk=s_i}^{e_i}  gamma^(clk-s_i) R(clk)
    to-horizon: G_i = sum_{clk=s_i}^{H-1} gamma^(clk-s_i) R(clk)

    ``s_i`` is the task's PE start (``anchor="start"``) or the clock of the
    decision itself (``anchor="decision"``); ``e_i`` is its completion clock.
    Decisions whose task did not finish inside the horizon are dropped.

    With ``attribution="own-job"`` completion bonuses are removed from the
    track; each decision instead receives the bonus of its own job,
    discounted as ``gamma^(J_i-s_i)`` with ``J_i`` the job's completion clock.
    """
    if not buffer.closed:
        raise EimContractError("redistribute needs a closed buffer")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if anchor not in ANCHORS:
        raise ValueError(f"anchor must be one of {ANCHORS}, got {anchor!r}")
    if attribution not in ATTRIBUTIONS:
        raise ValueError(f"attribution must be one of {ATTRIBUTIONS}, got {attribution!r}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    kept = [d for d in buffer.decisions if d.end_clk is not None]
    dropped = len(buffer.decisions) - len(kept)
    rewards = np.asarray(buffer.rewards, dtype=np.float64)
    if attribution == "own-job":
        rewards = rewards - np.asarray(buffer.bonuses, dtype=np.float64)
    starts = np.array([d.start_clk if anchor == "start" else d.decision_clk for d in kept], dtype=np.int64)
    ends = np.array([d.end_clk for d in kept], dtype=np.int64)
    if mode == "span":
        returns = kernels.span_returns(rewards, starts, ends, gamma)
    else:
        returns = kernels.horizon_returns(rewards, starts, gamma)
    if attribution == "own-job" and kept:
        own = np.array([d.own_bonus for d in kept])
        job_ends = np.array([s if d.job_end_clk is None else d.job_end_clk for d, s in zip(kept, starts)])
        returns = returns + own * np.float64(gamma) ** (job_ends - starts)
    width = kept[0].obs.shape[0] if kept else (buffer.decisions[0].obs.shape[0] if buffer.decisions else 0)
    return EimBatch(
        obs=np.array([d.obs for d in kept]).reshape(len(kept), width),
        actions=np.array([d.action for d in kept], dtype=np.int64),
        returns=np.asarray(returns, dtype=np.float64),
        logp=np.array([np.nan if d.logp is None else d.logp for d in kept]),
        values=np.array([np.nan if d.value is None else d.value for d in kept]),
        starts=starts,
        ends=ends,
        dropped=dropped,
        meta={"gamma": gamma, "mode": mode, "anchor": anchor, "attribution": attribution},
    )


def dump_batch_csv(batch: EimBatch, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "action", "start_clk", "end_clk", "return"])
        for i in range(len(batch)):
            w.writerow([i, int(batch.actions[i]), int(batch.starts[i]), int(batch.ends[i]), repr(float(batch.returns[i]))])
