"""Pure-Python versions of the hot loops; used when the compiled module is absent."""
from __future__ import annotations

import numpy as np


def insertion_start(intervals, earliest: int, duration: int) -> int:
    """Smallest start >= ``earliest`` where ``[start, start+duration)`` avoids ``intervals``.

    ``intervals`` must be sorted by start and pairwise disjoint.
    """
    t = earliest
    for s, f in intervals:
        if t + duration <= s:
            return t
        if f > t:
            t = f
    return t


def span_returns(rewards, starts, ends, gamma: float) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    out = np.empty(len(starts))
    if len(starts) == 0:
        return out
    powers = gamma ** np.arange(int((ends - starts).max()) + 1, dtype=np.float64)
    for i, (s, e) in enumerate(zip(starts.tolist(), ends.tolist())):
        out[i] = rewards[s:e + 1] @ powers[: e - s + 1]
    return out


def horizon_returns(rewards, starts, gamma: float) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=np.float64)
    suffix = np.empty(len(rewards) + 1)
    suffix[-1] = 0.0
    acc = 0.0
    for k in range(len(rewards) - 1, -1, -1):
        acc = rewards[k] + gamma * acc
        suffix[k] = acc
    return suffix[np.asarray(starts, dtype=np.int64)]
