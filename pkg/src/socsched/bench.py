"""Scheduler factory and the (scheduler x scale x seed) benchmark sweep."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .heuristics import SCHEDULERS
from .kernel import Scheduler, SchedulingError, run
from .platform import Platform
from .report import failed_row, summary_row, write_trace
from .workload import JobTypeCatalog

log = logging.getLogger(__name__)

SCHEDULER_NAMES = ("random", "met", "etf", "heft", "neural")
BENCH_SCALES = (25.0, 50.0, 75.0, 100.0)
BENCH_SEEDS = 20


def make_scheduler(name: str, model=None, greedy: bool = True) -> Scheduler:
    if name == "neural":
        from .training import load_policy

        if model is None:
            raise ValueError("the neural scheduler needs a model checkpoint")
        if not Path(model).is_file():
            raise FileNotFoundError(f"model checkpoint not found: {model}")
        return load_policy(model, greedy=greedy)
    try:
        return SCHEDULERS[name]()
    except KeyError:
        raise ValueError(f"unknown scheduler {name!r}; choose from {SCHEDULER_NAMES}") from None


def run_row(catalog, platform, name, scale, seed, *, horizon=5000, queue_capacity=3, model=None,
            scheduler=None, trace_dir=None) -> dict:
    """One sweep row; scheduler contract violations become a row with ``error`` set."""
    try:
        sched = scheduler or make_scheduler(name, model)
        trace = run(catalog, platform, sched, horizon=horizon, scale=scale, queue_capacity=queue_capacity, seed=seed)
    except (SchedulingError, ValueError, FileNotFoundError) as exc:
        log.warning("%s scale %s seed %s failed: %s", name, scale, seed, exc)
        return failed_row(name, scale, seed, horizon, f"{type(exc).__name__}: {exc}")
    if trace_dir is not None:
        write_trace(trace, trace_dir, prefix=f"{name}_s{scale:g}_seed{seed}_")
    return summary_row(trace, name)


def _worker(args):
    catalog_dict, platform_dict, kw = args
    return run_row(JobTypeCatalog.from_dict(catalog_dict), Platform.from_dict(platform_dict), **kw)


def sweep(catalog, platform, schedulers=SCHEDULER_NAMES, scales=BENCH_SCALES, seeds=range(BENCH_SEEDS), *,
          horizon=5000, queue_capacity=3, model=None, trace_dir=None, workers: int = 1) -> list[dict]:
    """Every (scheduler, scale, seed) combination, in that nesting order."""
    jobs = [
        dict(name=name, scale=float(scale), seed=int(seed), horizon=horizon, queue_capacity=queue_capacity,
             model=None if model is None else str(model), trace_dir=trace_dir)
        for name in schedulers for scale in scales for seed in seeds
    ]
    if workers > 1:
        payload = [(catalog.to_dict(), platform.to_dict(), kw) for kw in jobs]
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_worker, payload, chunksize=4))
    cache: dict[str, Scheduler] = {}
    rows = []
    for kw in jobs:
        name = kw.pop("name")
        if name not in cache:
            try:
                cache[name] = make_scheduler(name, model)
            except (ValueError, FileNotFoundError):
                cache[name] = None
        rows.append(run_row(catalog, platform, name, scheduler=cache[name], **kw))
    return rows
