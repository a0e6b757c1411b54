import csv
import math

import numpy as np
import pytest

from socsched.checks import check_trace, expected_energy
from socsched.heuristics import ETFScheduler, RandomScheduler
from socsched.kernel import run
from socsched.metrics import summarize
from socsched.report import aggregate, summary_row, write_trace

from conftest import NO_ARRIVALS, FixedScheduler, one_job_catalog, uniform_platform
from oracles import metrics_from_rows


def _csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def recompute_from_files(paths, catalog, platform, horizon):
    jobs = [(int(r["inject_clk"]), int(r["complete_clk"]) if r["complete_clk"] else -1) for r in _csv(paths["jobs"])]
    tasks = []
    for r in _csv(paths["trace"]):
        if not r["start_clk"]:
            continue
        pe = int(r["pe"])
        tmpl = catalog[int(r["job_type"])].tasks[int(r["task_id"])]
        tasks.append((pe, int(r["start_clk"]), int(r["finish_clk"]), platform.task_energy(pe, tmpl)))
    return metrics_from_rows(jobs, tasks, horizon, [p.idle_power for p in platform.pes])


def test_latency_arithmetic():
    # 8 jobs whose waiting plus service adds up to 4000 clocks
    jobs = [(0, 500)] * 8
    lat, cum, _, _ = metrics_from_rows(jobs, [], 1000, [0.0])
    assert lat == 500 and cum == 500


def test_single_job_metrics():
    cat = one_job_catalog([{0: 5}], [])
    plat = uniform_platform(1, active=2.0, idle=0.5)
    trace = run(cat, plat, FixedScheduler(), horizon=20, scale=NO_ARRIVALS, queue_capacity=1)
    s = summarize(trace)
    assert s.completed == 1 and s.avg_latency == 5 and s.cumulative_time == 5
    assert s.total_energy == 2.0 * 5 + 0.5 * 15
    assert s.edp == s.total_energy * 5
    assert s.throughput_jobs_per_kflop == 1000 / 5


def test_no_completions():
    cat = one_job_catalog([{0: 50}], [])
    trace = run(cat, uniform_platform(1, idle=0.1), FixedScheduler(), horizon=20, scale=NO_ARRIVALS,
                queue_capacity=1)
    s = summarize(trace)
    assert s.completed == 0 and math.isnan(s.avg_latency) and s.edp == 0.0 and s.throughput_jobs_per_kflop == 0.0
    # cut off at the horizon: 20 of 50 clocks charged
    assert s.total_energy == pytest.approx(1.0 * 20)


@pytest.mark.parametrize("sched", [RandomScheduler, ETFScheduler])
def test_metrics_recomputed_from_csv(catalog, platform, tmp_path, sched):
    trace = run(catalog, platform, sched(), horizon=3000, scale=30, seed=2)
    paths = write_trace(trace, tmp_path)
    lat, cum, energy, edp = recompute_from_files(paths, catalog, platform, 3000)
    s = summarize(trace)
    assert s.avg_latency == pytest.approx(lat, abs=1e-9)
    assert s.cumulative_time == cum
    assert s.total_energy == pytest.approx(energy, rel=1e-9)
    assert s.edp == pytest.approx(edp, rel=1e-9)
    assert s.throughput_jobs_per_kflop == pytest.approx(1000 * s.completed / cum, rel=1e-12)


def test_energy_split_and_checker(catalog, platform):
    trace = run(catalog, platform, RandomScheduler(), horizon=2000, seed=9)
    assert trace.total_energy == pytest.approx(expected_energy(trace, catalog, platform), rel=1e-12)
    assert np.all(trace.pe_busy_clocks <= 2000)
    assert check_trace(trace, catalog, platform) == []


def test_checker_catches_tampering(catalog, platform):
    trace = run(catalog, platform, RandomScheduler(), horizon=1500, seed=1)
    bad = trace.tasks.copy()
    started = np.nonzero(bad[:, 7] > 0)[0]
    bad[started[0], 7] -= 1  # runs one clock long
    trace.tasks = bad
    assert any("ran" in p for p in check_trace(trace, catalog, platform))


def test_aggregate_mean_std():
    rows = [
        {"scheduler": "x", "scale": 25.0, "avg_latency": v, "completed": 1, "total_energy": 2.0, "edp": 3.0,
         "error": ""} for v in (1.0, 2.0, 3.0)
    ]
    rows.append({"scheduler": "x", "scale": 25.0, "avg_latency": "", "completed": "", "total_energy": "",
                 "edp": "", "error": "boom"})
    (agg,) = aggregate(rows)
    assert agg["runs"] == 4 and agg["failed"] == 1
    assert agg["avg_latency_mean"] == 2.0 and agg["avg_latency_std"] == 1.0


def test_summary_row_fields(catalog, platform):
    trace = run(catalog, platform, RandomScheduler(), horizon=500, seed=0)
    row = summary_row(trace, "random")
    assert row["edp"] == row["total_energy"] * row["cumulative_time"]
    assert row["digest"] == trace.digest()
