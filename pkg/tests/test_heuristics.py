import itertools
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socsched.heuristics import (
    ETFScheduler,
    HEFTScheduler,
    METScheduler,
    RandomScheduler,
    etf_policy,
    heft_rank,
    heft_schedule,
    insertion_eft,
    met_policy,
    random_policy,
)
from socsched.kernel import run
from socsched.workload import JobDag, TaskTemplate

from conftest import NO_ARRIVALS, one_job_catalog, uniform_platform
from oracles import optimal_makespan, random_micro_instance


class _Stub:
    """Minimal state for the stateless policies: exec table only, idle platform."""

    def __init__(self, exec_rows):
        self.exec_rows = exec_rows
        self.num_pes = len(exec_rows[0])
        self.clk = 0

    def exec_time(self, task, pe):
        return self.exec_rows[task.uid][pe]

    def data_ready(self, task, pe):
        return 0

    def pe_available(self, pe):
        return 0


def _tasks(n):
    return [SimpleNamespace(uid=i) for i in range(n)]


def test_random_single_pe_and_uniformity():
    rng = np.random.default_rng(0)
    assert {a.pe for a in random_policy(_tasks(50), _Stub([[1]] * 50), rng)} == {0}
    picks = [a.pe for a in random_policy(_tasks(10_000), _Stub([[1] * 4] * 10_000), rng)]
    freq = np.bincount(picks, minlength=4) / 10_000
    assert np.all(np.abs(freq - 0.25) <= 0.02)


def test_random_reproducible():
    state = _Stub([[1] * 4] * 20)
    a = random_policy(_tasks(20), state, np.random.default_rng(3))
    b = random_policy(_tasks(20), state, np.random.default_rng(3))
    assert [x.pe for x in a] == [x.pe for x in b]


def test_met_examples():
    assert met_policy(_tasks(1), _Stub([[5, 3, 7]]))[0].pe == 1
    assert met_policy(_tasks(1), _Stub([[3, 3]]))[0].pe == 0


@given(st.lists(st.integers(1, 50), min_size=2, max_size=5, unique=True), st.randoms())
def test_met_follows_pe_relabeling(row, rnd):
    perm = list(range(len(row)))
    rnd.shuffle(perm)
    permuted = [row[perm[k]] for k in range(len(row))]
    a = met_policy(_tasks(1), _Stub([row]))[0].pe
    b = met_policy(_tasks(1), _Stub([permuted]))[0].pe
    assert perm[b] == a


def test_etf_single_task():
    assert etf_policy(_tasks(1), _Stub([[5, 3]]))[0].pe == 1


@pytest.mark.parametrize("e0,e1", [(2, 3), (2, 5), (3, 6)])
def test_etf_two_identical_tasks(e0, e1):
    picks = [a.pe for a in etf_policy(_tasks(2), _Stub([[e0, e1], [e0, e1]]))]
    assert picks[0] == 0
    # second task: queue behind P0 (finish 2*e0) or P1 (finish e1); ties go to the lower PE
    assert picks[1] == (0 if 2 * e0 <= e1 else 1)


def _two_type_platform(bandwidth):
    return uniform_platform(2, bandwidth=bandwidth, types=[0, 1])


@pytest.mark.parametrize("remote_exec,expect_pe", [(3, 0), (1, 1)])
def test_etf_local_versus_remote_data(remote_exec, expect_pe):
    # A pinned to PE 0 by exec time, finishes at 5; moving 8 units at bandwidth 2 costs 4
    cat = one_job_catalog([{0: 5, 1: 50}, {0: 6, 1: remote_exec}], [(0, 1, 8.0)])
    trace = run(cat, _two_type_platform(2.0), ETFScheduler(), horizon=40, scale=NO_ARRIVALS, queue_capacity=1)
    b = trace.tasks[1]
    local_finish, remote_finish = 5 + 6, 9 + remote_exec
    assert int(b[3]) == expect_pe
    assert int(b[8]) == min(local_finish, remote_finish)


def test_met_ignores_transfer_delay_heft_does_not():
    # the fast PE for B sits behind a slow link; MET takes it anyway
    cat = one_job_catalog([{0: 3, 1: 3}, {0: 5, 1: 2}], [(0, 1, 20.0)])
    plat = _two_type_platform(2.0)
    met = run(cat, plat, METScheduler(), horizon=60, scale=NO_ARRIVALS, queue_capacity=1)
    heft = run(cat, plat, HEFTScheduler(), horizon=60, scale=NO_ARRIVALS, queue_capacity=1)
    assert met.tasks[1, 3] == 1 and met.jobs[0, 4] == 3 + 10 + 2
    assert heft.tasks[1, 3] == 0 and heft.jobs[0, 4] == 3 + 5


def _rank_platform(num_pes=2, bandwidth=2.0):
    return uniform_platform(num_pes, bandwidth=bandwidth, types=[0] * num_pes)


def test_rank_exit_task():
    dag = JobDag(0, [TaskTemplate(0, {0: 4})], [])
    assert heft_rank(dag, _rank_platform()) == {0: 4.0}


def test_rank_chain():
    plat = uniform_platform(2, bandwidth=2.0, types=[0, 1])
    dag = JobDag(0, [TaskTemplate(0, {0: 2, 1: 4}), TaskTemplate(1, {0: 4, 1: 4})], [(0, 1, 4.0)])
    assert heft_rank(dag, plat)[0] == 3 + 2 + 4


def test_rank_fork():
    tasks = [TaskTemplate(0, {0: 3}), TaskTemplate(1, {0: 6}), TaskTemplate(2, {0: 9})]
    dag = JobDag(0, tasks, [(0, 1, 2.0), (0, 2, 4.0)])
    ranks = heft_rank(dag, _rank_platform())
    assert ranks == {0: 14.0, 1: 6.0, 2: 9.0}


def test_rank_decreases_along_edges(catalog, platform):
    for dag in catalog.job_types:
        ranks = heft_rank(dag, platform)
        for p, s, _ in dag.edges:
            assert ranks[p] > ranks[s]


def brute_force_start(timeline, earliest, duration):
    start = earliest
    while any(s < start + duration and start < f for s, f in timeline):
        start += 1
    return start


def test_insertion_eft_examples():
    assert insertion_eft([(0, 5), (9, 12)], 0, 3) == 5
    assert insertion_eft([(0, 5), (9, 12)], 0, 5) == 12
    assert insertion_eft([], 7, 4) == 7
    with pytest.raises(ValueError):
        insertion_eft([], 0, 0)


@st.composite
def timelines(draw):
    gaps = draw(st.lists(st.tuples(st.integers(0, 6), st.integers(1, 6)), max_size=6))
    out, t = [], draw(st.integers(0, 5))
    for gap, length in gaps:
        t += gap
        out.append((t, t + length))
        t += length
    return out


@given(timelines(), st.integers(0, 40), st.integers(1, 8))
def test_insertion_eft_matches_brute_force(timeline, earliest, duration):
    start = insertion_eft(timeline, earliest, duration)
    assert start == brute_force_start(timeline, earliest, duration)
    appended = max(earliest, timeline[-1][1]) if timeline else earliest
    assert earliest <= start <= appended


def test_heft_matches_etf_on_single_task():
    for row in ([5, 3], [3, 5], [4, 4]):
        cat = one_job_catalog([{0: row[0], 1: row[1]}], [])
        plat = _two_type_platform(1.0)
        a = run(cat, plat, HEFTScheduler(), horizon=20, scale=NO_ARRIVALS, queue_capacity=1)
        b = run(cat, plat, ETFScheduler(), horizon=20, scale=NO_ARRIVALS, queue_capacity=1)
        assert a.tasks[0, 3] == b.tasks[0, 3]


def test_heft_optimal_on_three_task_instance():
    # fork: a root and two children with a costly link
    tasks = [TaskTemplate(0, {0: 2, 1: 3}), TaskTemplate(1, {0: 4, 1: 2}), TaskTemplate(2, {0: 3, 1: 5})]
    dag = JobDag(0, tasks, [(0, 1, 4.0), (0, 2, 6.0)])
    plat = uniform_platform(2, bandwidth=2.0, types=[0, 1])
    assert heft_schedule(dag, plat).makespan == optimal_makespan(dag, plat)


def _enumerate_makespan(dag, plat):
    """Independent check of the exhaustive oracle: all assignments x all topological orders."""
    n, P = dag.num_tasks, plat.num_pes
    best = None
    orders = [o for o in itertools.permutations(range(n))
              if all(o.index(p) < o.index(s) for p, s, _ in dag.edges)]
    for assign in itertools.product(range(P), repeat=n):
        for order in orders:
            free, fin = [0] * P, {}
            for t in order:
                pe = assign[t]
                ready = max((fin[p] + plat.comm_delay(assign[p], pe, v) for p, v in dag.preds[t]), default=0)
                fin[t] = max(ready, free[pe]) + plat.exec_time(pe, dag.tasks[t])
                free[pe] = fin[t]
            span = max(fin.values())
            best = span if best is None else min(best, span)
    return best


def test_exhaustive_oracle_agrees_with_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(30):
        dag, plat = random_micro_instance(rng, max_tasks=4, max_pes=3)
        assert optimal_makespan(dag, plat) == _enumerate_makespan(dag, plat)


def test_heft_schedule_feasible_and_bounded_below():
    rng = np.random.default_rng(5)
    for _ in range(50):
        dag, plat = random_micro_instance(rng)
        sched = heft_schedule(dag, plat)
        for t, (pe, s, f) in sched.placement.items():
            assert f - s == plat.exec_time(pe, dag.tasks[t])
            for p, v in dag.preds[t]:
                ppe, _, pf = sched.placement[p]
                assert s >= pf + plat.comm_delay(ppe, pe, v)
        for pe in range(plat.num_pes):
            iv = sorted((s, f) for q, s, f in sched.placement.values() if q == pe)
            assert all(f1 <= s2 for (_, f1), (s2, _) in zip(iv, iv[1:]))
        assert all(ins <= app for ins, app in sched.audit)
        assert sched.makespan >= optimal_makespan(dag, plat)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_dynamic_heft_insertion_never_worse_than_append(catalog, platform, seed):
    sched = HEFTScheduler(keep_audit=True)
    run(catalog, platform, sched, horizon=800, seed=seed)
    assert sched.audit
    assert all(ins <= app for ins, app in sched.audit)


@pytest.mark.parametrize("cls", [RandomScheduler, METScheduler, ETFScheduler, HEFTScheduler])
def test_policies_deterministic(catalog, platform, cls):
    a = run(catalog, platform, cls(), horizon=1000, seed=4)
    b = run(catalog, platform, cls(), horizon=1000, seed=4)
    assert a.digest() == b.digest()
