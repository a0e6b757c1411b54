import numpy as np
import pytest

from socsched.env import NeuralScheduler
from socsched.heuristics import RandomScheduler
from socsched.kernel import run
from socsched.metrics import summarize
from socsched.neural import PolicyValueNet
from socsched.training import CURVE_HEADER, TrainConfig, layout_for, load_policy, train


def _small(**kw):
    base = dict(episodes=3, horizon=400, seed=5, eim_anchor="decision", eim_attribution="own-job")
    base.update(kw)
    return TrainConfig(**base)


def test_config_validation():
    for bad in (dict(episodes=0), dict(gamma=1.2), dict(eim_mode="x"), dict(eim_anchor="x"),
                dict(eim_attribution="x"), dict(lr=-1.0)):
        with pytest.raises(ValueError):
            _small(**bad).validate()


def test_training_is_reproducible(catalog, platform, tmp_path):
    _, a = train(_small(), catalog, platform, curve_path=tmp_path / "a.csv", checkpoint_path=tmp_path / "a.ckpt")
    _, b = train(_small(), catalog, platform, curve_path=tmp_path / "b.csv", checkpoint_path=tmp_path / "b.ckpt")
    strip = [{k: v for k, v in r.items() if k != "seconds"} for r in a]
    assert strip == [{k: v for k, v in r.items() if k != "seconds"} for r in b]
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == ",".join(CURVE_HEADER)
    assert all(np.isfinite(r["grad_norm"]) for r in a)


def test_checkpoint_carries_layout(catalog, platform, tmp_path):
    cfg = _small(episodes=1, focus_context=True)
    net, _ = train(cfg, catalog, platform, checkpoint_path=tmp_path / "m.ckpt")
    sched = load_policy(tmp_path / "m.ckpt")
    assert sched.layout == layout_for(catalog, platform, 3, True)
    assert sched.net.meta["train"]["focus_context"] is True
    a = run(catalog, platform, sched, horizon=300, seed=1)
    b = run(catalog, platform, NeuralScheduler(net, sched.layout), horizon=300, seed=1)
    assert a.digest() == b.digest()


def test_recorded_buffer_pairs_every_job_bonus(catalog, platform):
    lay = layout_for(catalog, platform, 3, False)
    sched = NeuralScheduler(PolicyValueNet(lay.size, platform.num_pes), lay, greedy=False, record=True)
    k_trace = run(catalog, platform, sched, horizon=1500, seed=3)
    done = {int(j[0]): int(j[4]) for j in k_trace.jobs if j[4] >= 0}
    assert done
    uid_job = {}
    uid = 0
    for row in k_trace.tasks:
        uid_job[uid] = int(row[0])
        uid += 1
    for d in sched.buffer.decisions:
        job = uid_job[d.task]
        if job in done:
            assert d.job_end_clk == done[job] and d.own_bonus == 50.0
        else:
            assert d.job_end_clk is None and d.own_bonus == 0.0
    assert len(sched.buffer.rewards) == 1500


def test_untrained_policy_matches_random(catalog, platform):
    """A zero policy head is uniform, so its latency sits within noise of the random policy."""
    lay = layout_for(catalog, platform, 3, False)
    net = PolicyValueNet(lay.size, platform.num_pes)
    seeds = range(20)
    neural = [summarize(run(catalog, platform, NeuralScheduler(net, lay, greedy=False), seed=s)).avg_latency
              for s in seeds]
    rand = [summarize(run(catalog, platform, RandomScheduler(), seed=s)).avg_latency for s in seeds]
    diff = np.mean(neural) - np.mean(rand)
    se = np.sqrt(np.var(neural, ddof=1) / 20 + np.var(rand, ddof=1) / 20)
    assert abs(diff) < 3 * se
