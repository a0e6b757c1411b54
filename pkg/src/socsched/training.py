"""Episodic actor-critic training on EIM-redistributed returns."""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .eim import ANCHORS, ATTRIBUTIONS, MODES, redistribute
from .env import NeuralScheduler, ObservationLayout
from .kernel import run
from .metrics import summarize
from .neural import Adam, PolicyValueNet, apply_update, compute_loss
from .platform import Platform
from .workload import JobTypeCatalog

log = logging.getLogger(__name__)

CURVE_HEADER = [
    "episode", "seed", "return", "avg_latency", "completed", "decisions", "dropped",
    "loss", "policy_loss", "value_loss", "entropy", "grad_norm", "seconds",
]


@dataclass
class TrainConfig:
    episodes: int = 5000
    gamma: float = 0.999
    eim_mode: str = "span"
    eim_anchor: str = "start"
    eim_attribution: str = "global"
    lr: float = 3e-4
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    max_grad_norm: float = 1.0
    hidden: tuple[int, int] = (128, 64)
    # value head output multiplier, about the size of one completion bonus
    value_scale: float = 50.0
    focus_context: bool = False
    horizon: int = 5000
    scale: float = 25.0
    queue_capacity: int = 3
    seed: int = 0
    eval_every: int = 0
    eval_seeds: list[int] = field(default_factory=lambda: list(range(5)))

    def validate(self) -> None:
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.eim_mode not in MODES:
            raise ValueError(f"eim_mode must be one of {MODES}")
        if self.eim_anchor not in ANCHORS:
            raise ValueError(f"eim_anchor must be one of {ANCHORS}")
        if self.eim_attribution not in ATTRIBUTIONS:
            raise ValueError(f"eim_attribution must be one of {ATTRIBUTIONS}")
        if not self.value_scale > 0:
            raise ValueError("value_scale must be positive")
        for name in ("lr", "value_coef", "entropy_coef", "max_grad_norm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def episode_seed(self, episode: int) -> int:
        return self.seed * 1_000_003 + episode

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


def layout_for(catalog: JobTypeCatalog, platform: Platform, queue_capacity: int, focus_context: bool) -> ObservationLayout:
    return ObservationLayout(queue_capacity, catalog.max_tasks, platform.num_pes, focus_context)


def load_policy(path, greedy: bool = True) -> NeuralScheduler:
    net = PolicyValueNet.load(path)
    layout = ObservationLayout(**net.meta["layout"])
    return NeuralScheduler(net, layout, greedy=greedy)


def train(config: TrainConfig, catalog: JobTypeCatalog, platform: Platform, *,
          curve_path=None, checkpoint_path=None, net: PolicyValueNet | None = None):
    """Run ``config.episodes`` sampled episodes, one update each. Returns (net, curve rows)."""
    config.validate()
    layout = layout_for(catalog, platform, config.queue_capacity, config.focus_context)
    if net is None:
        net = PolicyValueNet(layout.size, platform.num_pes, config.hidden, seed=config.seed,
                             value_scale=config.value_scale)
    opt = Adam(net.params, lr=config.lr)
    sched = NeuralScheduler(net, layout, greedy=False, record=True)
    net.meta = {"layout": layout.to_dict(), "train": config.to_dict()}

    curve = []
    fh = open(curve_path, "w", newline="") if curve_path else None
    writer = csv.writer(fh) if fh else None
    if writer:
        writer.writerow(CURVE_HEADER)
    try:
        for ep in range(config.episodes):
            t0 = time.perf_counter()
            seed = config.episode_seed(ep)
            trace = run(catalog, platform, sched, horizon=config.horizon, scale=config.scale,
                        queue_capacity=config.queue_capacity, seed=seed)
            batch = redistribute(sched.buffer, config.gamma, config.eim_mode, config.eim_anchor,
                                 config.eim_attribution)
            info, grads = compute_loss(net, batch, config.value_coef, config.entropy_coef)
            norm = apply_update(net, opt, grads, config.max_grad_norm) if len(batch) else 0.0
            s = summarize(trace)
            row = [
                ep, seed, float(np.sum(sched.buffer.rewards)), s.avg_latency, s.completed, len(sched.buffer.decisions),
                batch.dropped, info.loss, info.policy_loss, info.value_loss, info.entropy,
                float("nan") if norm is None else norm, time.perf_counter() - t0,
            ]
            curve.append(dict(zip(CURVE_HEADER, row)))
            if writer:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
                fh.flush()
            if config.eval_every and (ep + 1) % config.eval_every == 0:
                log.info("episode %d: latency %.1f completed %d", ep + 1, s.avg_latency, s.completed)
    finally:
        if fh:
            fh.close()
    if checkpoint_path:
        net.save(checkpoint_path)
    return net, curve
