"""Numpy actor-critic: a two-layer tanh trunk with policy and value heads.

Gradients are derived by hand; :func:`compute_loss` returns them alongside the
scalar loss so they can be checked against finite differences.
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PARAM_NAMES = ("W1", "b1", "W2", "b2", "Wp", "bp", "Wv", "bv")
MAGIC = b"SOCNET\x00\x01"
FORMAT_VERSION = 1


class PolicyValueNet:
    """Shared tanh trunk, softmax policy head, scalar value head.

    The value head output is multiplied by the fixed ``value_scale`` so that
    returns in the tens are reachable through the head bias instead of by
    saturating the trunk.
    """

    def __init__(self, input_dim: int, num_pes: int, hidden=(128, 64), seed: int = 0, zero_policy_head: bool = True,
                 value_scale: float = 1.0):
        if not value_scale > 0:
            raise ValueError("value_scale must be positive")
        self.value_scale = float(value_scale)
        self.input_dim = int(input_dim)
        self.num_pes = int(num_pes)
        self.hidden = tuple(int(h) for h in hidden)
        if len(self.hidden) != 2:
            raise ValueError("exactly two hidden layers are supported")
        rng = np.random.default_rng(seed)
        h1, h2 = self.hidden

        def glorot(n_in, n_out):
            lim = np.sqrt(6.0 / (n_in + n_out))
            return rng.uniform(-lim, lim, size=(n_in, n_out))

        self.params = {
            "W1": glorot(self.input_dim, h1),
            "b1": np.zeros(h1),
            "W2": glorot(h1, h2),
            "b2": np.zeros(h2),
            "Wp": np.zeros((h2, self.num_pes)) if zero_policy_head else glorot(h2, self.num_pes),
            "bp": np.zeros(self.num_pes),
            "Wv": glorot(h2, 1) * 0.1,
            "bv": np.zeros(1),
        }
        self.meta: dict = {}

    # ---- forward ---------------------------------------------------------------------------

    def _forward(self, obs: np.ndarray):
        x = np.asarray(obs, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise ValueError(f"observation width {x.shape[1]} != network input {self.input_dim}")
        p = self.params
        h1 = np.tanh(x @ p["W1"] + p["b1"])
        h2 = np.tanh(h1 @ p["W2"] + p["b2"])
        logits = h2 @ p["Wp"] + p["bp"]
        value = self.value_scale * (h2 @ p["Wv"] + p["bv"])[:, 0]
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        probs = e / e.sum(axis=1, keepdims=True)
        return x, h1, h2, logits, probs, value

    def forward(self, obs: np.ndarray):
        """Return ``(probs, values)``; ``obs`` may be one row or a batch."""
        _, _, _, _, probs, value = self._forward(obs)
        return probs, value

    # ---- parameters ------------------------------------------------------------------------

    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in PARAM_NAMES])

    def set_flat(self, theta: np.ndarray) -> None:
        i = 0
        for k in PARAM_NAMES:
            n = self.params[k].size
            self.params[k] = theta[i:i + n].reshape(self.params[k].shape).copy()
            i += n

    def copy(self) -> "PolicyValueNet":
        other = PolicyValueNet.__new__(PolicyValueNet)
        other.input_dim, other.num_pes, other.hidden = self.input_dim, self.num_pes, self.hidden
        other.value_scale = self.value_scale
        other.params = {k: v.copy() for k, v in self.params.items()}
        other.meta = dict(self.meta)
        return other

    # ---- checkpoints -----------------------------------------------------------------------

    def save(self, path) -> None:
        """Header (magic, version, shapes, JSON metadata) then little-endian float64 payload."""
        meta = json.dumps({**self.meta, "value_scale": self.value_scale}, sort_keys=True).encode()
        out = bytearray(MAGIC)
        out += struct.pack("<II", FORMAT_VERSION, len(PARAM_NAMES))
        for k in PARAM_NAMES:
            shape = self.params[k].shape
            out += struct.pack("<I", len(shape)) + struct.pack(f"<{len(shape)}I", *shape)
        out += struct.pack("<I", len(meta)) + meta
        out += self.flat().astype("<f8").tobytes()
        Path(path).write_bytes(bytes(out))

    @classmethod
    def load(cls, path) -> "PolicyValueNet":
        data = Path(path).read_bytes()
        if data[:8] != MAGIC:
            raise ValueError(f"{path}: not a policy checkpoint")
        version, n = struct.unpack_from("<II", data, 8)
        if version != FORMAT_VERSION or n != len(PARAM_NAMES):
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        off = 16
        shapes = []
        for _ in range(n):
            (ndim,) = struct.unpack_from("<I", data, off)
            shapes.append(struct.unpack_from(f"<{ndim}I", data, off + 4))
            off += 4 + 4 * ndim
        (mlen,) = struct.unpack_from("<I", data, off)
        meta = json.loads(data[off + 4: off + 4 + mlen].decode())
        off += 4 + mlen
        theta = np.frombuffer(data, dtype="<f8", offset=off).astype(np.float64)
        net = cls.__new__(cls)
        net.input_dim = shapes[0][0]
        net.hidden = (shapes[0][1], shapes[2][1])
        net.num_pes = shapes[4][1]
        net.params = {k: np.zeros(s) for k, s in zip(PARAM_NAMES, shapes)}
        if theta.size != sum(int(np.prod(s)) for s in shapes):
            raise ValueError(f"{path}: payload size does not match the header")
        net.set_flat(theta)
        net.value_scale = float(meta.pop("value_scale", 1.0))
        net.meta = meta
        return net


def sample_action(probs, rng: np.random.Generator) -> int:
    p = np.asarray(probs, dtype=np.float64)
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(p), u * p.sum(), side="right"))
    idx = min(idx, len(p) - 1)
    # rounding can push u past the last cumulative sum; fall back to a live entry
    while p[idx] == 0.0 and idx > 0:
        idx -= 1
    return idx


def greedy_action(probs) -> int:
    return int(np.argmax(probs))


@dataclass
class LossInfo:
    loss: float
    policy_loss: float
    value_loss: float
    entropy: float


def compute_loss(net: PolicyValueNet, batch, value_coef: float = 0.5, entropy_coef: float = 0.01):
    """Actor-critic loss averaged over the batch, plus its gradient per parameter.

    loss = mean_i[ -log pi(a_i|s_i) * A_i + value_coef * (G_i - V_i)^2 - entropy_coef * H_i ]
    with A_i = G_i - V_i held constant inside the policy term.
    """
    n = len(batch.actions)
    if n == 0:
        return LossInfo(0.0, 0.0, 0.0, 0.0), {k: np.zeros_like(v) for k, v in net.params.items()}
    x, h1, h2, logits, probs, value = net._forward(batch.obs)
    G = np.asarray(batch.returns, dtype=np.float64)
    a = np.asarray(batch.actions)
    rows = np.arange(n)
    logp_all = np.log(np.clip(probs, 1e-300, None))
    adv = G - value
    ent = -(probs * logp_all).sum(axis=1)

    policy_loss = -(logp_all[rows, a] * adv).mean()
    value_loss = value_coef * (adv ** 2).mean()
    entropy = ent.mean()
    loss = policy_loss + value_loss - entropy_coef * entropy

    onehot = np.zeros_like(probs)
    onehot[rows, a] = 1.0
    dlogits = -(adv[:, None]) * (onehot - probs) / n
    # d(-H)/dz_k = p_k (log p_k + H)
    dlogits += entropy_coef * probs * (logp_all + ent[:, None]) / n
    # gradient w.r.t. the unscaled head output
    dvalue = -2.0 * value_coef * adv * net.value_scale / n

    p = net.params
    grads = {
        "Wp": h2.T @ dlogits,
        "bp": dlogits.sum(axis=0),
        "Wv": h2.T @ dvalue[:, None],
        "bv": np.array([dvalue.sum()]),
    }
    dh2 = dlogits @ p["Wp"].T + dvalue[:, None] @ p["Wv"].T
    dz2 = dh2 * (1.0 - h2 ** 2)
    grads["W2"] = h1.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    dh1 = dz2 @ p["W2"].T
    dz1 = dh1 * (1.0 - h1 ** 2)
    grads["W1"] = x.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return LossInfo(float(loss), float(policy_loss), float(value_loss), float(entropy)), grads


def loss_value(net: PolicyValueNet, batch, value_coef: float = 0.5, entropy_coef: float = 0.01,
               advantage=None) -> float:
    """Scalar loss with the advantage optionally frozen, for finite-difference checks."""
    _, _, _, _, probs, value = net._forward(batch.obs)
    G = np.asarray(batch.returns, dtype=np.float64)
    n = len(G)
    logp_all = np.log(np.clip(probs, 1e-300, None))
    adv_const = G - value if advantage is None else advantage
    ent = -(probs * logp_all).sum(axis=1)
    return float(
        -(logp_all[np.arange(n), batch.actions] * adv_const).mean()
        + value_coef * ((G - value) ** 2).mean()
        - entropy_coef * ent.mean()
    )


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float = 3e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float):
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        grads = {k: g * scale for k, g in grads.items()}
    return grads, norm


def apply_update(net: PolicyValueNet, opt: Adam, grads: dict[str, np.ndarray], max_norm: float = 1.0) -> float | None:
    """Clip then step. Returns the pre-clip norm, or ``None`` if the update was skipped."""
    norm = global_norm(grads)
    if not np.isfinite(norm):
        logging.getLogger(__name__).warning("non-finite gradient norm; update skipped")
        return None
    grads, _ = clip_by_global_norm(grads, max_norm)
    opt.step(net.params, grads)
    return norm
