"""Dense networks with hand-written reverse-mode gradients, Adam and soft updates.

Parameters of a network live in one flat float64 vector; per-layer weight
and bias arrays are views into it, so optimizers and target blending work
on the flat vector directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

ACTIVATIONS = ("relu", "tanh", "identity")
CHECKPOINT_VERSION = 1


class Mlp:
    """Fully connected network; layer ``i`` maps sizes[i] -> sizes[i+1]."""

    def __init__(self, sizes, activations, theta=None):
        sizes = [int(s) for s in sizes]
        activations = list(activations)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"bad layer sizes {sizes}")
        if len(activations) != len(sizes) - 1:
            raise ValueError("need one activation per layer")
        for act in activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        self.sizes = sizes
        self.activations = activations
        n = self.param_count_closed_form(sizes)
        if theta is None:
            theta = np.zeros(n)
        theta = np.array(theta, dtype=float)
        if theta.shape != (n,):
            raise ValueError(f"expected {n} parameters, got {theta.shape}")
        self.theta = theta
        self._bind()

    @staticmethod
    def param_count_closed_form(sizes) -> int:
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))

    def _bind(self):
        self.weights, self.biases = [], []
        offset = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = self.theta[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
            offset += fan_in * fan_out
            b = self.theta[offset:offset + fan_out]
            offset += fan_out
            self.weights.append(w)
            self.biases.append(b)

    @classmethod
    def initialized(cls, sizes, activations, rng: np.random.Generator, final_scale: float = 1.0):
        """Uniform(+-1/sqrt(fan_in)) init; the last layer is scaled by ``final_scale``."""
        net = cls(sizes, activations)
        last = len(net.weights) - 1
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            bound = 1.0 / np.sqrt(w.shape[0])
            scale = final_scale if i == last else 1.0
            w[...] = scale * rng.uniform(-bound, bound, size=w.shape)
            b[...] = scale * rng.uniform(-bound, bound, size=b.shape)
        return net

    @property
    def n_params(self) -> int:
        return self.theta.size

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def flatten(self) -> np.ndarray:
        return self.theta.copy()

    def unflatten(self, theta) -> "Mlp":
        return Mlp(self.sizes, self.activations, theta)

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, self.activations, self.theta)

    def same_architecture(self, other: "Mlp") -> bool:
        return self.sizes == other.sizes and self.activations == other.activations

    def set_params(self, theta) -> None:
        self.theta[...] = theta

    def forward_cache(self, x):
        """Forward pass keeping every layer output (input included)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"input has {x.shape[-1]} features, network expects {self.in_dim}")
        outs = [x]
        h = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            h = h @ w + b
            if act == "relu":
                h = np.maximum(h, 0.0)
            elif act == "tanh":
                h = np.tanh(h)
            outs.append(h)
        return outs

    def __call__(self, x):
        return self.forward_cache(x)[-1]

    def backward_cache(self, outs, output_grad):
        """Gradients of sum(output * output_grad) w.r.t. parameters and input."""
        g = np.asarray(output_grad, dtype=float)
        if g.shape != outs[-1].shape:
            raise ValueError(f"output_grad shape {g.shape} != output shape {outs[-1].shape}")
        grad = np.empty_like(self.theta)
        gw_views, gb_views = [], []
        offset = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            gw_views.append(grad[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out))
            offset += fan_in * fan_out
            gb_views.append(grad[offset:offset + fan_out])
            offset += fan_out
        for i in range(len(self.weights) - 1, -1, -1):
            act = self.activations[i]
            y = outs[i + 1]
            if act == "relu":
                g = g * (y > 0.0)  # subgradient 0 at the kink
            elif act == "tanh":
                g = g * (1.0 - y * y)
            x = outs[i]
            if x.ndim == 1:
                gw_views[i][...] = np.outer(x, g)
                gb_views[i][...] = g
            else:
                gw_views[i][...] = x.T @ g
                gb_views[i][...] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grad, g


def forward(net: Mlp, x):
    return net(x)


def backward(net: Mlp, x, output_grad):
    """(param_grad, input_grad) of sum(net(x) * output_grad)."""
    return net.backward_cache(net.forward_cache(x), output_grad)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, lr: float = 1e-3, **kwargs) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, lr, **kwargs)


def adam_step(params, grads, opt: AdamState):
    """One bias-corrected Adam update. Returns (new_params, new_state)."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != opt.m.shape:
        raise ValueError(f"length mismatch: params {params.shape}, grads {grads.shape}, "
                         f"state {opt.m.shape}")
    step = opt.step + 1
    m = opt.beta1 * opt.m
    m += (1.0 - opt.beta1) * grads
    v = opt.beta2 * opt.v
    v += (1.0 - opt.beta2) * (grads * grads)
    denom = np.sqrt(v / (1.0 - opt.beta2 ** step))
    denom += opt.eps
    update = m / denom
    update *= opt.lr / (1.0 - opt.beta1 ** step)
    return params - update, replace(opt, m=m, v=v, step=step)


def soft_update(target: Mlp, online: Mlp, tau: float) -> Mlp:
    """In place: target <- tau * online + (1 - tau) * target.

    Coordinates that already agree are left untouched, so a target tracking a
    frozen network stays bit-identical (the blend itself can round by an ulp).
    """
    if not target.same_architecture(online):
        raise ValueError("target and online networks differ in architecture")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    blended = tau * online.theta + (1.0 - tau) * target.theta
    np.copyto(target.theta, blended, where=online.theta != target.theta)
    return target


@dataclass
class Checkpoint:
    nets: dict[str, Mlp]
    optimizers: dict[str, AdamState] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    """Write an ``.npz`` holding a JSON descriptor plus raw float64 arrays."""
    header = {
        "version": CHECKPOINT_VERSION,
        "nets": {name: {"sizes": net.sizes, "activations": net.activations}
                 for name, net in ckpt.nets.items()},
        "optimizers": {name: {"step": opt.step, "lr": opt.lr, "beta1": opt.beta1,
                              "beta2": opt.beta2, "eps": opt.eps}
                       for name, opt in ckpt.optimizers.items()},
        "meta": ckpt.meta,
    }
    arrays = {"header": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)}
    for name, net in ckpt.nets.items():
        arrays[f"net.{name}"] = net.theta
    for name, opt in ckpt.optimizers.items():
        arrays[f"opt.{name}.m"] = opt.m
        arrays[f"opt.{name}.v"] = opt.v
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> Checkpoint:
    with np.load(Path(path), allow_pickle=False) as data:
        header = json.loads(bytes(data["header"]).decode())
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')!r}")
        nets = {name: Mlp(spec["sizes"], spec["activations"], data[f"net.{name}"])
                for name, spec in header["nets"].items()}
        opts = {name: AdamState(data[f"opt.{name}.m"].copy(), data[f"opt.{name}.v"].copy(), **spec)
                for name, spec in header["optimizers"].items()}
    return Checkpoint(nets, opts, header["meta"])
