"""Episodic MDP around the slot model: state encoding, action projection, step/reset."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .latency import ACTION_DIM, Action, LatencyBreakdown, slot_latency
from .system import MBIT, ChannelState, SystemParams, TaskArrivals, ValidationError, sample_channel

RAW_DIM = 7
STATE_DIM = 6
EPS = 1e-3


@dataclass(frozen=True)
class EnvConfig:
    task_mode: str = "uniform"  # or "poisson"
    fading: bool = False
    rician_k: float = 10.0
    eps: float = EPS
    reward_cap: float = 60.0
    reward_scale: float = 10.0

    def __post_init__(self):
        if self.task_mode not in ("uniform", "poisson"):
            raise ValidationError("task_mode", f"expected 'uniform' or 'poisson', got {self.task_mode!r}")
        if not 0 < self.eps < 1 / 3:
            raise ValidationError("eps", f"must lie in (0, 1/3), got {self.eps!r}")
        if not self.rician_k >= 0:
            raise ValidationError("rician_k", "must be >= 0")
        if not (self.reward_cap > 0 and self.reward_scale > 0):
            raise ValidationError("reward_cap", "reward_cap and reward_scale must be > 0")


@dataclass(frozen=True)
class State:
    """Normalized observation; ``t`` is bookkeeping and not fed to networks."""

    gains: tuple[float, float, float, float]  # comp_off, aigc_back, ve_off, ve_back
    d_comp: float
    d_ve: float
    t: int

    def as_array(self) -> np.ndarray:
        return np.array([*self.gains, self.d_comp, self.d_ve], dtype=float)


def sample_tasks(rng: np.random.Generator, params: SystemParams, mode: str = "uniform") -> TaskArrivals:
    """Draw one slot's data volumes in integer bits."""
    if mode == "uniform":
        lo, hi = params.d_comp_range_mbits
        d_comp = rng.integers(round(lo * MBIT), round(hi * MBIT), endpoint=True)
    elif mode == "poisson":
        # the packet's bit count is Poisson with mean rho Mbits
        d_comp = max(1, rng.poisson(params.d_comp_mean_mbits * MBIT))
    else:
        raise ValueError(f"unknown task mode {mode!r}")
    lo, hi = params.d_ve_range_mbits
    d_ve = rng.integers(round(lo * MBIT), round(hi * MBIT), endpoint=True)
    lo, hi = params.d_gen_range_mbits
    d_gen = rng.integers(round(lo * MBIT), round(hi * MBIT), endpoint=True)
    return TaskArrivals.from_inputs(d_comp, d_ve, d_gen, params.psi)


class StateScaler:
    """Maps raw channel gains and bit counts to O(1) network inputs and back."""

    def __init__(self, params: SystemParams):
        h_comp, h_ve, h_aigc, _ = params.pathloss_gains()
        # state ordering: comp_off, aigc_back, ve_off, ve_back
        self.gain_scale = np.array([h_comp, h_aigc, h_ve, h_ve])
        self.d_comp_scale = params.d_comp_range_mbits[1] * MBIT
        self.d_ve_scale = params.d_ve_range_mbits[1] * MBIT

    def normalize(self, channel: ChannelState, tasks: TaskArrivals, t: int) -> State:
        raw = np.array([channel.h_comp_off, channel.h_aigc_back, channel.h_ve_off, channel.h_ve_back])
        gains = raw / self.gain_scale
        return State(tuple(float(g) for g in gains), tasks.d_comp / self.d_comp_scale,
                     tasks.d_ve / self.d_ve_scale, t)

    def denormalize(self, state: State) -> tuple[np.ndarray, float, float]:
        """Raw gains (state order), d_comp and d_ve in bits."""
        gains = np.asarray(state.gains) * self.gain_scale
        return gains, state.d_comp * self.d_comp_scale, state.d_ve * self.d_ve_scale


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def project_batch(raw, eps: float = EPS) -> np.ndarray:
    """Map raw logits of shape (..., 7) to feasible actions of shape (..., 9).

    Each ratio is squashed into [eps, 1-eps]: pairs and the two scalars via a
    sigmoid, the compute shares via a softmax mixed with the uniform floor.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape[-1] != RAW_DIM:
        raise ValueError(f"raw action needs {RAW_DIM} entries, got shape {raw.shape}")
    span = 1.0 - 2.0 * eps
    sig = eps + span * _sigmoid(raw[..., :4])
    logits = raw[..., 4:]
    z = np.exp(logits - logits.max(axis=-1, keepdims=True))
    soft = z / z.sum(axis=-1, keepdims=True)
    omega = eps + (1.0 - 3.0 * eps) * soft
    out = np.empty(raw.shape[:-1] + (ACTION_DIM,))
    out[..., 0] = sig[..., 0]
    out[..., 1] = 1.0 - sig[..., 0]
    out[..., 2] = sig[..., 1]
    out[..., 3] = 1.0 - sig[..., 1]
    out[..., 4] = sig[..., 2]
    out[..., 5] = sig[..., 3]
    out[..., 6:] = omega
    return out


def project_batch_backward(raw, grad_action, eps: float = EPS) -> np.ndarray:
    """Vector-Jacobian product of :func:`project_batch` w.r.t. the raw logits."""
    raw = np.asarray(raw, dtype=float)
    g = np.asarray(grad_action, dtype=float)
    span = 1.0 - 2.0 * eps
    s = _sigmoid(raw[..., :4])
    dsig = span * s * (1.0 - s)
    out = np.empty(raw.shape)
    out[..., 0] = dsig[..., 0] * (g[..., 0] - g[..., 1])
    out[..., 1] = dsig[..., 1] * (g[..., 2] - g[..., 3])
    out[..., 2] = dsig[..., 2] * g[..., 4]
    out[..., 3] = dsig[..., 3] * g[..., 5]
    logits = raw[..., 4:]
    z = np.exp(logits - logits.max(axis=-1, keepdims=True))
    soft = z / z.sum(axis=-1, keepdims=True)
    gw = g[..., 6:]
    out[..., 4:] = (1.0 - 3.0 * eps) * soft * (gw - (soft * gw).sum(axis=-1, keepdims=True))
    return out


def project_action(raw, eps: float = EPS) -> Action:
    return Action.from_array(project_batch(raw, eps))


def unproject_action(action: Action, eps: float = EPS) -> np.ndarray:
    """A raw vector that projects back onto ``action`` (interior actions only)."""
    span = 1.0 - 2.0 * eps

    def logit(p):
        q = (p - eps) / span
        return np.log(q) - np.log1p(-q)

    soft = (np.array([action.omega_comp, action.omega_aigc, action.omega_ve]) - eps) / (1.0 - 3.0 * eps)
    logs = np.log(soft)
    return np.array([logit(action.alpha_comp_off), logit(action.alpha_aigc_back),
                     logit(action.beta), logit(action.lam), *(logs - logs.mean())])


class MegcEnv:
    """Three-user MEGC slot simulator with a fixed episode length.

    ``reset(seed)`` reseeds the random stream; ``reset()`` continues it, which
    is how consecutive training episodes see fresh slots.
    """

    def __init__(self, params: SystemParams | None = None, config: EnvConfig | None = None,
                 seed: int | None = None):
        self.params = params or SystemParams()
        self.config = config or EnvConfig()
        self.scaler = StateScaler(self.params)
        self.rng = np.random.default_rng(seed)
        self.t = 0
        self.done = True
        self.channel: ChannelState | None = None
        self.tasks: TaskArrivals | None = None

    @property
    def horizon(self) -> int:
        return self.params.t_horizon

    def _draw_slot(self) -> None:
        self.channel = sample_channel(self.params, self.rng, self.config.fading, self.config.rician_k)
        self.tasks = sample_tasks(self.rng, self.params, self.config.task_mode)

    def observe(self) -> State:
        return self.scaler.normalize(self.channel, self.tasks, self.t)

    def reset(self, seed: int | None = None) -> State:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.t = 1
        self.done = False
        self._draw_slot()
        return self.observe()

    def reward(self, slot_total: float) -> float:
        return -min(slot_total, self.config.reward_cap) / self.config.reward_scale

    def step(self, action: Action) -> tuple[State, float, LatencyBreakdown, bool]:
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        breakdown = slot_latency(action, self.channel, self.tasks, self.params)
        reward = self.reward(breakdown.slot_total)
        self.t += 1
        self.done = self.t > self.horizon
        self._draw_slot()
        return self.observe(), reward, breakdown, self.done
