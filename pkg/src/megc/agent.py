"""DDPG resource-allocation agent (LARA): replay buffer, losses, training loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .env import RAW_DIM, STATE_DIM, MegcEnv, project_batch, project_batch_backward
from .latency import ACTION_DIM, Action
from .nn import AdamState, Checkpoint, Mlp, adam_step, soft_update
from .system import ValidationError


class NumericalFault(RuntimeError):
    """A loss or parameter became NaN/inf during training."""


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.5
    tau: float = 0.005
    batch_size: int = 64
    buffer_capacity: int = 100_000
    noise_sigma: float = 0.2
    noise_decay: float = 0.999
    noise_floor: float = 0.01
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    warmup_steps: int = 1000
    warmup_scale: float = 2.0
    hidden: tuple[int, ...] = (128, 128)
    actor_final_scale: float = 0.1
    per_step_target_update: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValidationError("gamma", f"must lie in [0, 1), got {self.gamma!r}")
        if not 0.0 < self.tau <= 1.0:
            raise ValidationError("tau", f"must lie in (0, 1], got {self.tau!r}")
        if self.batch_size < 1:
            raise ValidationError("batch_size", "must be >= 1")
        if self.batch_size > self.buffer_capacity:
            raise ValidationError("batch_size", "must not exceed buffer_capacity")
        if self.noise_sigma < 0 or self.noise_floor < 0:
            raise ValidationError("noise_sigma", "noise scales must be >= 0")
        if not 0.0 < self.noise_decay <= 1.0:
            raise ValidationError("noise_decay", "must lie in (0, 1]")
        if self.actor_lr < 0 or self.critic_lr < 0:
            raise ValidationError("actor_lr", "learning rates must be >= 0")
        if self.warmup_steps < 0:
            raise ValidationError("warmup_steps", "must be >= 0")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValidationError("hidden", f"bad hidden sizes {self.hidden!r}")


class ReplayBuffer:
    """Fixed-capacity ring buffer of (s, a, r, s', done) rows."""

    def __init__(self, capacity: int, state_dim: int = STATE_DIM, action_dim: int = ACTION_DIM):
        self.capacity = int(capacity)
        self.states = np.zeros((self.capacity, state_dim))
        self.actions = np.zeros((self.capacity, action_dim))
        self.rewards = np.zeros(self.capacity)
        self.next_states = np.zeros((self.capacity, state_dim))
        self.terminals = np.zeros(self.capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, state, action, reward, next_state, terminal=False):
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.terminals[i] = terminal
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n > self.size:
            raise ValueError(f"cannot draw {n} distinct rows from {self.size}")
        return rng.choice(self.size, size=n, replace=False)

    def sample(self, rng: np.random.Generator, n: int):
        idx = self.sample_indices(rng, n)
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx],
                     self.next_states[idx], self.terminals[idx])


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self):
        return len(self.rewards)


def compute_target(batch: Batch, critic_target: Mlp, actor_target: Mlp, gamma: float,
                   eps: float = 1e-3) -> np.ndarray:
    """y = r + gamma * Q'(s', project(mu'(s'))), bootstrapping on every row."""
    next_actions = project_batch(actor_target(batch.next_states), eps)
    q_next = critic_target(np.hstack([batch.next_states, next_actions]))[:, 0]
    return batch.rewards + gamma * q_next


def critic_loss_and_grad(critic: Mlp, batch: Batch, y):
    """Mean squared TD error and its gradient w.r.t. critic parameters."""
    outs = critic.forward_cache(np.hstack([batch.states, batch.actions]))
    q = outs[-1][:, 0]
    diff = y - q
    loss = float(np.mean(diff * diff))
    dq = (-2.0 / len(y)) * diff
    grad, _ = critic.backward_cache(outs, dq[:, None])
    return loss, grad


def actor_loss_and_grad(actor: Mlp, critic: Mlp, states, eps: float = 1e-3):
    """-mean Q(s, project(mu(s))) and its gradient w.r.t. actor parameters."""
    actor_outs = actor.forward_cache(states)
    raw = actor_outs[-1]
    actions = project_batch(raw, eps)
    critic_outs = critic.forward_cache(np.hstack([states, actions]))
    q = critic_outs[-1][:, 0]
    n = len(q)
    loss = -float(np.mean(q))
    _, grad_in = critic.backward_cache(critic_outs, np.full((n, 1), -1.0 / n))
    grad_action = grad_in[:, states.shape[1]:]
    grad_raw = project_batch_backward(raw, grad_action, eps)
    grad, _ = actor.backward_cache(actor_outs, grad_raw)
    return loss, grad


@dataclass
class TrainingLog:
    episode: list[int] = field(default_factory=list)
    episode_return: list[float] = field(default_factory=list)
    lat_comp: list[float] = field(default_factory=list)
    lat_aigc: list[float] = field(default_factory=list)
    lat_ve: list[float] = field(default_factory=list)
    critic_loss: list[float] = field(default_factory=list)
    actor_loss: list[float] = field(default_factory=list)
    updates: list[int] = field(default_factory=list)

    def rows(self):
        return list(zip(self.episode, self.episode_return, self.lat_comp, self.lat_aigc,
                        self.lat_ve, self.critic_loss, self.actor_loss, self.updates))


class DdpgAgent:
    """Actor, critic, their targets and optimizers.

    The actor emits 7 raw logits that are projected onto the feasible action
    set; the critic scores (state, projected action) pairs.
    """

    def __init__(self, config: AgentConfig | None = None, seed: int | None = 0,
                 state_dim: int = STATE_DIM, eps: float = 1e-3):
        self.config = config or AgentConfig()
        self.eps = eps
        self.state_dim = state_dim
        seeds = np.random.SeedSequence(seed).spawn(3)
        init_rng = np.random.default_rng(seeds[0])
        self.noise_rng = np.random.default_rng(seeds[1])
        self.sample_rng = np.random.default_rng(seeds[2])
        hidden = list(self.config.hidden)
        self.actor = Mlp.initialized([state_dim, *hidden, RAW_DIM],
                                     ["tanh"] * len(hidden) + ["identity"], init_rng,
                                     final_scale=self.config.actor_final_scale)
        self.critic = Mlp.initialized([state_dim + ACTION_DIM, *hidden, 1],
                                      ["relu"] * len(hidden) + ["identity"], init_rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = AdamState.zeros(self.actor.n_params, lr=self.config.actor_lr)
        self.critic_opt = AdamState.zeros(self.critic.n_params, lr=self.config.critic_lr)
        self.buffer = ReplayBuffer(self.config.buffer_capacity, state_dim, ACTION_DIM)
        self.sigma = self.config.noise_sigma

    def parameter_counts(self) -> dict[str, int]:
        return {"actor": self.actor.n_params, "critic": self.critic.n_params}

    def act_raw(self, state_vec) -> np.ndarray:
        return self.actor(np.asarray(state_vec, dtype=float))

    def select_action(self, state_vec, explore: bool = False,
                      rng: np.random.Generator | None = None):
        """(raw, projected Action); Gaussian noise is added to the raw logits."""
        raw = self.act_raw(state_vec)
        if explore and self.sigma > 0:
            rng = rng or self.noise_rng
            raw = raw + self.sigma * rng.standard_normal(raw.shape)
        return raw, Action.from_array(project_batch(raw, self.eps))

    def policy(self, state_vec) -> Action:
        return self.select_action(state_vec, explore=False)[1]

    def critic_update(self, batch: Batch, y) -> float:
        loss, grad = critic_loss_and_grad(self.critic, batch, y)
        new, self.critic_opt = adam_step(self.critic.theta, grad, self.critic_opt)
        self.critic.set_params(new)
        return loss

    def actor_update(self, batch: Batch) -> float:
        loss, grad = actor_loss_and_grad(self.actor, self.critic, batch.states, self.eps)
        new, self.actor_opt = adam_step(self.actor.theta, grad, self.actor_opt)
        self.actor.set_params(new)
        return loss

    def update_targets(self) -> None:
        soft_update(self.actor_target, self.actor, self.config.tau)
        soft_update(self.critic_target, self.critic, self.config.tau)

    def learn(self) -> tuple[float, float]:
        """One critic step, one actor step and a target blend on a fresh minibatch."""
        batch = self.buffer.sample(self.sample_rng, self.config.batch_size)
        y = compute_target(batch, self.critic_target, self.actor_target, self.config.gamma, self.eps)
        c_loss = self.critic_update(batch, y)
        a_loss = self.actor_update(batch)
        if self.config.per_step_target_update:
            self.update_targets()
        return c_loss, a_loss

    def decay_noise(self) -> None:
        self.sigma = max(self.sigma * self.config.noise_decay, self.config.noise_floor)

    def to_checkpoint(self, meta: dict | None = None) -> Checkpoint:
        return Checkpoint(
            nets={"actor": self.actor, "critic": self.critic,
                  "actor_target": self.actor_target, "critic_target": self.critic_target},
            optimizers={"actor": self.actor_opt, "critic": self.critic_opt},
            meta={"sigma": self.sigma, "eps": self.eps, **(meta or {})},
        )

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, config: AgentConfig | None = None) -> "DdpgAgent":
        agent = cls(config, seed=ckpt.meta.get("seed", 0), state_dim=ckpt.nets["actor"].in_dim,
                    eps=ckpt.meta.get("eps", 1e-3))
        for name in ("actor", "critic", "actor_target", "critic_target"):
            net = getattr(agent, name)
            if not net.same_architecture(ckpt.nets[name]):
                raise ValueError(f"checkpoint {name} architecture does not match config")
            net.set_params(ckpt.nets[name].theta)
        agent.actor_opt = ckpt.optimizers.get("actor", agent.actor_opt)
        agent.critic_opt = ckpt.optimizers.get("critic", agent.critic_opt)
        agent.sigma = ckpt.meta.get("sigma", agent.sigma)
        return agent


def train(env: MegcEnv, agent: DdpgAgent, episodes: int, seed: int = 0,
          on_episode=None) -> TrainingLog:
    """Run the episode x slot loop; deterministic for fixed seeds.

    ``on_episode(episode, agent, log)`` is called after every episode.
    """
    cfg = agent.config
    log = TrainingLog()
    warmup_rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    total_steps = 0
    for episode in range(1, episodes + 1):
        state = env.reset(seed if episode == 1 else None).as_array()
        ret = 0.0
        lat = np.zeros(3)
        c_losses, a_losses = [], []
        done = False
        while not done:
            if total_steps < cfg.warmup_steps:
                raw = cfg.warmup_scale * warmup_rng.standard_normal(RAW_DIM)
                action = Action.from_array(project_batch(raw, agent.eps))
            else:
                _, action = agent.select_action(state, explore=True)
            next_obs, reward, breakdown, done = env.step(action)
            next_state = next_obs.as_array()
            agent.buffer.add(state, action.to_array(), reward, next_state, done)
            total_steps += 1
            ret += reward
            lat += (breakdown.comp_total, breakdown.aigc_total, breakdown.ve_total)
            if total_steps > cfg.warmup_steps and len(agent.buffer) >= cfg.batch_size:
                c_loss, a_loss = agent.learn()
                if not (math.isfinite(c_loss) and math.isfinite(a_loss)):
                    raise NumericalFault(
                        f"non-finite loss at episode {episode}, step {env.t - 1}: "
                        f"critic={c_loss!r} actor={a_loss!r}")
                c_losses.append(c_loss)
                a_losses.append(a_loss)
            state = next_state
        if not cfg.per_step_target_update:
            agent.update_targets()
        agent.decay_noise()
        steps = env.horizon
        log.episode.append(episode)
        log.episode_return.append(ret)
        log.lat_comp.append(lat[0] / steps)
        log.lat_aigc.append(lat[1] / steps)
        log.lat_ve.append(lat[2] / steps)
        log.critic_loss.append(float(np.mean(c_losses)) if c_losses else float("nan"))
        log.actor_loss.append(float(np.mean(a_losses)) if a_losses else float("nan"))
        log.updates.append(len(c_losses))
        if on_episode is not None:
            on_episode(episode, agent, log)
    return log
