"""Deep deterministic policy gradient: replay, exploration, actor/critic updates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .neural import MLP, NetSpec, adam_step, soft_update
from .rl_env import MaCnomaEnv
from .seeding import stream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AgentConfig:
    discount: float = 0.99
    tau: float = 0.001
    buffer_capacity: int = 50_000
    batch_size: int = 64
    noise_stddev_initial: float = 0.3
    noise_decay: float = 0.99
    noise_floor: float = 0.02
    episodes: int = 400
    steps: int = 100
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    hidden: tuple[int, ...] = (128, 128)
    actor_final_scale: float = 0.01
    reward_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must be in (0, 1), got {self.discount}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if not 1 <= self.batch_size <= self.buffer_capacity:
            raise ValueError("need 1 <= batch_size <= buffer_capacity")
        if self.episodes < 1 or self.steps < 1:
            raise ValueError("episodes and steps must be >= 1")
        if self.reward_scale <= 0:
            raise ValueError("reward_scale must be > 0")

    def noise_at(self, episode: int) -> float:
        return max(self.noise_floor, self.noise_stddev_initial * self.noise_decay ** episode)


@dataclass
class Batch:
    state: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_state: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring of transitions; the oldest entry is overwritten first."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.state = np.zeros((capacity, state_dim))
        self.action = np.zeros((capacity, action_dim))
        self.reward = np.zeros(capacity)
        self.next_state = np.zeros((capacity, state_dim))
        self.size = 0
        self._next = 0

    def __len__(self):
        return self.size

    def add(self, state, action, reward, next_state):
        i = self._next
        self.state[i] = state
        self.action[i] = action
        self.reward[i] = reward
        self.next_state[i] = next_state
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return Batch(self.state[idx], self.action[idx], self.reward[idx], self.next_state[idx])


def select_action(actor: MLP, state, noise_stddev: float, rng: np.random.Generator | None = None):
    """Actor output plus Gaussian exploration noise, clipped to ``[-1, 1]``."""
    action = actor(state)
    if noise_stddev > 0:
        action = action + rng.normal(0.0, noise_stddev, size=action.shape)
    return np.clip(action, -1.0, 1.0)


def critic_target(batch: Batch, target_actor: MLP, target_critic: MLP, discount: float,
                  reward_scale: float = 1.0) -> np.ndarray:
    """Bootstrapped regression target ``r + discount * Q'(s', mu'(s'))``."""
    next_action = target_actor(batch.next_state)
    q_next = target_critic(np.concatenate([batch.next_state, next_action], axis=1))[:, 0]
    return reward_scale * batch.reward + discount * q_next


class DDPGAgent:
    def __init__(self, state_dim: int, action_dim: int, config: AgentConfig = AgentConfig(), seed: int = 0):
        self.config = config
        self.state_dim = state_dim
        self.action_dim = action_dim
        init_rng = stream(seed, "init")
        self.actor = MLP(NetSpec(state_dim, action_dim, tuple(config.hidden), "tanh"), init_rng,
                         final_scale=config.actor_final_scale)
        self.critic = MLP(NetSpec(state_dim + action_dim, 1, tuple(config.hidden), "identity"), init_rng)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.buffer = ReplayBuffer(config.buffer_capacity, state_dim, action_dim)
        self.replay_rng = stream(seed, "replay")
        self.explore_rng = stream(seed, "exploration")

    def act(self, state, noise_stddev: float = 0.0):
        return select_action(self.actor, state, noise_stddev, self.explore_rng)

    def update(self):
        """Sample a minibatch and run one training step; ``None`` while the buffer is short."""
        if len(self.buffer) < self.config.batch_size:
            log.warning("replay buffer holds %d < %d transitions; skipping update",
                        len(self.buffer), self.config.batch_size)
            return None
        return train_step(self, self.buffer.sample(self.config.batch_size, self.replay_rng))


def actor_gradient(actor: MLP, critic: MLP, states) -> tuple[np.ndarray, float]:
    """Gradient of ``-mean Q(s, mu(s))`` w.r.t. the actor parameters, and that mean.

    The gradient flows through the critic's action input only; the critic is
    not changed.
    """
    n = len(states)
    pi, actor_cache = actor.forward(states)
    q_pi, q_cache = critic.forward(np.concatenate([states, pi], axis=1))
    _, dq_dinput = critic.backward(q_cache, np.full((n, 1), -1.0 / n))
    grads, _ = actor.backward(actor_cache, dq_dinput[:, states.shape[1]:])
    return grads, float(np.mean(q_pi))


def train_step(agent: DDPGAgent, batch: Batch) -> tuple[float, float]:
    """Critic regression step, actor ascent step through the critic, then soft target updates.

    Returns the critic's mean-squared error before its update and the mean
    ``Q(s, mu(s))`` before the actor update.
    """
    cfg = agent.config
    n = len(batch.reward)
    y = critic_target(batch, agent.target_actor, agent.target_critic, cfg.discount, cfg.reward_scale)

    q, cache = agent.critic.forward(np.concatenate([batch.state, batch.action], axis=1))
    err = q[:, 0] - y
    critic_loss = float(np.mean(err ** 2))
    grads, _ = agent.critic.backward(cache, (2.0 / n) * err[:, None])
    adam_step(agent.critic, grads, cfg.critic_lr, cfg.betas)

    # Ascend mean Q by descending on -Q through the freshly updated critic.
    actor_grads, actor_objective = actor_gradient(agent.actor, agent.critic, batch.state)
    adam_step(agent.actor, actor_grads, cfg.actor_lr, cfg.betas)

    soft_update(agent.target_critic, agent.critic, cfg.tau)
    soft_update(agent.target_actor, agent.actor, cfg.tau)
    return critic_loss, actor_objective


@dataclass
class TrainResult:
    agent: DDPGAgent
    learning_curve: np.ndarray
    critic_losses: list = field(default_factory=list)


def train(env: MaCnomaEnv, agent_config: AgentConfig = AgentConfig(), seed: int = 0,
          progress=None) -> TrainResult:
    """Run ``episodes x steps`` of interaction with one update per step.

    Episode ``k`` draws its scenario from the ``scenario`` stream at index
    ``k``. ``progress`` is called as ``progress(episode, mean_reward)``.
    """
    cfg = agent_config
    agent = DDPGAgent(env.state_dim, env.action_dim, cfg, seed)
    curve = np.zeros(cfg.episodes)
    losses = []
    for episode in range(cfg.episodes):
        state = env.reset(stream(seed, "scenario", episode))
        noise = cfg.noise_at(episode)
        total = 0.0
        for _ in range(cfg.steps):
            action = agent.act(state, noise)
            next_state, r, _ = env.step(action)
            agent.buffer.add(state, action, r, next_state)
            out = agent.update() if len(agent.buffer) >= cfg.batch_size else None
            if out is not None:
                losses.append(out[0])
            state = next_state
            total += r
        curve[episode] = total / cfg.steps
        if progress is not None:
            progress(episode, curve[episode])
    return TrainResult(agent, curve, losses)


def rollout(actor: MLP, env: MaCnomaEnv, scenario, steps: int):
    """Deterministic policy rollout on a fixed scenario.

    Returns ``(best feasible sum rate or 0.0, per-step rewards)``.
    """
    state = env.reset(scenario=scenario)
    best = 0.0
    rewards = np.zeros(steps)
    for t in range(steps):
        state, r, info = env.step(select_action(actor, state, 0.0))
        rewards[t] = r
        if info.evaluation.feasible:
            best = max(best, float(info.evaluation.sum_rate))
    return best, rewards
