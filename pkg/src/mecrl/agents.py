"""Replay buffer, exploration, and the three trainers.

The decentralized baseline gives every user its own actor and critic over
local observations; the centralized variant feeds each critic the joint
observations and actions of all users; the robust variant adds one
adversarial reward network per agent whose (clamped) output replaces the
stored reward inside the temporal-difference target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import neural
from .env import Action, EnvConfig, MecEnv, StepResult
from .neural import (AdamState, Gradients, MlpParams, adam_step, backward,
                     eval_vec, forward, soft_update)

ALGOS = ("ddpg", "maddpg", "rmaddpg")


@dataclass
class TrainerConfig:
    """Training hyperparameters; exploration scales are fractions of the
    per-dimension power ceiling."""

    gamma: float = 0.95
    batch_size: int = 128
    buffer_capacity: int = 100_000
    warmup_steps: int = 1000
    explore_sigma0: float = 0.2
    explore_decay: float = 0.995
    explore_sigma_floor: float = 0.02
    tau_soft: float = 0.01
    updates_per_step: int = 1
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    lr_nature: float = 1e-3
    hidden: int = 64

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.batch_size < 1 or self.batch_size > self.buffer_capacity:
            raise ValueError("batch_size must satisfy 1 <= batch_size <= buffer_capacity")
        if self.warmup_steps < 0 or self.updates_per_step < 0:
            raise ValueError("warmup_steps and updates_per_step must be nonnegative")
        if self.explore_sigma0 < 0 or self.explore_sigma_floor < 0:
            raise ValueError("exploration scales must be nonnegative")
        if not 0.0 < self.explore_decay <= 1.0:
            raise ValueError(f"explore_decay must lie in (0, 1], got {self.explore_decay}")
        if not 0.0 <= self.tau_soft <= 1.0:
            raise ValueError(f"tau_soft must lie in [0, 1], got {self.tau_soft}")
        if min(self.lr_actor, self.lr_critic, self.lr_nature) < 0 or self.hidden < 1:
            raise ValueError("learning rates must be nonnegative and hidden >= 1")


@dataclass
class Transition:
    """One stored interaction: per-user vectors, actions in raw watts,
    and the perceived (possibly perturbed) rewards."""

    obs: list[np.ndarray]
    acts: list[np.ndarray]
    rewards: list[float]
    next_obs: list[np.ndarray]


@dataclass
class Batch:
    """Stacked sample: axes are (batch, user, feature)."""

    obs: np.ndarray        # (k, M, obs_dim)
    acts: np.ndarray       # (k, M, 2)
    rewards: np.ndarray    # (k, M)
    next_obs: np.ndarray   # (k, M, obs_dim)


class ReplayBuffer:
    """Fixed-capacity FIFO ring sampled uniformly with replacement."""

    def __init__(self, capacity: int, n_users: int, obs_dim: int, act_dim: int = 2):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._obs = np.empty((capacity, n_users, obs_dim))
        self._acts = np.empty((capacity, n_users, act_dim))
        self._rewards = np.empty((capacity, n_users))
        self._next_obs = np.empty((capacity, n_users, obs_dim))
        self._size = 0
        self._cursor = 0

    def __len__(self) -> int:
        return self._size

    def push(self, t: Transition) -> None:
        cur = self._cursor
        for m in range(self._obs.shape[1]):
            self._obs[cur, m] = t.obs[m]
            self._acts[cur, m] = t.acts[m]
            self._next_obs[cur, m] = t.next_obs[m]
        self._rewards[cur] = t.rewards
        self._cursor = (cur + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _draw(self, k: int, rng: np.random.Generator) -> np.ndarray:
        if k > self._size:
            raise ValueError(f"cannot sample {k} transitions from {self._size} stored")
        return rng.integers(0, self._size, size=k)

    def sample(self, k: int, rng: np.random.Generator) -> list[Transition]:
        idx = self._draw(k, rng)
        out = []
        for i in idx:
            out.append(Transition(
                obs=[self._obs[i, m].copy() for m in range(self._obs.shape[1])],
                acts=[self._acts[i, m].copy() for m in range(self._acts.shape[1])],
                rewards=[float(r) for r in self._rewards[i]],
                next_obs=[self._next_obs[i, m].copy() for m in range(self._next_obs.shape[1])],
            ))
        return out

    def sample_arrays(self, k: int, rng: np.random.Generator) -> Batch:
        idx = self._draw(k, rng)
        return Batch(self._obs[idx], self._acts[idx], self._rewards[idx], self._next_obs[idx])

    def stored(self) -> list[Transition]:
        """All retained transitions, oldest first (test hook)."""
        if self._size < self.capacity:
            order = range(self._size)
        else:
            order = [(self._cursor + i) % self.capacity for i in range(self.capacity)]
        return [Transition(
            obs=[self._obs[i, m].copy() for m in range(self._obs.shape[1])],
            acts=[self._acts[i, m].copy() for m in range(self._acts.shape[1])],
            rewards=[float(r) for r in self._rewards[i]],
            next_obs=[self._next_obs[i, m].copy() for m in range(self._next_obs.shape[1])],
        ) for i in order]


@dataclass
class DdpgAgent:
    """Actor/critic pair with target copies and per-network optimizer state."""

    actor: MlpParams
    actor_target: MlpParams
    actor_opt: AdamState
    critic: MlpParams
    critic_target: MlpParams
    critic_opt: AdamState
    obs_dim: int
    p_max: np.ndarray  # (2,) per-dimension action ceilings in watts
    # Scratch gradient buffers reused across update calls.
    actor_grad: Gradients = None
    critic_grad: Gradients = None


@dataclass
class NatureNet:
    """Adversarial scalar reward estimate over one agent's (obs, action)."""

    net: MlpParams
    opt: AdamState


@dataclass
class UpdateStats:
    critic_loss: float
    actor_objective: float
    nature_mean: float | None = None


def make_agent(obs_dim: int, critic_in_dim: int, p_max: np.ndarray,
               tc: TrainerConfig, rng: np.random.Generator) -> DdpgAgent:
    actor = neural.init_mlp(obs_dim, 2, rng, tc.hidden)
    critic = neural.init_mlp(critic_in_dim, 1, rng, tc.hidden)
    return DdpgAgent(
        actor=actor, actor_target=actor.copy(), actor_opt=AdamState(lr=tc.lr_actor),
        critic=critic, critic_target=critic.copy(), critic_opt=AdamState(lr=tc.lr_critic),
        obs_dim=obs_dim, p_max=np.asarray(p_max, dtype=np.float64),
        actor_grad=Gradients(obs_dim, 2, tc.hidden),
        critic_grad=Gradients(critic_in_dim, 1, tc.hidden),
    )


def make_nature(obs_dim: int, tc: TrainerConfig, rng: np.random.Generator) -> NatureNet:
    return NatureNet(net=neural.init_mlp(obs_dim + 2, 1, rng, tc.hidden),
                     opt=AdamState(lr=tc.lr_nature))


def _squash(u: np.ndarray, p_max: np.ndarray) -> np.ndarray:
    """Map unbounded actor outputs into [0, p_max] per dimension."""
    return (np.tanh(u) + 1.0) * (0.5 * p_max)


def _neg(g: Gradients) -> Gradients:
    np.negative(g.flat, out=g.flat)
    return g


def act(agent: DdpgAgent, obs_vec: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Deterministic policy output plus clipped Gaussian exploration noise."""
    a = _squash(eval_vec(agent.actor, obs_vec), agent.p_max)
    if sigma > 0.0:
        a = a + rng.normal(0.0, sigma * agent.p_max)
    return np.clip(a, 0.0, agent.p_max)


def target_action(agent: DdpgAgent, next_obs: np.ndarray) -> np.ndarray:
    """Target-policy action at the next observation, no noise."""
    u, _ = forward(agent.actor_target, next_obs)
    return _squash(u, agent.p_max)


def critic_target_values(agent: DdpgAgent, next_obs_cols: list[np.ndarray],
                         next_act_cols: list[np.ndarray], rewards: np.ndarray,
                         gamma: float) -> np.ndarray:
    """Bootstrapped regression target: r + gamma * Q_target(s', a')."""
    x_next = np.concatenate(next_obs_cols + next_act_cols, axis=1)
    q_next, _ = forward(agent.critic_target, x_next)
    return rewards[:, None] + gamma * q_next


_MEAN_DY: dict[int, np.ndarray] = {}


def _mean_dy(batch: int) -> np.ndarray:
    """Upstream gradient of a batch mean over scalar outputs."""
    dy = _MEAN_DY.get(batch)
    if dy is None:
        dy = _MEAN_DY[batch] = np.full((batch, 1), 1.0 / batch)
    return dy


def td_update(agent: DdpgAgent, obs_cols: list[np.ndarray], act_cols: list[np.ndarray],
              next_obs_cols: list[np.ndarray], next_act_cols: list[np.ndarray],
              rewards: np.ndarray, own_index: int, gamma: float, tau_soft: float) -> UpdateStats:
    """One critic regression step and one actor ascent step for one agent.

    ``obs_cols``/``act_cols`` hold the per-user batch slices the critic
    consumes, in user order; ``own_index`` selects the columns belonging to
    this agent's own action. Targets are soft-updated afterwards.
    """
    batch = rewards.shape[0]
    y = critic_target_values(agent, next_obs_cols, next_act_cols, rewards, gamma)

    # Critic: minimize mean squared Bellman error.
    x = np.concatenate(obs_cols + act_cols, axis=1)
    q, cache_q = forward(agent.critic, x)
    err = q - y
    flat_err = err.ravel()
    critic_loss = float(flat_err @ flat_err) / batch
    err *= 2.0 / batch
    g_critic, _ = backward(agent.critic, cache_q, err,
                           out=agent.critic_grad, need_dx=False)
    adam_step(agent.critic_opt, agent.critic, g_critic)

    # Actor: ascend mean Q(s, mu(s)) through the critic's input gradient,
    # other users' action columns taken from the sampled batch.
    u, cache_a = forward(agent.actor, obs_cols[own_index])
    t = np.tanh(u)
    half = 0.5 * agent.p_max
    own_cols = list(act_cols)
    own_cols[own_index] = (t + 1.0) * half
    x2 = np.concatenate(obs_cols + own_cols, axis=1)
    q2, cache_q2 = forward(agent.critic, x2)
    actor_objective = float(np.mean(q2))
    _, dx = backward(agent.critic, cache_q2, _mean_dy(batch))
    off = sum(o.shape[1] for o in obs_cols) + 2 * own_index
    du = dx[:, off:off + 2] * ((1.0 - t * t) * half)
    g_actor, _ = backward(agent.actor, cache_a, du, out=agent.actor_grad, need_dx=False)
    adam_step(agent.actor_opt, agent.actor, _neg(g_actor))

    soft_update(agent.critic_target, agent.critic, tau_soft)
    soft_update(agent.actor_target, agent.actor, tau_soft)
    return UpdateStats(critic_loss, actor_objective)


def ddpg_update(agents: list[DdpgAgent], batch: Batch, gamma: float, tau_soft: float) -> list[UpdateStats]:
    """Decentralized update: each critic sees only its own user's slice."""
    stats = []
    for i, ag in enumerate(agents):
        next_obs = batch.next_obs[:, i, :]
        stats.append(td_update(
            ag,
            [batch.obs[:, i, :]], [batch.acts[:, i, :]],
            [next_obs], [target_action(ag, next_obs)],
            batch.rewards[:, i], 0, gamma, tau_soft,
        ))
    return stats


def _joint_columns(agents: list[DdpgAgent], batch: Batch):
    n = len(agents)
    obs_cols = [batch.obs[:, i, :] for i in range(n)]
    act_cols = [batch.acts[:, i, :] for i in range(n)]
    next_obs_cols = [batch.next_obs[:, i, :] for i in range(n)]
    next_act_cols = [target_action(ag, next_obs_cols[i]) for i, ag in enumerate(agents)]
    return obs_cols, act_cols, next_obs_cols, next_act_cols


def maddpg_update(agents: list[DdpgAgent], batch: Batch, gamma: float, tau_soft: float) -> list[UpdateStats]:
    """Centralized-critic update over joint observations and actions."""
    obs_cols, act_cols, next_obs_cols, next_act_cols = _joint_columns(agents, batch)
    return [
        td_update(ag, obs_cols, act_cols, next_obs_cols, next_act_cols,
                  batch.rewards[:, i], i, gamma, tau_soft)
        for i, ag in enumerate(agents)
    ]


def rmaddpg_update(agents: list[DdpgAgent], natures: list[NatureNet], batch: Batch,
                   gamma: float, tau_soft: float, noise_level: float) -> list[UpdateStats]:
    """Robust update: the adversary's reward estimate replaces the stored
    reward in the TD target, clamped to the uncertainty band around it;
    the adversary then descends its own output at the sampled points."""
    obs_cols, act_cols, next_obs_cols, next_act_cols = _joint_columns(agents, batch)
    k = batch.rewards.shape[0]
    stats = []
    for i, (ag, na) in enumerate(zip(agents, natures)):
        sa = np.concatenate([obs_cols[i], act_cols[i]], axis=1)
        r_hat, cache_n = forward(na.net, sa)
        stored = batch.rewards[:, i]
        band = 2.0 * noise_level
        r_tilde = np.clip(r_hat[:, 0], stored - band, stored + band)
        s = td_update(ag, obs_cols, act_cols, next_obs_cols, next_act_cols,
                      r_tilde, i, gamma, tau_soft)
        s.nature_mean = float(np.mean(r_hat))
        g_nature, _ = backward(na.net, cache_n, _mean_dy(k), need_dx=False)
        adam_step(na.opt, na.net, g_nature)
        stats.append(s)
    return stats


@dataclass
class EpisodeStats:
    true_returns: tuple[float, ...]
    perceived_returns: tuple[float, ...]
    sigma: float


class Trainer:
    """Owns the agents, adversaries, replay buffer and exploration state
    for one training run."""

    def __init__(self, env_cfg: EnvConfig, tc: TrainerConfig, algo: str,
                 rng_init: np.random.Generator):
        if algo not in ALGOS:
            raise ValueError(f"unknown algo {algo!r}, expected one of {ALGOS}")
        tc.validate()
        env_cfg.validate()
        self.algo = algo
        self.tc = tc
        self.noise_level = env_cfg.noise_level
        n = env_cfg.n_users
        obs_dim = env_cfg.obs_dim
        critic_in = obs_dim + 2 if algo == "ddpg" else n * (obs_dim + 2)
        self.agents = [
            make_agent(
                obs_dim, critic_in,
                np.array([env_cfg.p_max_offload_w[m], env_cfg.p_max_local_w[m]]),
                tc, rng_init,
            )
            for m in range(n)
        ]
        self.natures = [make_nature(obs_dim, tc, rng_init) for _ in range(n)] if algo == "rmaddpg" else None
        self.buffer = ReplayBuffer(tc.buffer_capacity, n, obs_dim)
        self.sigma = tc.explore_sigma0
        self.total_steps = 0

    def update(self, rng_sample: np.random.Generator) -> list[UpdateStats]:
        batch = self.buffer.sample_arrays(self.tc.batch_size, rng_sample)
        if self.algo == "ddpg":
            return ddpg_update(self.agents, batch, self.tc.gamma, self.tc.tau_soft)
        if self.algo == "maddpg":
            return maddpg_update(self.agents, batch, self.tc.gamma, self.tc.tau_soft)
        return rmaddpg_update(self.agents, self.natures, batch,
                              self.tc.gamma, self.tc.tau_soft, self.noise_level)


def train_episode(env: MecEnv, trainer: Trainer, rng_explore: np.random.Generator,
                  rng_sample: np.random.Generator) -> EpisodeStats:
    """One episode of interaction: act, step, store, and (after warmup)
    update; exploration noise decays at the episode boundary."""
    tc = trainer.tc
    n = env.cfg.n_users
    env.reset()
    vecs = env.obs_vectors()
    true_sums = np.zeros(n)
    perceived_sums = np.zeros(n)
    sigma = trainer.sigma
    for _ in range(env.cfg.episode_len):
        act_vecs = [act(trainer.agents[m], vecs[m], sigma, rng_explore) for m in range(n)]
        result: StepResult = env.step([Action(float(a[0]), float(a[1])) for a in act_vecs])
        next_vecs = env.obs_vectors()
        trainer.buffer.push(Transition(vecs, act_vecs, result.perceived_rewards, next_vecs))
        true_sums += result.true_rewards
        perceived_sums += result.perceived_rewards
        trainer.total_steps += 1
        if trainer.total_steps > tc.warmup_steps and len(trainer.buffer) >= tc.batch_size:
            for _ in range(tc.updates_per_step):
                trainer.update(rng_sample)
        vecs = next_vecs
    trainer.sigma = max(trainer.sigma * tc.explore_decay, tc.explore_sigma_floor)
    return EpisodeStats(tuple(float(v) for v in true_sums),
                        tuple(float(v) for v in perceived_sums), sigma)
