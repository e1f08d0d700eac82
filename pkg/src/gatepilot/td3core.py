"""Twin-critic deterministic policy-gradient training.

The trainer keeps two Q networks and one policy with Polyak-tracked
target copies. Every post-warmup environment step performs one critic
regression toward the clipped double-Q target; every second update also
ascends the policy through critic 1 and blends all three targets.
Exploration adds mean-reverting noise to the policy output. All random
draws flow through named child streams of one seed, so a (seed, config)
pair pins the run bit for bit.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import netcore


@dataclass
class Transition:
    """One step of experience; action is the normalized [-1, 1] vector."""

    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    d: float


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    d: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring of transitions in flat float arrays."""

    def __init__(self, capacity, obs_dim=8, act_dim=4):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.s = np.zeros((self.capacity, obs_dim))
        self.a = np.zeros((self.capacity, act_dim))
        self.r = np.zeros(self.capacity)
        self.s_next = np.zeros((self.capacity, obs_dim))
        self.d = np.zeros(self.capacity)
        self.size = 0
        self.cursor = 0

    def store(self, t):
        """Append one transition, overwriting the oldest once full."""
        a = np.asarray(t.a, dtype=float)
        if np.any(np.abs(a) > 1.0) or not np.all(np.isfinite(a)):
            raise ValueError(f"action outside [-1, 1]: {a}")
        if not (np.all(np.isfinite(t.s)) and np.all(np.isfinite(t.s_next))
                and math.isfinite(t.r)):
            raise ValueError("non-finite transition")
        i = self.cursor
        self.s[i] = t.s
        self.a[i] = a
        self.r[i] = t.r
        self.s_next[i] = t.s_next
        self.d[i] = t.d
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n, rng):
        """Uniform with-replacement batch of n transitions."""
        if self.size < n:
            raise ValueError(f"buffer holds {self.size} transitions, need {n}")
        idx = rng.integers(0, self.size, size=n)
        return Batch(self.s[idx], self.a[idx], self.r[idx],
                     self.s_next[idx], self.d[idx])


@dataclass
class OuProcess:
    """Mean-reverting exploration noise, one unit step per control tick."""

    theta: float = 0.2
    sigma: float = 0.15
    mu: float = 0.0
    dim: int = 4
    x: np.ndarray = None

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must be in (0, 1)")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if self.x is None:
            self.x = np.zeros(self.dim)

    def reset(self):
        self.x = np.zeros(self.dim)

    def sample(self, rng):
        self.x = self.x + self.theta * (self.mu - self.x) \
            + self.sigma * rng.standard_normal(self.dim)
        return self.x.copy()


@dataclass
class Td3Config:
    actor_lr: float = 1e-5
    critic_lr: float = 2e-5
    rho: float = 0.999  # target keeps 99.9%, moves by 1e-3 per update
    target_noise_sigma: float = 0.2
    target_noise_clip: float = 0.5
    gamma: float = 0.99
    batch_size: int = 100
    policy_delay: int = 2
    buffer_capacity: int = 1_000_000
    learning_starts: int = None
    ou_theta: float = 0.2
    ou_sigma: float = 0.15
    warmup_random_steps: int = 0
    glorot_biases: bool = False

    def __post_init__(self):
        if self.learning_starts is None:
            self.learning_starts = self.batch_size
        if min(self.actor_lr, self.critic_lr) <= 0.0:
            raise ValueError("learning rates must be positive")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be >= 1")
        if self.batch_size < 1 or self.learning_starts < self.batch_size:
            raise ValueError("need learning_starts >= batch_size >= 1")


@dataclass
class EpisodeRecord:
    episode: int
    env_steps: int
    ret: float
    outcome: object
    steps: int


class TrainHooks:
    """Override any of these to instrument a run; defaults do nothing."""

    def on_update(self, j, batch, y, q1t, q2t):
        pass

    def on_policy_update(self, j):
        pass

    def on_episode(self, record):
        pass

    def on_env_step(self, step, trainer):
        pass


def greedy_action(actor, obs):
    """Deterministic policy output (already in [-1, 1] via tanh)."""
    out, _ = netcore.forward(actor, obs)
    return out


def select_action(actor, obs, proc, rng):
    """Policy output plus exploration noise, clipped to the action box."""
    out, _ = netcore.forward(actor, obs)
    return np.clip(out + proc.sample(rng), -1.0, 1.0)


def target_actions(s_next, target_actor, sigma, clip, rng):
    """Smoothed target policy: clip(mu(s') + clip(eps, +-c), +-1)."""
    mu, _ = netcore.forward(target_actor, s_next)
    eps = rng.normal(0.0, sigma, size=mu.shape)
    np.clip(eps, -clip, clip, out=eps)
    return np.clip(mu + eps, -1.0, 1.0)


def compute_targets(r, d, q1t, q2t, gamma):
    """Bellman targets y = r + gamma*(1-d)*min(q1t, q2t)."""
    return r + gamma * (1.0 - d) * np.minimum(q1t.ravel(), q2t.ravel())


def critic_grads(critic, s, a, y):
    """Gradients of the mean squared error (1/n)*sum((Q(s,a)-y)^2)."""
    q, cache = netcore.forward(critic, np.concatenate([s, a], axis=1))
    err = q.ravel() - y
    grad_out = (2.0 / len(y)) * err[:, None]
    grads, _ = netcore.backward(critic, cache, grad_out)
    return grads, q


def actor_grads(actor, critic1, s):
    """Ascent gradients of mean Q1(s, mu(s)), already negated for Adam."""
    mu, cache_a = netcore.forward(actor, s)
    q_in = np.concatenate([s, mu], axis=1)
    _, cache_q = netcore.forward(critic1, q_in)
    grad_out = np.full((len(s), 1), 1.0 / len(s))
    grad_in = netcore.backward_input(critic1, cache_q, grad_out)
    grads, _ = netcore.backward(actor, cache_a, grad_in[:, s.shape[1]:])
    return [(-dw, -db) for dw, db in grads]


class Trainer:
    """Owns the six networks, optimizer state, buffer, and random streams.

    The environment passed in is reseeded from the trainer seed so the
    whole run replays from one integer.
    """

    STREAMS = ("init", "explore", "batch", "smooth", "env")

    def __init__(self, env, config=None, seed=0):
        self.env = env
        self.config = config if config is not None else Td3Config()
        cfg = self.config
        seqs = np.random.SeedSequence(seed).spawn(len(self.STREAMS))
        streams = dict(zip(self.STREAMS, (np.random.default_rng(s) for s in seqs)))
        self.rng_explore = streams["explore"]
        self.rng_batch = streams["batch"]
        self.rng_smooth = streams["smooth"]
        env.rng = streams["env"]

        rng_init = streams["init"]
        self.actor = netcore.init_actor(rng_init, glorot_biases=cfg.glorot_biases)
        self.critic1 = netcore.init_critic(rng_init, glorot_biases=cfg.glorot_biases)
        self.critic2 = netcore.init_critic(rng_init, glorot_biases=cfg.glorot_biases)
        self.target_actor = netcore.copy_mlp(self.actor)
        self.target_critic1 = netcore.copy_mlp(self.critic1)
        self.target_critic2 = netcore.copy_mlp(self.critic2)
        self.adam_actor = netcore.AdamState(self.actor)
        self.adam_critic1 = netcore.AdamState(self.critic1)
        self.adam_critic2 = netcore.AdamState(self.critic2)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.ou = OuProcess(theta=cfg.ou_theta, sigma=cfg.ou_sigma)
        self.env_steps = 0
        self.updates = 0
        self.episodes = 0

    def update(self, hooks=None):
        """One critic regression step; policy/targets on the delay cadence."""
        cfg = self.config
        batch = self.buffer.sample(cfg.batch_size, self.rng_batch)
        a_next = target_actions(batch.s_next, self.target_actor,
                                cfg.target_noise_sigma, cfg.target_noise_clip,
                                self.rng_smooth)
        x_next = np.concatenate([batch.s_next, a_next], axis=1)
        q1t, _ = netcore.forward(self.target_critic1, x_next)
        q2t, _ = netcore.forward(self.target_critic2, x_next)
        y = compute_targets(batch.r, batch.d, q1t, q2t, cfg.gamma)
        if not np.all(np.isfinite(y)):
            raise RuntimeError("training diverged: non-finite Bellman target")

        g1, _ = critic_grads(self.critic1, batch.s, batch.a, y)
        g2, _ = critic_grads(self.critic2, batch.s, batch.a, y)
        netcore.adam_step(self.critic1, g1, self.adam_critic1, cfg.critic_lr)
        netcore.adam_step(self.critic2, g2, self.adam_critic2, cfg.critic_lr)
        j = self.updates
        self.updates += 1
        if hooks is not None:
            hooks.on_update(j, batch, y, q1t, q2t)

        if j % cfg.policy_delay == 0:
            ga = actor_grads(self.actor, self.critic1, batch.s)
            netcore.adam_step(self.actor, ga, self.adam_actor, cfg.actor_lr)
            netcore.polyak_update(self.target_actor, self.actor, cfg.rho)
            netcore.polyak_update(self.target_critic1, self.critic1, cfg.rho)
            netcore.polyak_update(self.target_critic2, self.critic2, cfg.rho)
            if hooks is not None:
                hooks.on_policy_update(j)

    def train(self, total_steps, hooks=None):
        """Run the interaction/update loop for total_steps environment steps."""
        cfg = self.config
        records = []
        obs = self.env.reset()
        self.ou.reset()
        ep_return = 0.0
        ep_steps = 0
        for _ in range(total_steps):
            self.env_steps += 1
            if self.env_steps <= cfg.warmup_random_steps:
                action = self.rng_explore.uniform(-1.0, 1.0, size=4)
            else:
                action = select_action(self.actor, obs, self.ou, self.rng_explore)
            res = self.env.step(action)
            self.buffer.store(Transition(obs, action, res.reward, res.obs,
                                         1.0 if res.terminated else 0.0))
            obs = res.obs
            ep_return += res.reward
            ep_steps += 1
            if self.buffer.size >= cfg.learning_starts:
                self.update(hooks)
            if hooks is not None:
                hooks.on_env_step(self.env_steps, self)
            if res.terminated or res.truncated:
                self.episodes += 1
                rec = EpisodeRecord(self.episodes, self.env_steps, ep_return,
                                    res.outcome, ep_steps)
                records.append(rec)
                if hooks is not None:
                    hooks.on_episode(rec)
                obs = self.env.reset()
                self.ou.reset()
                ep_return = 0.0
                ep_steps = 0
        return records


def run_episode(env, actor, max_steps=None):
    """One noise-free rollout; returns (return, steps, outcome)."""
    obs = env.reset()
    total = 0.0
    steps = 0
    while True:
        res = env.step(greedy_action(actor, obs))
        obs = res.obs
        total += res.reward
        steps += 1
        if res.terminated or res.truncated:
            return total, steps, res.outcome
        if max_steps is not None and steps >= max_steps:
            return total, steps, res.outcome


def evaluate(actor, env, episodes):
    """Noise-free evaluation; returns per-episode records and a summary."""
    from . import gateworld

    records = []
    total_steps = 0
    for i in range(episodes):
        ret, steps, outcome = run_episode(env, actor)
        total_steps += steps
        records.append(EpisodeRecord(i + 1, total_steps, ret, outcome, steps))
    rets = np.array([r.ret for r in records])
    successes = sum(1 for r in records if r.outcome is gateworld.Outcome.SUCCESS)
    summary = {
        "episodes": episodes,
        "success_rate": successes / episodes,
        "mean_return": float(rets.mean()),
        "std_return": float(rets.std()),
        "mean_steps": float(np.mean([r.steps for r in records])),
    }
    return records, summary
