"""DQN-style option-critic training loop.

Every step runs the online actor losses (policy and termination) on the
fresh transition; every n_critic steps a replay batch adds the half-MSE
critic loss; the summed scalar takes one Adam step over all parameters
jointly; the target network syncs every n_target steps.

Gradient-flow rules: TD targets are constants (computed from the main net's
termination probabilities and the target net's option values, never part of
the loss graph); the policy advantage and the termination advantage are
likewise detached, so policy gradients flow only through log pi and
termination gradients only through beta. Episode truncation at the step cap
bootstraps normally; only true termination zeroes the bootstrap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import agent as agent_mod
from . import diffnet
from .agent import OptionCriticNet
from .diffnet import Tensor


@dataclass
class Transition:
    """One replay record. terminated refers to environment termination,
    never truncation; the action is kept for the online policy loss and
    diagnostics."""

    s: np.ndarray
    omega: int
    a: int
    r: float
    s_next: np.ndarray
    terminated: bool


class ReplayBuffer:
    """Fixed-capacity FIFO ring; eviction is strictly oldest-first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._data: list[Transition] = []
        self._pos = 0

    def push(self, tr: Transition) -> None:
        if len(self._data) < self.capacity:
            self._data.append(tr)
        else:
            self._data[self._pos] = tr
        self._pos = (self._pos + 1) % self.capacity

    def sample(self, rng: np.random.Generator, k: int) -> list[Transition]:
        if k > len(self._data):
            raise ValueError("not enough transitions to sample")
        idx = rng.choice(len(self._data), size=k, replace=False)
        return [self._data[i] for i in idx]

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, tr: Transition) -> bool:
        return any(t is tr for t in self._data)


@dataclass
class TrainConfig:
    gamma: float = 0.99
    lr: float = 0.0005
    n_critic: int = 4
    n_target: int = 200
    eps_start: float = 1.0
    eps_min: float = 0.05
    eps_decay_rate: float | None = None  # None: reach eps_min at 50% of total_steps
    term_reg: float = 0.01
    entropy_reg: float = 0.01
    batch_size: int = 32
    buffer_capacity: int = 10_000
    total_steps: int = 100_000
    n_options: int = 2

    def __post_init__(self):
        if self.eps_min > self.eps_start:
            raise ValueError("eps_min must not exceed eps_start")
        for name in ("gamma", "lr", "eps_start", "eps_min", "term_reg", "entropy_reg"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def resolved_eps_decay(self) -> float:
        if self.eps_decay_rate is not None:
            return self.eps_decay_rate
        if self.eps_min == self.eps_start:
            return 1.0
        return math.exp(math.log(self.eps_min / self.eps_start) / (0.5 * self.total_steps))


def epsilon_at(t: int, cfg: TrainConfig) -> float:
    """Exponential decay from eps_start, floored at eps_min."""
    return max(cfg.eps_min, cfg.eps_start * cfg.resolved_eps_decay() ** t)


def td_target(
    r: float,
    s_next,
    omega: int,
    terminated: bool,
    net: OptionCriticNet,
    target_net: OptionCriticNet,
    gamma: float,
) -> float:
    """One-step off-policy target: r + gamma [(1-beta) Q'(s', w) + beta max Q'].

    beta comes from the main network, option values from the target network.
    The result is a plain float, so nothing downstream can backprop into it.
    """
    if terminated:
        return float(r)
    beta = float(net.terminations(net.features(s_next)).values[omega])
    q_t = target_net.q_values(target_net.features(s_next)).values
    return float(r + gamma * ((1.0 - beta) * q_t[omega] + beta * q_t.max()))


def policy_loss(
    tr: Transition,
    y: float,
    net: OptionCriticNet,
    entropy_reg: float = 0.01,
    probs: Tensor | None = None,
    q_values: np.ndarray | None = None,
) -> Tensor:
    """-log pi_w(a|s) * (y - Q(s, w)) - entropy_reg * H(pi_w(.|s)).

    The advantage is detached; gradient flows through log pi (and the
    entropy bonus) only. probs/q_values, when given, must be the net's own
    outputs at tr.s under the current parameters (train_step shares one
    feature forward across both actor losses).
    """
    if probs is None or q_values is None:
        h = net.features(tr.s)
        probs = net.policy_probs(h, tr.omega) if probs is None else probs
        q_values = net.q_values(h).values if q_values is None else q_values
    advantage = y - float(q_values[tr.omega])
    log_p = diffnet.log(diffnet.select(probs, tr.a))
    ent = diffnet.entropy(probs)
    return log_p * (-advantage) - ent * entropy_reg


def termination_loss(
    tr: Transition,
    net: OptionCriticNet,
    term_reg: float = 0.01,
    h: Tensor | None = None,
    q_values: np.ndarray | None = None,
) -> Tensor:
    """beta_w(s) * (Q(s, w) - max_w' Q(s, w') + term_reg), advantage detached.

    The regularizer pressures even the best option toward termination,
    discouraging a single option from absorbing the whole episode.
    """
    if h is None:
        h = net.features(tr.s)
    betas = net.terminations(h)
    q = net.q_values(h).values if q_values is None else q_values
    advantage = float(q[tr.omega] - q.max())
    return diffnet.select(betas, tr.omega) * (advantage + term_reg)


def critic_loss(
    batch: Sequence[Transition],
    net: OptionCriticNet,
    target_net: OptionCriticNet,
    gamma: float,
) -> Tensor:
    """Half mean squared error of Q(s_j, w_j) against per-sample TD targets."""
    s = np.stack([tr.s for tr in batch])
    s_next = np.stack([tr.s_next for tr in batch])
    omega = np.array([tr.omega for tr in batch])
    r = np.array([tr.r for tr in batch])
    live = np.array([0.0 if tr.terminated else 1.0 for tr in batch])
    rows = np.arange(len(batch))

    beta = net.terminations(net.features(s_next)).values[rows, omega]
    q_t = target_net.q_values(target_net.features(s_next)).values
    bootstrap = (1.0 - beta) * q_t[rows, omega] + beta * q_t.max(axis=1)
    y = r + gamma * live * bootstrap

    q = diffnet.select(net.q_values(net.features(s)), omega)
    err = q - y
    return diffnet.tsum(err * err) * (0.5 / len(batch))


def _reselect_option(
    net: OptionCriticNet, s, epsilon: float, rng: np.random.Generator
) -> int:
    q = net.q_values(net.features(s)).values
    return agent_mod.choose_option(q, epsilon, rng)


def option_terminates(beta: float, rng: np.random.Generator) -> bool:
    return rng.random() < beta


@dataclass
class StepMetrics:
    step: int
    episode_return: float | None
    entropy: float
    actor_loss: float
    critic_loss: float | None
    epsilon: float
    option: int | None  # None for the learning-free baseline


@dataclass
class TrainContext:
    env: object
    net: OptionCriticNet
    target_net: OptionCriticNet
    buffer: ReplayBuffer
    opt: diffnet.Adam
    cfg: TrainConfig
    streams: dict[str, np.random.Generator]
    t: int = 0
    s: np.ndarray | None = None
    omega: int = 0
    episode_return: float = 0.0
    episode_steps: int = 0


def init_context(
    env, net: OptionCriticNet, target_net: OptionCriticNet, cfg: TrainConfig, streams
) -> TrainContext:
    opt = diffnet.Adam(net.parameters(), lr=cfg.lr)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    ctx = TrainContext(env, net, target_net, buffer, opt, cfg, streams)
    ctx.s = env.reset(seed=int(streams["env"].integers(2**32)))
    ctx.omega = _reselect_option(net, ctx.s, epsilon_at(0, cfg), streams["option"])
    return ctx


def train_step(ctx: TrainContext) -> StepMetrics:
    """One iteration of the main loop; returns the step's metrics."""
    ctx.t += 1
    t = ctx.t
    cfg = ctx.cfg
    net, target = ctx.net, ctx.target_net
    eps = epsilon_at(t - 1, cfg)
    option_used = ctx.omega

    h = net.features(ctx.s)
    probs_t = net.policy_probs(h, ctx.omega)
    probs = probs_t.values
    q_vals = net.q_values(h).values
    a = agent_mod.sample_categorical(probs, ctx.streams["action"])
    step = ctx.env.step(a)
    tr = Transition(ctx.s, ctx.omega, a, step.reward, step.observation, step.terminated)
    ctx.buffer.push(tr)

    y = td_target(step.reward, step.observation, ctx.omega, step.terminated, net, target, cfg.gamma)
    l_policy = policy_loss(tr, y, net, cfg.entropy_reg, probs=probs_t, q_values=q_vals)
    l_term = termination_loss(tr, net, cfg.term_reg, h=h, q_values=q_vals)
    actor_loss = float(l_policy.values) + float(l_term.values)
    loss = l_policy + l_term

    critic_value = None
    if t % cfg.n_critic == 0 and len(ctx.buffer) >= cfg.batch_size:
        batch = ctx.buffer.sample(ctx.streams["buffer"], cfg.batch_size)
        l_critic = critic_loss(batch, net, target, cfg.gamma)
        critic_value = float(l_critic.values)
        loss = loss + l_critic

    ctx.opt.zero_grad()
    diffnet.backward(loss)
    ctx.opt.step()

    ctx.episode_return += step.reward
    ctx.episode_steps += 1
    episode_return = None
    if step.terminated or step.truncated:
        episode_return = ctx.episode_return
        ctx.episode_return = 0.0
        ctx.episode_steps = 0
        ctx.s = ctx.env.reset()
        ctx.omega = _reselect_option(net, ctx.s, eps, ctx.streams["option"])
    else:
        beta = float(net.terminations(net.features(step.observation)).values[ctx.omega])
        if option_terminates(beta, ctx.streams["option"]):
            ctx.omega = _reselect_option(net, step.observation, eps, ctx.streams["option"])
        ctx.s = step.observation

    if t % cfg.n_target == 0:
        agent_mod.sync_target(target, net)

    safe = np.where(probs > 0, probs, 1.0)
    ent = float(-(safe * np.log(safe)).sum())
    return StepMetrics(t, episode_return, ent, actor_loss, critic_value, eps, option_used)


def run_training(
    env,
    net: OptionCriticNet,
    target_net: OptionCriticNet,
    cfg: TrainConfig,
    streams: dict[str, np.random.Generator],
    checkpoint_cb: Callable[[int, OptionCriticNet], None] | None = None,
    checkpoint_every: int | None = None,
) -> list[StepMetrics]:
    ctx = init_context(env, net, target_net, cfg, streams)
    metrics = []
    for _ in range(cfg.total_steps):
        metrics.append(train_step(ctx))
        if (
            checkpoint_cb is not None
            and checkpoint_every is not None
            and ctx.t % checkpoint_every == 0
        ):
            checkpoint_cb(ctx.t, net)
    final_already_saved = checkpoint_every is not None and cfg.total_steps % checkpoint_every == 0
    if checkpoint_cb is not None and not final_already_saved:
        checkpoint_cb(ctx.t, net)
    return metrics
