"""CartPole and Acrobot with the standard episodic reset/step interface.

Dynamics follow the classic-control task definitions: CartPole integrates
the cart-pole equations with the explicit Euler update (positions advanced
with pre-step velocities) at tau = 0.02 s and +-10 N horizontal force;
Acrobot integrates the two-link equations with a single RK4 step at
dt = 0.2 s and torque in {-1, 0, +1} on the middle joint. Both truncate at
500 steps. All state is float64 and every trajectory is a deterministic
function of the reset seed and the action sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import vqc


@dataclass
class EnvStep:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool


class CartPole:
    """Balance a pole on a force-driven cart; +1 reward per step.

    Observation: (cart position, cart velocity, pole angle, pole angular
    velocity). Terminates when |x| > 2.4 m or |theta| > 12 degrees.
    """

    obs_dim = 4
    n_actions = 2
    max_steps = 500

    gravity = 9.8
    mass_cart = 1.0
    mass_pole = 0.1
    half_length = 0.5
    force_mag = 10.0
    tau = 0.02
    x_threshold = 2.4
    theta_threshold = 12 * 2 * math.pi / 360

    def __init__(self, seed: int | None = None):
        self._rng = np.random.default_rng(seed)
        self._state: tuple[float, float, float, float] | None = None
        self._steps = 0

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._state = tuple(self._rng.uniform(-0.05, 0.05, 4))
        self._steps = 0
        return np.array(self._state)

    def step(self, action: int) -> EnvStep:
        if action not in (0, 1):
            raise ValueError(f"invalid CartPole action {action}")
        x, x_dot, theta, theta_dot = self._state
        force = self.force_mag if action == 1 else -self.force_mag
        cos_t = math.cos(theta)
        sin_t = math.sin(theta)
        total_mass = self.mass_cart + self.mass_pole
        pml = self.mass_pole * self.half_length
        temp = (force + pml * theta_dot * theta_dot * sin_t) / total_mass
        theta_acc = (self.gravity * sin_t - cos_t * temp) / (
            self.half_length * (4.0 / 3.0 - self.mass_pole * cos_t * cos_t / total_mass)
        )
        x_acc = temp - pml * theta_acc * cos_t / total_mass
        x = x + self.tau * x_dot
        x_dot = x_dot + self.tau * x_acc
        theta = theta + self.tau * theta_dot
        theta_dot = theta_dot + self.tau * theta_acc
        self._state = (x, x_dot, theta, theta_dot)
        self._steps += 1
        terminated = abs(x) > self.x_threshold or abs(theta) > self.theta_threshold
        truncated = self._steps >= self.max_steps
        return EnvStep(np.array(self._state), 1.0, terminated, truncated)


class Acrobot:
    """Swing a two-link chain's free end above the bar; -1 reward per step
    until the goal height is reached (terminal step rewards 0).

    Observation: (cos t1, sin t1, cos t2, sin t2, t1_dot, t2_dot) with
    velocities clipped to +-4 pi and +-9 pi.
    """

    obs_dim = 6
    n_actions = 3
    max_steps = 500

    dt = 0.2
    link_length_1 = 1.0
    link_mass_1 = 1.0
    link_mass_2 = 1.0
    link_com_1 = 0.5
    link_com_2 = 0.5
    link_moi = 1.0
    gravity = 9.8
    max_vel_1 = 4 * math.pi
    max_vel_2 = 9 * math.pi

    def __init__(self, seed: int | None = None):
        self._rng = np.random.default_rng(seed)
        self._state: tuple[float, float, float, float] | None = None
        self._steps = 0

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._state = tuple(self._rng.uniform(-0.1, 0.1, 4))
        self._steps = 0
        return self._observation()

    def _observation(self) -> np.ndarray:
        t1, t2, d1, d2 = self._state
        return np.array([math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), d1, d2])

    def _dsdt(self, s, torque):
        m1, m2 = self.link_mass_1, self.link_mass_2
        l1 = self.link_length_1
        lc1, lc2 = self.link_com_1, self.link_com_2
        i1 = i2 = self.link_moi
        g = self.gravity
        t1, t2, dt1, dt2 = s
        d1 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(t2)) + i1 + i2
        d2 = m2 * (lc2**2 + l1 * lc2 * math.cos(t2)) + i2
        phi2 = m2 * lc2 * g * math.cos(t1 + t2 - math.pi / 2.0)
        phi1 = (
            -m2 * l1 * lc2 * dt2**2 * math.sin(t2)
            - 2 * m2 * l1 * lc2 * dt2 * dt1 * math.sin(t2)
            + (m1 * lc1 + m2 * l1) * g * math.cos(t1 - math.pi / 2)
            + phi2
        )
        ddt2 = (
            torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dt1**2 * math.sin(t2) - phi2
        ) / (m2 * lc2**2 + i2 - d2**2 / d1)
        ddt1 = -(d2 * ddt2 + phi1) / d1
        return (dt1, dt2, ddt1, ddt2)

    def step(self, action: int) -> EnvStep:
        if action not in (0, 1, 2):
            raise ValueError(f"invalid Acrobot action {action}")
        torque = float(action - 1)
        s = self._state
        dt = self.dt
        k1 = self._dsdt(s, torque)
        k2 = self._dsdt(tuple(s[i] + 0.5 * dt * k1[i] for i in range(4)), torque)
        k3 = self._dsdt(tuple(s[i] + 0.5 * dt * k2[i] for i in range(4)), torque)
        k4 = self._dsdt(tuple(s[i] + dt * k3[i] for i in range(4)), torque)
        ns = [
            s[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(4)
        ]
        ns[0] = _wrap(ns[0], -math.pi, math.pi)
        ns[1] = _wrap(ns[1], -math.pi, math.pi)
        ns[2] = min(max(ns[2], -self.max_vel_1), self.max_vel_1)
        ns[3] = min(max(ns[3], -self.max_vel_2), self.max_vel_2)
        self._state = tuple(ns)
        self._steps += 1
        terminated = -math.cos(ns[0]) - math.cos(ns[1] + ns[0]) > 1.0
        truncated = self._steps >= self.max_steps
        reward = 0.0 if terminated else -1.0
        return EnvStep(self._observation(), reward, terminated, truncated)


def _wrap(x: float, lo: float, hi: float) -> float:
    diff = hi - lo
    while x > hi:
        x -= diff
    while x < lo:
        x += diff
    return x


ENV_NAMES = ("cartpole", "acrobot")


def make_env(name: str, seed: int | None = None) -> CartPole | Acrobot:
    if name == "cartpole":
        return CartPole(seed)
    if name == "acrobot":
        return Acrobot(seed)
    raise ValueError(f"unknown environment {name!r}; expected one of {ENV_NAMES}")


def encoding_spec(env) -> vqc.EncodingSpec:
    """Observation-to-angle maps for circuit inputs.

    CartPole: position and angle are scaled over the full observation-space
    range (x in +-4.8, theta in +-24 degrees), velocities are unbounded.
    Acrobot: all six dims are hard-bounded (trig values and clipped rates).
    """
    name = env if isinstance(env, str) else type(env).__name__.lower()
    if name == "cartpole":
        return vqc.EncodingSpec(
            [
                vqc.bounded(2 * CartPole.x_threshold),
                vqc.unbounded(),
                vqc.bounded(2 * CartPole.theta_threshold),
                vqc.unbounded(),
            ]
        )
    if name == "acrobot":
        return vqc.EncodingSpec(
            [
                vqc.bounded(1.0),
                vqc.bounded(1.0),
                vqc.bounded(1.0),
                vqc.bounded(1.0),
                vqc.bounded(Acrobot.max_vel_1),
                vqc.bounded(Acrobot.max_vel_2),
            ]
        )
    raise ValueError(f"unknown environment {name!r}")
