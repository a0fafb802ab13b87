"""Environment tests against an independently written dynamics oracle.

The oracle derives accelerations from the mass-matrix form of each system
(solved with np.linalg.solve rather than the closed-form expressions the
implementation uses) and integrates with its own Euler / RK4 code, so a
transcription slip on either side shows up as a mismatch.
"""
import math

import numpy as np
import pytest

from qoc import envs, vqc


# --- oracle -----------------------------------------------------------------


def cart_accels(state, force):
    _, _, th, thd = state
    mc, mp, half_len, g = 1.0, 0.1, 0.5, 9.8
    mass = np.array(
        [
            [mc + mp, mp * half_len * math.cos(th)],
            [mp * half_len * math.cos(th), (4.0 / 3.0) * mp * half_len**2],
        ]
    )
    rhs = np.array(
        [force + mp * half_len * thd * thd * math.sin(th), mp * g * half_len * math.sin(th)]
    )
    return np.linalg.solve(mass, rhs)  # (x_acc, theta_acc)


def cart_step_oracle(state, action):
    tau = 0.02
    force = 10.0 if action == 1 else -10.0
    x_acc, th_acc = cart_accels(state, force)
    x, xd, th, thd = state
    return (x + tau * xd, xd + tau * x_acc, th + tau * thd, thd + tau * th_acc)


def acro_dsdt(s, torque):
    t1, t2, v1, v2 = s
    m1 = m2 = 1.0
    l1 = 1.0
    lc1 = lc2 = 0.5
    moi1 = moi2 = 1.0
    g = 9.8
    d11 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(t2)) + moi1 + moi2
    d12 = m2 * (lc2**2 + l1 * lc2 * math.cos(t2)) + moi2
    d22 = m2 * lc2**2 + moi2
    phi2 = m2 * lc2 * g * math.cos(t1 + t2 - math.pi / 2.0)
    phi1 = (
        -m2 * l1 * lc2 * v2**2 * math.sin(t2)
        - 2 * m2 * l1 * lc2 * v2 * v1 * math.sin(t2)
        + (m1 * lc1 + m2 * l1) * g * math.cos(t1 - math.pi / 2)
        + phi2
    )
    mass = np.array([[d11, d12], [d12, d22]])
    rhs = np.array([-phi1, torque - phi2 - m2 * l1 * lc2 * v1**2 * math.sin(t2)])
    acc = np.linalg.solve(mass, rhs)
    return np.array([v1, v2, acc[0], acc[1]])


def acro_step_oracle(s, action):
    dt = 0.2
    torque = float(action - 1)
    y = np.array(s)
    k1 = acro_dsdt(y, torque)
    k2 = acro_dsdt(y + dt / 2 * k1, torque)
    k3 = acro_dsdt(y + dt / 2 * k2, torque)
    k4 = acro_dsdt(y + dt * k3, torque)
    ns = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    for i in (0, 1):
        while ns[i] > math.pi:
            ns[i] -= 2 * math.pi
        while ns[i] < -math.pi:
            ns[i] += 2 * math.pi
    ns[2] = min(max(ns[2], -4 * math.pi), 4 * math.pi)
    ns[3] = min(max(ns[3], -9 * math.pi), 9 * math.pi)
    return tuple(ns)


# --- reset ------------------------------------------------------------------


class TestReset:
    @pytest.mark.parametrize("name", ["cartpole", "acrobot"])
    def test_same_seed_same_observation(self, name):
        a = envs.make_env(name).reset(seed=7)
        b = envs.make_env(name).reset(seed=7)
        assert np.array_equal(a, b)

    def test_cartpole_init_range(self):
        env = envs.CartPole()
        for seed in range(50):
            obs = env.reset(seed=seed)
            assert np.all(np.abs(obs) <= 0.05)

    def test_acrobot_init_near_hanging(self):
        env = envs.Acrobot()
        for seed in range(50):
            obs = env.reset(seed=seed)
            assert obs[0] > 0.99 and obs[2] > 0.99  # cos components near 1
            assert abs(obs[1]) < 0.11 and abs(obs[3]) < 0.11
            assert np.all(np.abs(obs[4:]) <= 0.1)


# --- step -------------------------------------------------------------------


class TestCartPoleStep:
    def test_one_step_from_zero_state(self):
        env = envs.CartPole()
        env.reset(seed=0)
        env._state = (0.0, 0.0, 0.0, 0.0)
        obs = env.step(1).observation
        oracle = cart_step_oracle((0.0, 0.0, 0.0, 0.0), 1)
        assert np.abs(obs - np.array(oracle)).max() < 1e-6
        assert np.abs(obs - np.array([0.0, 0.19512, 0.0, -0.29268])).max() < 1e-5

    def test_trajectory_matches_oracle(self):
        rng = np.random.default_rng(0)
        env = envs.CartPole()
        env.reset(seed=42)
        mirror = env._state
        for _ in range(1000):
            a = int(rng.integers(2))
            step = env.step(a)
            mirror = cart_step_oracle(mirror, a)
            assert np.abs(np.array(env._state) - np.array(mirror)).max() < 1e-8
            if step.terminated or step.truncated:
                env.reset()
                mirror = env._state

    def test_termination_thresholds(self):
        env = envs.CartPole()
        env.reset(seed=0)
        env._state = (0.0, 0.0, 0.21, 0.0)  # beyond 12 degrees
        assert env.step(0).terminated
        env.reset(seed=0)
        env._state = (2.5, 0.0, 0.0, 0.0)
        assert env.step(0).terminated

    def test_reward_and_truncation(self):
        env = envs.CartPole()
        env.reset(seed=3)
        env._state = (0.0, 0.0, 0.0, 0.0)
        total = 0.0
        for i in range(envs.CartPole.max_steps):
            env._state = (0.0, 0.0, 0.0, 0.0)  # pinned: force full episode
            step = env.step(i % 2)
            total += step.reward
        assert step.truncated
        assert total == 500.0

    def test_invalid_action(self):
        env = envs.CartPole()
        env.reset(seed=0)
        with pytest.raises(ValueError):
            env.step(2)


class TestAcrobotStep:
    def test_hanging_not_terminal(self):
        env = envs.Acrobot()
        env.reset(seed=0)
        env._state = (0.0, 0.0, 0.0, 0.0)
        step = env.step(1)
        assert not step.terminated
        assert step.reward == -1.0

    def test_trajectory_matches_oracle(self):
        rng = np.random.default_rng(1)
        env = envs.Acrobot()
        env.reset(seed=43)
        mirror = env._state
        for _ in range(1000):
            a = int(rng.integers(3))
            step = env.step(a)
            mirror = acro_step_oracle(mirror, a)
            assert np.abs(np.array(env._state) - np.array(mirror)).max() < 1e-8
            if step.terminated or step.truncated:
                env.reset()
                mirror = env._state

    def test_velocity_clipping(self):
        rng = np.random.default_rng(2)
        env = envs.Acrobot()
        env.reset(seed=11)
        for _ in range(600):
            step = env.step(int(rng.integers(3)))
            assert abs(env._state[2]) <= 4 * math.pi
            assert abs(env._state[3]) <= 9 * math.pi
            if step.terminated or step.truncated:
                env.reset()

    def test_observation_layout(self):
        env = envs.Acrobot()
        env.reset(seed=0)
        env._state = (0.3, -0.4, 1.0, -2.0)
        obs = env._observation()
        assert obs == pytest.approx(
            [math.cos(0.3), math.sin(0.3), math.cos(-0.4), math.sin(-0.4), 1.0, -2.0]
        )

    def test_terminal_reward_zero(self):
        env = envs.Acrobot()
        env.reset(seed=0)
        # start just below the goal with upward momentum
        env._state = (math.pi - 0.05, 0.0, 2.0, 0.0)
        step = env.step(1)
        assert step.terminated
        assert step.reward == 0.0

    def test_invalid_action(self):
        env = envs.Acrobot()
        env.reset(seed=0)
        with pytest.raises(ValueError):
            env.step(3)


class TestEpisodeStatistics:
    def test_cartpole_returns_in_bounds(self):
        rng = np.random.default_rng(3)
        env = envs.CartPole(seed=0)
        for _ in range(30):
            env.reset()
            total, done = 0.0, False
            while not done:
                s = env.step(int(rng.integers(2)))
                total += s.reward
                done = s.terminated or s.truncated
            assert 1.0 <= total <= 500.0

    def test_acrobot_returns_in_bounds(self):
        rng = np.random.default_rng(4)
        env = envs.Acrobot(seed=0)
        for _ in range(5):
            env.reset()
            total, done = 0.0, False
            while not done:
                s = env.step(int(rng.integers(3)))
                total += s.reward
                done = s.terminated or s.truncated
            assert -500.0 <= total < 0.0

    def test_deterministic_trajectories(self):
        acts = np.random.default_rng(5).integers(3, size=200)
        obs = []
        for _ in range(2):
            env = envs.Acrobot()
            env.reset(seed=99)
            obs.append([env.step(int(a)).observation for a in acts])
        assert all(np.array_equal(a, b) for a, b in zip(obs[0], obs[1]))


class TestEncodingSpec:
    def test_cartpole_spec(self):
        spec = envs.encoding_spec("cartpole")
        kinds = [e.kind for e in spec]
        assert kinds == [vqc.BOUNDED, vqc.UNBOUNDED, vqc.BOUNDED, vqc.UNBOUNDED]
        assert spec.entries[0].bound == pytest.approx(4.8)
        assert spec.entries[2].bound == pytest.approx(2 * envs.CartPole.theta_threshold)
        # full-range position maps to pi, zero velocity maps to 0
        angles = vqc.normalize_input([4.8, 0.0, 0.0, 0.0], spec)
        assert angles[0] == pytest.approx(math.pi)
        assert angles[1] == 0.0

    def test_acrobot_spec(self):
        spec = envs.encoding_spec(envs.Acrobot())
        assert all(e.kind == vqc.BOUNDED for e in spec)
        assert spec.entries[4].bound == pytest.approx(4 * math.pi)
        assert spec.entries[5].bound == pytest.approx(9 * math.pi)
        angles = vqc.normalize_input([-1.0, 0, 0, 0, 0, 0], spec)
        assert angles[0] == pytest.approx(-math.pi)

    def test_unknown_env(self):
        with pytest.raises(ValueError):
            envs.make_env("mountaincar")
        with pytest.raises(ValueError):
            envs.encoding_spec("mountaincar")
