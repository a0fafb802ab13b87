"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The learning criteria
(6-9) train real agents at desk scale and together take roughly half an
hour on one core; everything is deterministic given the fixed seed lists.
"""
import math

import numpy as np
import pytest

from qoc import agent, diffnet, envs, expkit, qsim, trainer, vqc
from qoc.expkit import RunConfig
from qoc.trainer import TrainConfig

from test_envs import acro_step_oracle, cart_step_oracle
from test_qsim import random_circuit

SEEDS5 = (0, 1, 2, 3, 4)
SEEDS3 = (0, 1, 2)


def report(num: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def run_config(env, variant, seeds, steps, **kw):
    return RunConfig(
        env=env,
        variant=variant,
        train=TrainConfig(total_steps=steps),
        seeds=seeds,
        out_dir=None,
        **kw,
    )


@pytest.fixture(scope="module")
def classical_cp_60k():
    return expkit.run_experiment(run_config("cartpole", "classical", SEEDS5, 60_000))


@pytest.fixture(scope="module")
def hybridf_cp_60k():
    return expkit.run_experiment(run_config("cartpole", "hybrid_f", SEEDS5, 60_000))


@pytest.fixture(scope="module")
def classical_acro_60k():
    return expkit.run_experiment(run_config("acrobot", "classical", SEEDS5, 60_000))


@pytest.fixture(scope="module")
def hybridf_acro_60k():
    return expkit.run_experiment(run_config("acrobot", "hybrid_f", SEEDS5, 60_000))


def test_c01_parameter_counts():
    """Component budgets, totals, and scaled-baseline totals are exact."""
    expected = {
        ("cartpole", "classical"): (76, 10, 10, 20),
        ("cartpole", "hybrid_fotp"): (48, 12, 12, 24),
        ("acrobot", "classical"): (110, 29, 29, 66),
        ("acrobot", "hybrid_fotp"): (90, 36, 36, 72),
    }
    rng = np.random.default_rng(0)
    for (env, variant), want in expected.items():
        counts = agent.build(env, variant, 2, rng).component_param_counts()
        got = (
            counts["feature_extractor"],
            counts["option_value"],
            counts["termination"],
            counts["policies"],
        )
        assert got == want, (env, variant, got)
    assert agent.build("cartpole", "hybrid_f", 2, rng).total_params() == 88
    assert agent.build("acrobot", "hybrid_f", 2, rng).total_params() == 214
    scaled = {
        ("cartpole", 16): 188, ("cartpole", 24): 260, ("cartpole", 32): 332,
        ("acrobot", 16): 338, ("acrobot", 24): 442, ("acrobot", 32): 546,
    }
    for (env, width), total in scaled.items():
        assert agent.build(env, "classical", 2, rng, fe_width=width).total_params() == total
    report(1, True, "all 16 component cells, quantum-extractor totals 88/214, "
                    "scaled classical totals exact")


def test_c02_gradient_correctness():
    """Adjoint vs finite differences (<1e-4), vs parameter shift (<1e-10),
    composed-model finite differences (<1e-4). Relative error is scale-
    floored: max|a-b| / max(1, max|b|)."""
    ok, lines = expkit.gradcheck_report(n_circuits=100, n_composed=20, seed=0)
    report(2, ok, "; ".join(line.split("] ", 1)[1] for line in lines))


def test_c03_simulator_invariants():
    rng = np.random.default_rng(17)
    worst_norm = 0.0
    worst_exp = 0.0
    worst_round = 0.0
    for _ in range(30):
        n = int(rng.integers(1, 7))
        circuit = random_circuit(rng, n, 200, with_params=False)
        state = qsim.run_circuit(n, circuit)
        worst_norm = max(worst_norm, abs(np.linalg.norm(state.amplitudes) ** 2 - 1.0))
        for q in range(n):
            e = qsim.expectation_z(state, q)
            worst_exp = max(worst_exp, abs(e) - 1.0)
        for gate in random_circuit(rng, n, 20, with_params=False):
            if gate.kind is qsim.GateKind.CNOT:
                inverse = gate
            else:
                inverse = qsim.GateOp(gate.kind, gate.target, angle=-gate.angle)
            back = qsim.apply_gate(qsim.apply_gate(state, gate), inverse)
            worst_round = max(worst_round, np.abs(back.amplitudes - state.amplitudes).max())
    ok = worst_norm < 1e-12 and worst_exp <= 0.0 and worst_round < 1e-12
    report(3, ok, f"norm drift {worst_norm:.2e} < 1e-12, expectations within [-1, 1], "
                  f"inverse round-trip {worst_round:.2e} < 1e-12")


def test_c04_environment_fidelity():
    env = envs.CartPole()
    env.reset(seed=0)
    env._state = (0.0, 0.0, 0.0, 0.0)
    obs = env.step(1).observation
    oracle = np.array(cart_step_oracle((0.0, 0.0, 0.0, 0.0), 1))
    one_step_err = np.abs(obs - oracle).max()
    assert one_step_err < 1e-6
    assert np.abs(obs - np.array([0.0, 0.19512, 0.0, -0.29268])).max() < 1e-5

    worst = 0.0
    rng = np.random.default_rng(0)
    env = envs.CartPole()
    env.reset(seed=42)
    mirror = env._state
    for _ in range(1000):
        a = int(rng.integers(2))
        step = env.step(a)
        mirror = cart_step_oracle(mirror, a)
        worst = max(worst, np.abs(np.array(env._state) - np.array(mirror)).max())
        if step.terminated or step.truncated:
            env.reset()
            mirror = env._state
    acro = envs.Acrobot()
    acro.reset(seed=43)
    mirror = acro._state
    for _ in range(1000):
        a = int(rng.integers(3))
        step = acro.step(a)
        mirror = acro_step_oracle(mirror, a)
        worst = max(worst, np.abs(np.array(acro._state) - np.array(mirror)).max())
        if step.terminated or step.truncated:
            acro.reset()
            mirror = acro._state
    ok = worst < 1e-8
    report(4, ok, f"one-step error {one_step_err:.2e} < 1e-6; "
                  f"1000-step trajectory deviation {worst:.2e} < 1e-8 on both tasks")


def test_c05_random_baseline_statistics():
    rng = np.random.default_rng(123)
    env = envs.CartPole(seed=1)
    cp = []
    for _ in range(500):
        env.reset()
        total, done = 0.0, False
        while not done:
            s = env.step(int(rng.integers(2)))
            total += s.reward
            done = s.terminated or s.truncated
        cp.append(total)
    cp_mean = float(np.mean(cp))

    env = envs.Acrobot(seed=1)
    ac = []
    for _ in range(500):
        env.reset()
        total, done = 0.0, False
        while not done:
            s = env.step(int(rng.integers(3)))
            total += s.reward
            done = s.terminated or s.truncated
        ac.append(total)
    ac_mean = float(np.mean(ac))
    ok = 18.0 <= cp_mean <= 26.0 and -500.0 <= ac_mean <= -490.0
    report(5, ok, f"uniform-agent means over 500 episodes: cartpole {cp_mean:.2f} "
                  f"in [18, 26], acrobot {ac_mean:.2f} in [-500, -490]")


def test_c06_classical_baseline_learns(classical_cp_60k):
    ends = classical_cp_60k.end_values()
    mean_end = float(np.mean(ends))
    ok = mean_end >= 60.0
    report(6, ok, f"classical cartpole end-of-training smoothed returns "
                  f"{np.round(ends, 1).tolist()}, seed-mean {mean_end:.1f} >= 60")


def test_c07_quantum_extractor_advantage(
    classical_cp_60k, hybridf_cp_60k, classical_acro_60k, hybridf_acro_60k
):
    cp_cls = classical_cp_60k.end_values()
    cp_hyb = hybridf_cp_60k.end_values()
    cp_wins = sum(h > c for h, c in zip(cp_hyb, cp_cls))
    ac_cls = classical_acro_60k.end_values()
    ac_hyb = hybridf_acro_60k.end_values()
    ac_wins = sum(h > c for h, c in zip(ac_hyb, ac_cls))
    ok = cp_wins >= 4 and ac_wins >= 4
    report(
        7, ok,
        f"paired-seed wins for the quantum feature extractor: cartpole {cp_wins}/5 "
        f"(hybrid {np.round(cp_hyb, 1).tolist()} vs classical {np.round(cp_cls, 1).tolist()}), "
        f"acrobot {ac_wins}/5 (hybrid {np.round(ac_hyb, 1).tolist()} vs "
        f"classical {np.round(ac_cls, 1).tolist()}); need >= 4/5 on both",
    )


def test_c08_option_value_bottleneck():
    hyb = expkit.run_experiment(run_config("cartpole", "hybrid_o", SEEDS3, 30_000))
    cls = expkit.run_experiment(run_config("cartpole", "classical", SEEDS3, 30_000))
    tail_from = 27_000

    def tail_entropy(result):
        vals = [
            m.entropy
            for sr in result.seed_results
            for m in sr.metrics
            if m.step > tail_from
        ]
        return float(np.mean(vals))

    def tail_critic(result):
        vals = [
            m.critic_loss
            for sr in result.seed_results
            for m in sr.metrics
            if m.step > tail_from and m.critic_loss is not None
        ]
        return float(np.mean(vals))

    def peak_critic(result):
        peaks = [
            max(m.critic_loss for m in sr.metrics if m.critic_loss is not None)
            for sr in result.seed_results
        ]
        return float(np.mean(peaks))

    ent = tail_entropy(hyb)
    ent_floor = 0.95 * math.log(2)
    hyb_critic = tail_critic(hyb)
    cls_peak = peak_critic(cls)
    end_mean = float(np.mean(hyb.end_values()))
    ok = ent >= ent_floor and hyb_critic <= 0.1 * cls_peak and 15.0 <= end_mean <= 30.0
    report(
        8, ok,
        f"quantum option-value head on cartpole: final-10% policy entropy {ent:.4f} "
        f">= {ent_floor:.4f}, final-10% critic loss {hyb_critic:.4f} <= 10% of "
        f"classical peak {cls_peak:.2f}, end smoothed return {end_mean:.1f} in [15, 30]",
    )


def test_c09_ablation_directions(hybridf_cp_60k):
    base = hybridf_cp_60k.end_values()
    no_cnot = expkit.run_experiment(
        run_config("cartpole", "hybrid_f", SEEDS5, 60_000, entangling=False)
    ).end_values()
    lam_fixed = expkit.run_experiment(
        run_config("cartpole", "hybrid_f", SEEDS5, 60_000, scaling=False)
    ).end_values()
    cnot_wins = sum(b > a for b, a in zip(base, no_cnot))
    lam_wins = sum(b > a for b, a in zip(base, lam_fixed))
    ok = cnot_wins >= 4 and lam_wins >= 4
    report(
        9, ok,
        f"ablations below the full circuit extractor in paired seeds: "
        f"no-entanglement {cnot_wins}/5 (ablated ends {np.round(no_cnot, 1).tolist()}), "
        f"fixed scalings {lam_wins}/5 (ablated ends {np.round(lam_fixed, 1).tolist()}), "
        f"base ends {np.round(base, 1).tolist()}; need >= 4/5 each",
    )


def test_c10_determinism(tmp_path):
    files = {}
    for variant, steps in (("classical", 1200), ("hybrid_f", 400)):
        for tag in ("a", "b"):
            cfg = RunConfig(
                env="cartpole",
                variant=variant,
                train=TrainConfig(total_steps=steps),
                seeds=(0,),
                out_dir=tmp_path / tag,
                smooth_window=400,
            )
            expkit.run_experiment(cfg)
            path = tmp_path / tag / cfg.run_name() / "seed_000" / "metrics.csv"
            files[(variant, tag)] = path.read_bytes()
    ok = all(files[(v, "a")] == files[(v, "b")] for v in ("classical", "hybrid_f"))
    report(10, ok, "repeated train invocations produce byte-identical metrics CSVs "
                   "(classical and quantum-extractor variants)")
