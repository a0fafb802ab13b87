"""Benchmark the numba statevector kernels against the numpy fallback.

Times the fused circuit forward pass and adjoint sweep at the two head
sizes the agents actually use (4 qubits x 4 layers, 6 qubits x 5 layers),
plus a small end-to-end training slice on each backend.

Run:  python benchmarks/bench_kernels.py
"""
from __future__ import annotations

import timeit

import numpy as np

from qoc import _kernels_numpy


def bench_backend(kernels, n, layers, reps):
    rng = np.random.default_rng(0)
    lam = rng.uniform(-2, 2, (layers, n))
    th_y = rng.uniform(-np.pi, np.pi, (layers, n))
    th_z = rng.uniform(-np.pi, np.pi, (layers, n))
    x = rng.uniform(-np.pi, np.pi, n)
    w = rng.uniform(-1, 1, n)
    _, psi = kernels.vqc_forward(n, lam, th_y, th_z, x, True, n)
    fwd = timeit.timeit(
        lambda: kernels.vqc_forward(n, lam, th_y, th_z, x, True, n), number=reps
    ) / reps
    adj = timeit.timeit(
        lambda: kernels.vqc_adjoint(n, lam, th_y, th_z, x, True, psi, w), number=reps
    ) / reps
    return fwd, adj


def bench_training_slice(steps=400):
    from qoc import agent, envs, expkit, trainer

    streams = expkit.rng_streams(0)
    net = agent.build("cartpole", "hybrid_f", 2, streams["init"])
    target = agent.make_target(net)
    env = envs.make_env("cartpole")
    cfg = trainer.TrainConfig(total_steps=steps)
    ctx = trainer.init_context(env, net, target, cfg, streams)
    t0 = timeit.default_timer()
    for _ in range(steps):
        trainer.train_step(ctx)
    return (timeit.default_timer() - t0) / steps


def main():
    try:
        from qoc import _kernels_numba
    except ImportError:
        _kernels_numba = None
        print("numba unavailable; benchmarking the numpy backend only\n")

    shapes = [(4, 4), (6, 5)]
    print(f"{'shape':>10} {'op':>8} {'numpy':>12} {'numba':>12} {'speedup':>8}")
    for n, layers in shapes:
        np_fwd, np_adj = bench_backend(_kernels_numpy, n, layers, reps=300)
        if _kernels_numba is not None:
            nb_fwd, nb_adj = bench_backend(_kernels_numba, n, layers, reps=20_000)
        else:
            nb_fwd = nb_adj = float("nan")
        label = f"{n}q x {layers}l"
        print(f"{label:>10} {'forward':>8} {np_fwd * 1e6:>10.1f}us {nb_fwd * 1e6:>10.1f}us "
              f"{np_fwd / nb_fwd:>7.1f}x")
        print(f"{label:>10} {'adjoint':>8} {np_adj * 1e6:>10.1f}us {nb_adj * 1e6:>10.1f}us "
              f"{np_adj / nb_adj:>7.1f}x")

    per_step = bench_training_slice()
    from qoc.backend import BACKEND

    print(f"\nhybrid_f cartpole training ({BACKEND} backend): {per_step * 1e3:.2f} ms/step")
    print("set QOC_BACKEND=numpy and rerun to time the fallback end to end")


if __name__ == "__main__":
    main()
