"""Hybrid quantum-classical option-critic reinforcement learning toolkit.

Subpackages:
    qsim     exact statevector simulator with adjoint gradients
    vqc      layered data re-uploading circuit ansatz
    diffnet  minimal reverse-mode autodiff and Adam
    envs     CartPole and Acrobot dynamics
    agent    option-critic network assembly (classical / quantum components)
    trainer  DQN-style option-critic training loop
    expkit   experiment orchestration, metrics, plots, CLI
"""

__version__ = "0.1.0"
