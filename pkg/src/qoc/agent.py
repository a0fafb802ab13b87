"""Option-critic network assembly.

A net is a shared feature extractor feeding three head groups: an
option-value head and a termination head that score all options at once,
and one independent policy head per option. Any of the four components can
be classical (linear / single-hidden-layer MLP) or a circuit head, selected
per-component by a VariantSpec.

Data flow: a quantum feature extractor consumes observation angles from the
environment's encoding spec; classical extractors consume raw observations.
Downstream quantum heads squash the shared feature vector through 2 atan
before encoding; classical heads take it as-is. Termination logits pass
through a sigmoid and policy logits through a softmax. Quantum heads read
the Pauli-Z expectations of the first out_dim qubits, so a quantum
option-value head is confined to [-1, 1] by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diffnet, envs, vqc
from .diffnet import Tensor

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class VariantSpec:
    """Which components are quantum: feature extractor, option values,
    terminations, intra-option policies."""

    quantum_f: bool = False
    quantum_o: bool = False
    quantum_t: bool = False
    quantum_p: bool = False


VARIANTS = {
    "classical": VariantSpec(),
    "hybrid_f": VariantSpec(quantum_f=True),
    "hybrid_o": VariantSpec(quantum_o=True),
    "hybrid_t": VariantSpec(quantum_t=True),
    "hybrid_p": VariantSpec(quantum_p=True),
    "hybrid_fo": VariantSpec(quantum_f=True, quantum_o=True),
    "hybrid_ft": VariantSpec(quantum_f=True, quantum_t=True),
    "hybrid_fp": VariantSpec(quantum_f=True, quantum_p=True),
    "hybrid_fotp": VariantSpec(True, True, True, True),
}


@dataclass(frozen=True)
class EnvLayout:
    """Per-environment architecture table.

    head_hidden None means classical downstream heads are plain linear
    layers; an int selects a single-hidden-layer MLP of that width.
    """

    obs_dim: int
    n_actions: int
    fe_layers: int
    head_layers: int
    head_hidden: int | None


LAYOUTS = {
    "cartpole": EnvLayout(obs_dim=4, n_actions=2, fe_layers=4, head_layers=1, head_hidden=None),
    "acrobot": EnvLayout(obs_dim=6, n_actions=3, fe_layers=5, head_layers=2, head_hidden=3),
}


class OptionCriticNet:
    def __init__(
        self,
        env_name: str,
        variant: VariantSpec,
        n_options: int,
        rng: np.random.Generator,
        fe_width: int = 8,
        depth_delta: int = 0,
        scaling: bool = True,
        entangling: bool = True,
    ):
        if env_name not in LAYOUTS:
            raise ValueError(f"unsupported environment {env_name!r}")
        if n_options < 2:
            raise ValueError("need at least 2 options")
        layout = LAYOUTS[env_name]
        d = layout.obs_dim
        if (variant.quantum_o or variant.quantum_t) and n_options > d:
            raise ValueError("quantum heads cannot emit more options than qubits")
        self.env_name = env_name
        self.variant = variant
        self.n_options = n_options
        self.n_actions = layout.n_actions
        self.obs_dim = d
        self._build_args = dict(
            env_name=env_name,
            variant=variant,
            n_options=n_options,
            fe_width=fe_width,
            depth_delta=depth_delta,
            scaling=scaling,
            entangling=entangling,
        )
        self.encoding = envs.encoding_spec(env_name)

        if variant.quantum_f:
            fe_layers = layout.fe_layers + depth_delta
            if fe_layers < 1:
                raise ValueError("depth_delta leaves the extractor with no layers")
            self.feature_extractor = vqc.VqcModule(
                vqc.VqcArchitecture(d, fe_layers, entangling, d, scaling), rng
            )
        else:
            self.feature_extractor = diffnet.Mlp(d, fe_width, d, rng)

        def head(quantum: bool, out: int):
            if quantum:
                arch = vqc.VqcArchitecture(d, layout.head_layers, entangling, out, scaling)
                return vqc.VqcModule(arch, rng)
            if layout.head_hidden is None:
                return diffnet.Linear(d, out, rng)
            return diffnet.Mlp(d, layout.head_hidden, out, rng)

        self.q_head = head(variant.quantum_o, n_options)
        self.term_head = head(variant.quantum_t, n_options)
        self.policy_heads = [
            head(variant.quantum_p, layout.n_actions) for _ in range(n_options)
        ]

    # --- forward paths ---------------------------------------------------

    def features(self, s) -> Tensor:
        """Shared representation h; same dimensionality as the observation."""
        arr = np.asarray(s, dtype=np.float64)
        if self.variant.quantum_f:
            return self.feature_extractor(Tensor(vqc.normalize_input(arr, self.encoding)))
        return self.feature_extractor(Tensor(arr))

    def _head_input(self, h: Tensor, quantum: bool) -> Tensor:
        return diffnet.arctan_encode(h) if quantum else h

    def q_values(self, h: Tensor) -> Tensor:
        return self.q_head(self._head_input(h, self.variant.quantum_o))

    def terminations(self, h: Tensor) -> Tensor:
        return diffnet.sigmoid(self.term_head(self._head_input(h, self.variant.quantum_t)))

    def policy_probs(self, h: Tensor, omega: int) -> Tensor:
        logits = self.policy_heads[omega](self._head_input(h, self.variant.quantum_p))
        return diffnet.softmax(logits)

    # --- bookkeeping -------------------------------------------------------

    def component_param_counts(self) -> dict[str, int]:
        return {
            "feature_extractor": self.feature_extractor.n_params,
            "option_value": self.q_head.n_params,
            "termination": self.term_head.n_params,
            "policies": sum(p.n_params for p in self.policy_heads),
        }

    def total_params(self) -> int:
        return sum(self.component_param_counts().values())

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        named = self.feature_extractor.named_parameters("fe.")
        named += self.q_head.named_parameters("q.")
        named += self.term_head.named_parameters("term.")
        for i, p in enumerate(self.policy_heads):
            named += p.named_parameters(f"pi{i}.")
        return named

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.values.copy() for name, t in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        named = dict(self.named_parameters())
        if set(named) != set(state):
            raise ValueError("parameter names do not match this architecture")
        for name, t in named.items():
            if t.values.shape != state[name].shape:
                raise ValueError(f"shape mismatch for {name}")
            t.values[...] = state[name]


def build(
    env_name: str,
    variant: VariantSpec | str,
    n_options: int,
    rng: np.random.Generator,
    **overrides,
) -> OptionCriticNet:
    if isinstance(variant, str):
        variant = VARIANTS[variant]
    return OptionCriticNet(env_name, variant, n_options, rng, **overrides)


def make_target(net: OptionCriticNet) -> OptionCriticNet:
    """Fresh copy of the architecture synchronized to the main parameters."""
    target = OptionCriticNet(rng=np.random.default_rng(0), **net._build_args)
    sync_target(target, net)
    return target


def sync_target(target: OptionCriticNet, net: OptionCriticNet) -> None:
    for (_, pt), (_, pm) in zip(target.named_parameters(), net.named_parameters()):
        pt.values[...] = pm.values


def choose_option(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over option values; argmax ties break to lowest index."""
    if rng.random() < epsilon:
        return int(rng.integers(len(q)))
    return int(np.argmax(q))


def sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> int:
    r = rng.random()
    return int(min(np.searchsorted(np.cumsum(probs), r, side="right"), len(probs) - 1))


def act(net: OptionCriticNet, h: Tensor, omega: int, rng: np.random.Generator) -> int:
    """Sample an action from the active option's policy."""
    return sample_categorical(net.policy_probs(h, omega).values, rng)


def save_checkpoint(net: OptionCriticNet, path) -> None:
    np.savez(path, __version__=np.int64(CHECKPOINT_VERSION), **net.state_dict())


def load_checkpoint(net: OptionCriticNet, path) -> None:
    with np.load(path) as data:
        version = int(data["__version__"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        net.load_state_dict({k: data[k] for k in data.files if k != "__version__"})
