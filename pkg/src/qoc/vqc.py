"""Layered data re-uploading circuit ansatz.

Each layer re-encodes the classical input with RX(lambda[l, q] * x[q]) on
every qubit (lambda are trainable input scalings), entangles with a CNOT
ring (0->1, ..., n-2->n-1, plus a wrap gate n-1->0), then applies trainable
RY and RZ rotation rows. Outputs are the Pauli-Z expectations of the first
out_dim qubits, so every output lives in [-1, 1].

Inputs must be valid rotation angles; normalize_input maps observations into
[-pi, pi] (bounded dims are scaled by pi/c, unbounded and latent dims are
squashed with 2 atan).

Forward/backward run on the fused backend kernels (see qoc.backend); the
backward chain rule exposes gradients for the scalings, the rotation angles,
and the input angles themselves, so a circuit can sit mid-graph. VqcModule
adapts all of this to the diffnet Tensor contract.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import diffnet, qsim
from .backend import kernels as K


@dataclass(frozen=True)
class VqcArchitecture:
    n_qubits: int
    n_layers: int
    entangling: bool = True
    out_dim: int | None = None
    learnable_scaling: bool = True

    def __post_init__(self):
        if not 1 <= self.n_qubits <= qsim.MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {qsim.MAX_QUBITS}]")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if self.out_dim is None:
            object.__setattr__(self, "out_dim", self.n_qubits)
        if not 1 <= self.out_dim <= self.n_qubits:
            raise ValueError("out_dim must be in [1, n_qubits]")


def param_count(arch: VqcArchitecture) -> int:
    per_layer = (3 if arch.learnable_scaling else 2) * arch.n_qubits
    return arch.n_layers * per_layer


@dataclass
class VqcParams:
    """Per-layer angles: input scalings plus RY/RZ rotations, each (L, n)."""

    lam: np.ndarray
    theta_ry: np.ndarray
    theta_rz: np.ndarray


@dataclass
class VqcGrads:
    lam: np.ndarray
    theta_ry: np.ndarray
    theta_rz: np.ndarray


def init_params(arch: VqcArchitecture, rng: np.random.Generator) -> VqcParams:
    """Scalings start at 1 (the fixed-scaling ablation is the init point);
    rotation angles are i.i.d. uniform on [-pi, pi]."""
    shape = (arch.n_layers, arch.n_qubits)
    return VqcParams(
        lam=np.ones(shape),
        theta_ry=rng.uniform(-math.pi, math.pi, shape),
        theta_rz=rng.uniform(-math.pi, math.pi, shape),
    )


# --- input encoding ----------------------------------------------------

UNBOUNDED = "unbounded"
BOUNDED = "bounded"
LATENT = "latent"


@dataclass(frozen=True)
class Encoding:
    kind: str
    bound: float | None = None

    def __post_init__(self):
        if self.kind not in (UNBOUNDED, BOUNDED, LATENT):
            raise ValueError(f"unknown encoding kind {self.kind!r}")
        if self.kind == BOUNDED:
            if self.bound is None or self.bound <= 0:
                raise ValueError("bounded encoding requires a positive bound")
        elif self.bound is not None:
            raise ValueError(f"{self.kind} encoding takes no bound")


def unbounded() -> Encoding:
    return Encoding(UNBOUNDED)


def bounded(c: float) -> Encoding:
    return Encoding(BOUNDED, c)


def latent() -> Encoding:
    return Encoding(LATENT)


class EncodingSpec:
    """Per-dimension input-to-angle maps, with the elementwise transform
    precomputed as arrays so whole observations convert in one shot."""

    def __init__(self, entries: Sequence[Encoding]):
        self.entries = tuple(entries)
        self._is_bounded = np.array([e.kind == BOUNDED for e in self.entries])
        self._bounds = np.array(
            [e.bound if e.kind == BOUNDED else 1.0 for e in self.entries]
        )

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @staticmethod
    def latent(dim: int) -> "EncodingSpec":
        return EncodingSpec([latent()] * dim)


def normalize_input(raw, spec: EncodingSpec) -> np.ndarray:
    """Map raw values to rotation angles in [-pi, pi].

    Bounded dims are clamped to [-c, c] then scaled by pi/c; unbounded and
    latent dims go through 2 atan. Accepts a vector or a (batch, dim) array.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.shape[-1] != len(spec):
        raise ValueError(
            f"input has {arr.shape[-1]} dims, encoding spec expects {len(spec)}"
        )
    clipped = np.clip(arr, -spec._bounds, spec._bounds)
    scaled = (math.pi / spec._bounds) * clipped
    squashed = 2.0 * np.arctan(arr)
    return np.where(spec._is_bounded, scaled, squashed)


# --- forward / backward ------------------------------------------------


@dataclass
class VqcTrace:
    """Everything the reverse sweep needs; angle matrices are snapshots so a
    later in-place parameter update cannot corrupt the backward pass."""

    arch: VqcArchitecture
    lam: np.ndarray
    theta_ry: np.ndarray
    theta_rz: np.ndarray
    angles: np.ndarray
    psi: np.ndarray
    outputs: np.ndarray


def _check_shapes(arch: VqcArchitecture, params: VqcParams) -> None:
    shape = (arch.n_layers, arch.n_qubits)
    for name in ("lam", "theta_ry", "theta_rz"):
        if getattr(params, name).shape != shape:
            raise ValueError(f"params.{name} must have shape {shape}")


def vqc_forward(
    arch: VqcArchitecture, params: VqcParams, angles: np.ndarray
) -> tuple[np.ndarray, VqcTrace]:
    _check_shapes(arch, params)
    angles = np.ascontiguousarray(angles, dtype=np.float64)
    if angles.shape != (arch.n_qubits,):
        raise ValueError(f"angles must have shape ({arch.n_qubits},)")
    outputs, psi = K.vqc_forward(
        arch.n_qubits,
        params.lam,
        params.theta_ry,
        params.theta_rz,
        angles,
        arch.entangling,
        arch.out_dim,
    )
    trace = VqcTrace(
        arch,
        params.lam.copy(),
        params.theta_ry.copy(),
        params.theta_rz.copy(),
        angles.copy(),
        psi,
        outputs,
    )
    return outputs, trace


def vqc_backward(
    trace: VqcTrace, upstream_grad: np.ndarray
) -> tuple[VqcGrads, np.ndarray]:
    """Exact gradients of sum_k upstream[k] * outputs[k].

    Returns parameter gradients shaped like VqcParams and the gradient with
    respect to the input angles (for chaining into an upstream module).
    """
    arch = trace.arch
    upstream = np.asarray(upstream_grad, dtype=np.float64)
    if upstream.shape != (arch.out_dim,):
        raise ValueError(f"upstream_grad must have shape ({arch.out_dim},)")
    shape = (arch.n_layers, arch.n_qubits)
    if not upstream.any():
        return (
            VqcGrads(np.zeros(shape), np.zeros(shape), np.zeros(shape)),
            np.zeros(arch.n_qubits),
        )
    w = np.zeros(arch.n_qubits)
    w[: arch.out_dim] = upstream
    g_rx, g_ry, g_rz = K.vqc_adjoint(
        arch.n_qubits,
        trace.lam,
        trace.theta_ry,
        trace.theta_rz,
        trace.angles,
        arch.entangling,
        trace.psi,
        w,
    )
    # encoding angle is lam * x: d/dlam = x * g_rx, d/dx = sum_l lam * g_rx
    grads = VqcGrads(g_rx * trace.angles[None, :], g_ry, g_rz)
    input_grads = (trace.lam * g_rx).sum(axis=0)
    return grads, input_grads


def expand_circuit(
    arch: VqcArchitecture, params: VqcParams, angles: np.ndarray
) -> list[qsim.GateOp]:
    """Unroll the ansatz into an explicit gate list (cross-check utility).

    param_ids run in application order: per layer, n RX ids, then n RY,
    then n RZ, matching the row-major flattening of the (L, n) grids.
    """
    _check_shapes(arch, params)
    ops: list[qsim.GateOp] = []
    pid = 0
    n = arch.n_qubits
    for layer in range(arch.n_layers):
        for q in range(n):
            ops.append(
                qsim.GateOp(
                    qsim.GateKind.RX,
                    q,
                    angle=float(params.lam[layer, q] * angles[q]),
                    param_id=pid,
                )
            )
            pid += 1
        if arch.entangling and n > 1:
            for q in range(n - 1):
                ops.append(qsim.GateOp(qsim.GateKind.CNOT, target=q + 1, control=q))
            ops.append(qsim.GateOp(qsim.GateKind.CNOT, target=0, control=n - 1))
        for q in range(n):
            ops.append(
                qsim.GateOp(
                    qsim.GateKind.RY, q, angle=float(params.theta_ry[layer, q]), param_id=pid
                )
            )
            pid += 1
        for q in range(n):
            ops.append(
                qsim.GateOp(
                    qsim.GateKind.RZ, q, angle=float(params.theta_rz[layer, q]), param_id=pid
                )
            )
            pid += 1
    return ops


# --- diffnet integration -----------------------------------------------


class VqcModule:
    """Circuit head with the same call/parameter contract as diffnet layers.

    Input tensors hold rotation angles, one per qubit (callers apply
    normalize_input or arctan_encode first). Batched inputs are evaluated
    row by row since the simulator is per-sample. The scaling matrix is only
    registered as trainable when the architecture enables it.
    """

    def __init__(self, arch: VqcArchitecture, rng: np.random.Generator):
        self.arch = arch
        p = init_params(arch, rng)
        self.lam = diffnet.Tensor(p.lam)
        self.theta_ry = diffnet.Tensor(p.theta_ry)
        self.theta_rz = diffnet.Tensor(p.theta_rz)

    def _params(self) -> VqcParams:
        return VqcParams(self.lam.values, self.theta_ry.values, self.theta_rz.values)

    def __call__(self, x: diffnet.Tensor) -> diffnet.Tensor:
        single = x.values.ndim == 1
        rows = np.ascontiguousarray(x.values[None, :] if single else x.values)
        if rows.shape[1] != self.arch.n_qubits:
            raise ValueError(f"expected {self.arch.n_qubits} input angles")
        arch = self.arch
        # one parameter snapshot shared by all row traces (params cannot
        # change mid-call; optimizer steps happen strictly after backward)
        lam = self.lam.values.copy()
        th_y = self.theta_ry.values.copy()
        th_z = self.theta_rz.values.copy()
        traces = []
        outs = np.empty((rows.shape[0], arch.out_dim))
        for i in range(rows.shape[0]):
            outs[i], psi = K.vqc_forward(
                arch.n_qubits, lam, th_y, th_z, rows[i], arch.entangling, arch.out_dim
            )
            traces.append(VqcTrace(arch, lam, th_y, th_z, rows[i], psi, outs[i]))
        parents = (x, self.lam, self.theta_ry, self.theta_rz)
        out = diffnet.Tensor(outs[0] if single else outs, parents)

        def bw():
            g = out.grad[None, :] if single else out.grad
            for t in (self.lam, self.theta_ry, self.theta_rz, x):
                if t.grad is None:
                    t.grad = np.zeros_like(t.values)
            xg = x.grad[None, :] if single else x.grad
            for i, trace in enumerate(traces):
                if not g[i].any():
                    continue
                grads, in_g = vqc_backward(trace, g[i])
                if self.arch.learnable_scaling:
                    self.lam.grad += grads.lam
                self.theta_ry.grad += grads.theta_ry
                self.theta_rz.grad += grads.theta_rz
                xg[i] += in_g

        out._backward_fn = bw
        return out

    @property
    def n_params(self) -> int:
        return param_count(self.arch)

    def named_parameters(self, prefix: str = ""):
        named = []
        if self.arch.learnable_scaling:
            named.append((prefix + "lam", self.lam))
        named.append((prefix + "theta_ry", self.theta_ry))
        named.append((prefix + "theta_rz", self.theta_rz))
        return named
