"""Exact statevector simulator for few-qubit rotation/CNOT circuits.

Gate set: RX, RY, RZ (R_sigma(theta) = exp(-i theta sigma / 2)) and CNOT.
Qubit 0 is the most significant bit of the basis index, so for two qubits
the amplitude order is |00>, |01>, |10>, |11>.

Gradients of Pauli-Z expectations come from an adjoint reverse sweep: one
forward pass, then each gate is peeled off a bra/ket pair while accumulating
2 Re <b| dU/dtheta |k> per trainable rotation. A parameter-shift evaluator
(two shifted forward runs per rotation) is kept as an independent oracle,
and a central finite-difference evaluator as a second one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .backend import kernels as K

MAX_QUBITS = 12


class GateKind(Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CNOT = "cnot"


ROTATION_KINDS = (GateKind.RX, GateKind.RY, GateKind.RZ)


@dataclass(frozen=True)
class GateOp:
    """One circuit operation. Rotations carry an angle and may carry a
    trainable-parameter handle; CNOT carries a control qubit instead."""

    kind: GateKind
    target: int
    control: int | None = None
    angle: float | None = None
    param_id: int | None = None

    def __post_init__(self):
        if self.kind is GateKind.CNOT:
            if self.control is None:
                raise ValueError("CNOT requires a control qubit")
            if self.control == self.target:
                raise ValueError("CNOT control and target must differ")
            if self.angle is not None:
                raise ValueError("CNOT takes no angle")
        else:
            if self.angle is None:
                raise ValueError(f"{self.kind.name} requires an angle")
            if self.control is not None:
                raise ValueError("rotations take no control qubit")


@dataclass(frozen=True)
class Observable:
    """Pauli-Z readout on one qubit (eigenvalues +-1)."""

    qubit: int


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray


def init_ground(n_qubits: int) -> StateVector:
    """All-zeros computational basis state |0...0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amp = np.zeros(1 << n_qubits, dtype=np.complex128)
    amp[0] = 1.0
    return StateVector(n_qubits, amp)


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise ValueError(f"qubit index {q} out of range for {n} qubits")


def _apply_inplace(amp: np.ndarray, n: int, gate: GateOp) -> None:
    _check_qubit(gate.target, n)
    if gate.kind is GateKind.CNOT:
        _check_qubit(gate.control, n)
        K.apply_cnot(amp, n, gate.control, gate.target)
        return
    c = math.cos(0.5 * gate.angle)
    s = math.sin(0.5 * gate.angle)
    if gate.kind is GateKind.RX:
        K.apply_1q(amp, n, gate.target, c + 0j, -1j * s, -1j * s, c + 0j)
    elif gate.kind is GateKind.RY:
        K.apply_1q(amp, n, gate.target, c + 0j, -s + 0j, s + 0j, c + 0j)
    else:
        K.apply_1q(amp, n, gate.target, c - 1j * s, 0j, 0j, c + 1j * s)


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Pure gate application: the input state is left untouched."""
    amp = state.amplitudes.copy()
    _apply_inplace(amp, state.n_qubits, gate)
    return StateVector(state.n_qubits, amp)


def run_circuit(n_qubits: int, circuit: Sequence[GateOp]) -> StateVector:
    state = init_ground(n_qubits)
    for gate in circuit:
        _apply_inplace(state.amplitudes, n_qubits, gate)
    return state


def expectation_z(state: StateVector, qubit: int) -> float:
    _check_qubit(qubit, state.n_qubits)
    return K.expect_z(state.amplitudes, state.n_qubits, qubit)


def expectations(
    circuit: Sequence[GateOp], observables: Sequence[Observable], n_qubits: int
) -> np.ndarray:
    state = run_circuit(n_qubits, circuit)
    return np.array([expectation_z(state, ob.qubit) for ob in observables])


def _param_dim(circuit: Sequence[GateOp]) -> int:
    n_params = 0
    for gate in circuit:
        if gate.param_id is None:
            continue
        if gate.kind not in ROTATION_KINDS:
            raise ValueError("only rotation gates may carry a param_id")
        if gate.param_id < 0:
            raise ValueError("param_id must be non-negative")
        n_params = max(n_params, gate.param_id + 1)
    return n_params


_PAULI_IM = {
    GateKind.RX: K.pauli_x_im,
    GateKind.RY: K.pauli_y_im,
    GateKind.RZ: K.pauli_z_im,
}


def grad_expectations(
    circuit: Sequence[GateOp], observables: Sequence[Observable], n_qubits: int
) -> np.ndarray:
    """Adjoint-differentiation Jacobian d<Z_qk>/d theta_j, shape (K, P).

    Gates sharing a param_id have their contributions summed. One reverse
    sweep per observable; cost O(K * len(circuit)) gate applications.
    """
    n_params = _param_dim(circuit)
    grads = np.zeros((len(observables), n_params))
    if n_params == 0:
        return grads
    final = run_circuit(n_qubits, circuit)
    w = np.zeros(n_qubits)
    for k, ob in enumerate(observables):
        _check_qubit(ob.qubit, n_qubits)
        w[:] = 0.0
        w[ob.qubit] = 1.0
        bra = K.weighted_z(final.amplitudes, n_qubits, w)
        ket = final.amplitudes.copy()
        for gate in reversed(circuit):
            if gate.param_id is not None:
                # grad = 2 Re <b| dU |k_prev> = Im <b| sigma |k_cur> for
                # U = exp(-i theta sigma / 2), evaluated before undoing U
                grads[k, gate.param_id] += _PAULI_IM[gate.kind](
                    bra, ket, n_qubits, gate.target
                )
            if gate.kind is GateKind.CNOT:
                inverse = gate
            else:
                inverse = replace(gate, angle=-gate.angle)
            _apply_inplace(ket, n_qubits, inverse)
            _apply_inplace(bra, n_qubits, inverse)
    return grads


def param_shift_expectations(
    circuit: Sequence[GateOp], observables: Sequence[Observable], n_qubits: int
) -> np.ndarray:
    """Parameter-shift Jacobian, (f(+pi/2) - f(-pi/2)) / 2 per rotation gate.

    Exact for this gate set; implemented purely from forward runs so it can
    serve as an oracle for the adjoint path. Shared param_ids accumulate via
    per-gate shifts, which stays exact even when a parameter appears twice.
    """
    n_params = _param_dim(circuit)
    grads = np.zeros((len(observables), n_params))
    circuit = list(circuit)
    for j, gate in enumerate(circuit):
        if gate.param_id is None:
            continue
        plus = list(circuit)
        minus = list(circuit)
        plus[j] = replace(gate, angle=gate.angle + math.pi / 2)
        minus[j] = replace(gate, angle=gate.angle - math.pi / 2)
        diff = expectations(plus, observables, n_qubits) - expectations(
            minus, observables, n_qubits
        )
        grads[:, gate.param_id] += diff / 2.0
    return grads


def finite_diff_expectations(
    circuit: Sequence[GateOp],
    observables: Sequence[Observable],
    n_qubits: int,
    h: float = 1e-5,
) -> np.ndarray:
    """Central finite-difference Jacobian over per-gate angles (test oracle)."""
    n_params = _param_dim(circuit)
    grads = np.zeros((len(observables), n_params))
    circuit = list(circuit)
    for j, gate in enumerate(circuit):
        if gate.param_id is None:
            continue
        plus = list(circuit)
        minus = list(circuit)
        plus[j] = replace(gate, angle=gate.angle + h)
        minus[j] = replace(gate, angle=gate.angle - h)
        diff = expectations(plus, observables, n_qubits) - expectations(
            minus, observables, n_qubits
        )
        grads[:, gate.param_id] += diff / (2.0 * h)
    return grads
