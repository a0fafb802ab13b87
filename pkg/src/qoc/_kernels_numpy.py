"""Vectorized numpy statevector kernels (fallback backend).

Conventions shared with the numba backend:
  - qubit 0 is the most significant bit of the basis index, so reshaping the
    amplitude array to (2,) * n puts qubit q on axis q
  - apply_* functions mutate the statevector in place
  - expect_z divides by the squared norm, which keeps results inside [-1, 1]
    even after accumulated rounding (the true state always has norm 1)
"""
from __future__ import annotations

import math

import numpy as np


def apply_1q(psi: np.ndarray, n: int, q: int, m00, m01, m10, m11) -> None:
    """Apply an arbitrary 2x2 matrix to qubit q of an n-qubit state."""
    v = psi.reshape(1 << q, 2, -1)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    new0 = m00 * a0 + m01 * a1
    v[:, 1, :] = m10 * a0 + m11 * a1
    v[:, 0, :] = new0


def apply_cnot(psi: np.ndarray, n: int, control: int, target: int) -> None:
    """Flip the target bit on the control=1 half of the state."""
    v = psi.reshape((2,) * n)
    idx = [slice(None)] * n
    idx[control] = 1
    sub = v[tuple(idx)]
    ax = target if target < control else target - 1
    v[tuple(idx)] = np.flip(sub, axis=ax).copy()


def expect_z(psi: np.ndarray, n: int, q: int) -> float:
    p = (psi.real * psi.real + psi.imag * psi.imag).reshape(1 << q, 2, -1)
    pos = p[:, 0, :].sum()
    neg = p[:, 1, :].sum()
    return float((pos - neg) / (pos + neg))


def weighted_z(psi: np.ndarray, n: int, w: np.ndarray) -> np.ndarray:
    """Return (sum_k w[k] Z_k) |psi>; w has one entry per qubit."""
    dim = psi.shape[0]
    idx = np.arange(dim)
    coeff = np.zeros(dim)
    for k in range(n):
        if w[k] != 0.0:
            bits = (idx >> (n - 1 - k)) & 1
            coeff += w[k] * (1.0 - 2.0 * bits)
    return coeff * psi


def pauli_x_im(bra: np.ndarray, ket: np.ndarray, n: int, q: int) -> float:
    b = bra.reshape(1 << q, 2, -1)
    k = ket.reshape(1 << q, 2, -1)
    z = np.vdot(b[:, 0, :], k[:, 1, :]) + np.vdot(b[:, 1, :], k[:, 0, :])
    return float(z.imag)


def pauli_y_im(bra: np.ndarray, ket: np.ndarray, n: int, q: int) -> float:
    b = bra.reshape(1 << q, 2, -1)
    k = ket.reshape(1 << q, 2, -1)
    z = -1j * np.vdot(b[:, 0, :], k[:, 1, :]) + 1j * np.vdot(b[:, 1, :], k[:, 0, :])
    return float(z.imag)


def pauli_z_im(bra: np.ndarray, ket: np.ndarray, n: int, q: int) -> float:
    b = bra.reshape(1 << q, 2, -1)
    k = ket.reshape(1 << q, 2, -1)
    z = np.vdot(b[:, 0, :], k[:, 0, :]) - np.vdot(b[:, 1, :], k[:, 1, :])
    return float(z.imag)


def _apply_rx(psi, n, q, angle):
    c = math.cos(0.5 * angle)
    s = math.sin(0.5 * angle)
    apply_1q(psi, n, q, c, -1j * s, -1j * s, c)


def _apply_ry(psi, n, q, angle):
    c = math.cos(0.5 * angle)
    s = math.sin(0.5 * angle)
    apply_1q(psi, n, q, c, -s, s, c)


def _apply_rz(psi, n, q, angle):
    e = math.cos(0.5 * angle) - 1j * math.sin(0.5 * angle)
    apply_1q(psi, n, q, e, 0.0, 0.0, e.conjugate())


def vqc_forward(n, lam, th_y, th_z, x, entangle, out_dim):
    """Run the layered re-uploading circuit; return (expectations, statevector).

    Layer structure: RX(lam[l, q] * x[q]) per qubit, optional CNOT ring
    (0->1, ..., n-2->n-1, wrap n-1->0), then RY and RZ rotation rows.
    """
    n_layers = lam.shape[0]
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[0] = 1.0
    for layer in range(n_layers):
        for q in range(n):
            _apply_rx(psi, n, q, lam[layer, q] * x[q])
        if entangle and n > 1:
            for q in range(n - 1):
                apply_cnot(psi, n, q, q + 1)
            apply_cnot(psi, n, n - 1, 0)
        for q in range(n):
            _apply_ry(psi, n, q, th_y[layer, q])
        for q in range(n):
            _apply_rz(psi, n, q, th_z[layer, q])
    outs = np.empty(out_dim)
    for k in range(out_dim):
        outs[k] = expect_z(psi, n, k)
    return outs, psi


def vqc_adjoint(n, lam, th_y, th_z, x, entangle, psi, w):
    """Reverse sweep for the layered circuit.

    Given the final statevector and observable weights w (per qubit), returns
    the gradients of sum_k w[k] <Z_k> with respect to every rotation angle,
    as three (n_layers, n) arrays for the RX / RY / RZ rows.
    """
    n_layers = lam.shape[0]
    bra = weighted_z(psi, n, w)
    ket = psi.copy()
    g_rx = np.zeros((n_layers, n))
    g_ry = np.zeros((n_layers, n))
    g_rz = np.zeros((n_layers, n))
    for layer in range(n_layers - 1, -1, -1):
        for q in range(n - 1, -1, -1):
            g_rz[layer, q] = pauli_z_im(bra, ket, n, q)
            a = -th_z[layer, q]
            _apply_rz(ket, n, q, a)
            _apply_rz(bra, n, q, a)
        for q in range(n - 1, -1, -1):
            g_ry[layer, q] = pauli_y_im(bra, ket, n, q)
            a = -th_y[layer, q]
            _apply_ry(ket, n, q, a)
            _apply_ry(bra, n, q, a)
        if entangle and n > 1:
            apply_cnot(ket, n, n - 1, 0)
            apply_cnot(bra, n, n - 1, 0)
            for q in range(n - 2, -1, -1):
                apply_cnot(ket, n, q, q + 1)
                apply_cnot(bra, n, q, q + 1)
        for q in range(n - 1, -1, -1):
            g_rx[layer, q] = pauli_x_im(bra, ket, n, q)
            a = -lam[layer, q] * x[q]
            _apply_rx(ket, n, q, a)
            _apply_rx(bra, n, q, a)
    return g_rx, g_ry, g_rz
