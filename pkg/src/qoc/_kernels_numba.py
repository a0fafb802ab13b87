"""Numba-compiled statevector kernels (default backend).

Same signatures and bit conventions as _kernels_numpy; explicit loops over
amplitude pairs replace the vectorized reshape tricks, which is what makes
these fast on the tiny (16-64 amplitude) states used here.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def apply_1q(psi, n, q, m00, m01, m10, m11):
    stride = 1 << (n - 1 - q)
    block = stride << 1
    dim = psi.shape[0]
    for base in range(0, dim, block):
        for off in range(stride):
            i0 = base + off
            i1 = i0 + stride
            a0 = psi[i0]
            a1 = psi[i1]
            psi[i0] = m00 * a0 + m01 * a1
            psi[i1] = m10 * a0 + m11 * a1


@njit(cache=True)
def apply_cnot(psi, n, control, target):
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    dim = psi.shape[0]
    for i in range(dim):
        if (i & cbit) != 0 and (i & tbit) == 0:
            j = i | tbit
            tmp = psi[i]
            psi[i] = psi[j]
            psi[j] = tmp


@njit(cache=True)
def expect_z(psi, n, q):
    bit = 1 << (n - 1 - q)
    pos = 0.0
    neg = 0.0
    for i in range(psi.shape[0]):
        p = psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
        if i & bit:
            neg += p
        else:
            pos += p
    return (pos - neg) / (pos + neg)


@njit(cache=True)
def weighted_z(psi, n, w):
    dim = psi.shape[0]
    out = np.empty(dim, np.complex128)
    for i in range(dim):
        c = 0.0
        for k in range(n):
            if w[k] != 0.0:
                if i & (1 << (n - 1 - k)):
                    c -= w[k]
                else:
                    c += w[k]
        out[i] = c * psi[i]
    return out


@njit(cache=True)
def pauli_x_im(bra, ket, n, q):
    stride = 1 << (n - 1 - q)
    block = stride << 1
    dim = bra.shape[0]
    acc = 0.0
    for base in range(0, dim, block):
        for off in range(stride):
            i0 = base + off
            i1 = i0 + stride
            z = np.conj(bra[i0]) * ket[i1] + np.conj(bra[i1]) * ket[i0]
            acc += z.imag
    return acc


@njit(cache=True)
def pauli_y_im(bra, ket, n, q):
    stride = 1 << (n - 1 - q)
    block = stride << 1
    dim = bra.shape[0]
    acc = 0.0
    for base in range(0, dim, block):
        for off in range(stride):
            i0 = base + off
            i1 = i0 + stride
            z = np.conj(bra[i0]) * (-1j * ket[i1]) + np.conj(bra[i1]) * (1j * ket[i0])
            acc += z.imag
    return acc


@njit(cache=True)
def pauli_z_im(bra, ket, n, q):
    bit = 1 << (n - 1 - q)
    acc = 0.0
    for i in range(bra.shape[0]):
        z = np.conj(bra[i]) * ket[i]
        if i & bit:
            acc -= z.imag
        else:
            acc += z.imag
    return acc


@njit(cache=True)
def _apply_rx(psi, n, q, angle):
    c = math.cos(0.5 * angle)
    s = math.sin(0.5 * angle)
    apply_1q(psi, n, q, c + 0.0j, -1j * s, -1j * s, c + 0.0j)


@njit(cache=True)
def _apply_ry(psi, n, q, angle):
    c = math.cos(0.5 * angle)
    s = math.sin(0.5 * angle)
    apply_1q(psi, n, q, c + 0.0j, -s + 0.0j, s + 0.0j, c + 0.0j)


@njit(cache=True)
def _apply_rz(psi, n, q, angle):
    c = math.cos(0.5 * angle)
    s = math.sin(0.5 * angle)
    apply_1q(psi, n, q, c - 1j * s, 0.0j, 0.0j, c + 1j * s)


@njit(cache=True)
def vqc_forward(n, lam, th_y, th_z, x, entangle, out_dim):
    n_layers = lam.shape[0]
    psi = np.zeros(1 << n, np.complex128)
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


@njit(cache=True)
def vqc_adjoint(n, lam, th_y, th_z, x, entangle, psi, w):
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
