"""Backend equivalence: the compiled kernels must match the numpy ones."""
import numpy as np
import pytest

from qoc import _kernels_numpy as knp

knb = pytest.importorskip("qoc._kernels_numba")


def random_state(rng, n):
    amp = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return amp / np.linalg.norm(amp)


def test_apply_1q_matches():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        q = int(rng.integers(n))
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        a = random_state(rng, n)
        b = a.copy()
        knp.apply_1q(a, n, q, m[0, 0], m[0, 1], m[1, 0], m[1, 1])
        knb.apply_1q(b, n, q, m[0, 0], m[0, 1], m[1, 0], m[1, 1])
        assert np.abs(a - b).max() < 1e-14


def test_apply_cnot_matches():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        c, t = rng.choice(n, size=2, replace=False)
        a = random_state(rng, n)
        b = a.copy()
        knp.apply_cnot(a, n, int(c), int(t))
        knb.apply_cnot(b, n, int(c), int(t))
        assert np.array_equal(a, b)


def test_expect_and_pauli_products_match():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        q = int(rng.integers(n))
        a = random_state(rng, n)
        b = random_state(rng, n)
        assert knp.expect_z(a, n, q) == pytest.approx(knb.expect_z(a, n, q), abs=1e-13)
        assert knp.pauli_x_im(a, b, n, q) == pytest.approx(knb.pauli_x_im(a, b, n, q), abs=1e-13)
        assert knp.pauli_y_im(a, b, n, q) == pytest.approx(knb.pauli_y_im(a, b, n, q), abs=1e-13)
        assert knp.pauli_z_im(a, b, n, q) == pytest.approx(knb.pauli_z_im(a, b, n, q), abs=1e-13)
        w = rng.uniform(-1, 1, n)
        assert np.abs(knp.weighted_z(a, n, w) - knb.weighted_z(a, n, w)).max() < 1e-14


def test_fused_forward_and_adjoint_match():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(1, 6))
        layers = int(rng.integers(1, 5))
        lam = rng.uniform(-2, 2, (layers, n))
        th_y = rng.uniform(-np.pi, np.pi, (layers, n))
        th_z = rng.uniform(-np.pi, np.pi, (layers, n))
        x = rng.uniform(-np.pi, np.pi, n)
        for entangle in (True, False):
            o1, p1 = knp.vqc_forward(n, lam, th_y, th_z, x, entangle, n)
            o2, p2 = knb.vqc_forward(n, lam, th_y, th_z, x, entangle, n)
            assert np.abs(o1 - o2).max() < 1e-13
            assert np.abs(p1 - p2).max() < 1e-13
            w = rng.uniform(-1, 1, n)
            g1 = knp.vqc_adjoint(n, lam, th_y, th_z, x, entangle, p1, w)
            g2 = knb.vqc_adjoint(n, lam, th_y, th_z, x, entangle, p2, w)
            for a, b in zip(g1, g2):
                assert np.abs(a - b).max() < 1e-12
