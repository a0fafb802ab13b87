"""Minimal reverse-mode autodiff over numpy arrays, plus Adam.

A Tensor wraps a float64 array, its accumulated gradient, and a backward
closure recorded by the op that produced it. backward() seeds the root with
ones and walks the graph in reverse topological order; graphs are acyclic by
construction (ops only consume already-built tensors). Quantum circuit heads
participate through the same contract: they produce a Tensor whose closure
routes upstream gradients into their parameter tensors (see vqc.VqcModule).

Only the handful of ops the option-critic heads need are provided; there is
no broadcasting beyond scalars and no in-place autograd.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np


class Tensor:
    __slots__ = ("values", "grad", "_parents", "_backward_fn")

    def __init__(self, values, _parents=(), _backward_fn=None):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = None
        self._parents = _parents
        self._backward_fn = _backward_fn

    def __repr__(self):
        return f"Tensor(shape={self.values.shape})"

    @property
    def shape(self):
        return self.values.shape

    def item(self) -> float:
        return float(self.values)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, other, negate=True)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64)  # own copy, g may be a view
    else:
        t.grad += g


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(leaf) into .grad over every reachable tensor."""
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    root.grad = np.ones_like(root.values)
    for node in reversed(topo):
        if node._backward_fn is not None and node.grad is not None:
            node._backward_fn()


# --- ops ---------------------------------------------------------------


def _as_const(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def add(a: Tensor, b, negate: bool = False) -> Tensor:
    if isinstance(b, Tensor):
        out = Tensor(a.values - b.values if negate else a.values + b.values, (a, b))

        def bw():
            _accum(a, out.grad)
            _accum(b, -out.grad if negate else out.grad)

    else:
        bv = _as_const(b)
        out = Tensor(a.values - bv if negate else a.values + bv, (a,))

        def bw():
            _accum(a, out.grad)

    out._backward_fn = bw
    return out


def mul(a: Tensor, b) -> Tensor:
    if isinstance(b, Tensor):
        out = Tensor(a.values * b.values, (a, b))

        def bw():
            _accum(a, out.grad * b.values)
            _accum(b, out.grad * a.values)

    else:
        bv = _as_const(b)
        out = Tensor(a.values * bv, (a,))

        def bw():
            _accum(a, out.grad * bv)

    out._backward_fn = bw
    return out


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """y = x @ w.T + b for x of shape (in,) or (batch, in)."""
    xv = x.values
    out = Tensor(xv @ w.values.T + b.values, (x, w, b))

    def bw():
        g = out.grad
        if xv.ndim == 1:
            _accum(w, np.outer(g, xv))
            _accum(b, g)
            _accum(x, g @ w.values)
        else:
            _accum(w, g.T @ xv)
            _accum(b, g.sum(axis=0))
            _accum(x, g @ w.values)

    out._backward_fn = bw
    return out


def relu(x: Tensor) -> Tensor:
    mask = x.values > 0.0  # subgradient at exactly 0 is 0
    out = Tensor(np.where(mask, x.values, 0.0), (x,))

    def bw():
        _accum(x, out.grad * mask)

    out._backward_fn = bw
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-x.values))
    out = Tensor(s, (x,))

    def bw():
        _accum(x, out.grad * s * (1.0 - s))

    out._backward_fn = bw
    return out


def softmax(x: Tensor) -> Tensor:
    """Stable softmax along the last axis; outputs strictly positive."""
    shifted = x.values - x.values.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(p, (x,))

    def bw():
        g = out.grad
        dot = (g * p).sum(axis=-1, keepdims=True)
        _accum(x, p * (g - dot))

    out._backward_fn = bw
    return out


def entropy(probs: Tensor) -> Tensor:
    """Shannon entropy -sum p ln p over the last axis (natural log).

    Zero entries contribute zero value and zero gradient.
    """
    p = probs.values
    mask = p > 0.0
    plogp = np.where(mask, p * np.log(np.where(mask, p, 1.0)), 0.0)
    out = Tensor(-plogp.sum(axis=-1), (probs,))

    def bw():
        g = np.expand_dims(out.grad, -1) if p.ndim > 1 else out.grad
        d = np.where(mask, np.log(np.where(mask, p, 1.0)) + 1.0, 0.0)
        _accum(probs, -g * d)

    out._backward_fn = bw
    return out


def log(x: Tensor) -> Tensor:
    out = Tensor(np.log(x.values), (x,))

    def bw():
        _accum(x, out.grad / x.values)

    out._backward_fn = bw
    return out


def exp(x: Tensor) -> Tensor:
    e = np.exp(x.values)
    out = Tensor(e, (x,))

    def bw():
        _accum(x, out.grad * e)

    out._backward_fn = bw
    return out


def arctan_encode(x: Tensor) -> Tensor:
    """2 atan(x): squashes any real activation into (-pi, pi) rotation angles."""
    out = Tensor(2.0 * np.arctan(x.values), (x,))

    def bw():
        _accum(x, out.grad * 2.0 / (1.0 + x.values * x.values))

    out._backward_fn = bw
    return out


def select(x: Tensor, index) -> Tensor:
    """x[index] for 1-D x with int index, or x[arange(B), index] for 2-D x."""
    if x.values.ndim == 1:
        i = int(index)
        out = Tensor(x.values[i], (x,))

        def bw():
            if x.grad is None:
                x.grad = np.zeros_like(x.values)
            x.grad[i] += out.grad

    else:
        idx = np.asarray(index, dtype=np.intp)
        rows = np.arange(x.values.shape[0])
        out = Tensor(x.values[rows, idx], (x,))

        def bw():
            if x.grad is None:
                x.grad = np.zeros_like(x.values)
            np.add.at(x.grad, (rows, idx), out.grad)

    out._backward_fn = bw
    return out


def tsum(x: Tensor) -> Tensor:
    """Sum of all entries; the usual loss-reduction terminal."""
    out = Tensor(x.values.sum(), (x,))

    def bw():
        _accum(x, np.broadcast_to(out.grad, x.values.shape))

    out._backward_fn = bw
    return out


# --- layers ------------------------------------------------------------


class Linear:
    """Dense layer y = Wx + b; weights uniform in +-1/sqrt(in_dim), zero bias."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        limit = 1.0 / math.sqrt(in_dim)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Tensor(rng.uniform(-limit, limit, (out_dim, in_dim)))
        self.bias = Tensor(np.zeros(out_dim))

    def __call__(self, x: Tensor) -> Tensor:
        return affine(x, self.weight, self.bias)

    @property
    def n_params(self) -> int:
        return self.in_dim * self.out_dim + self.out_dim

    def named_parameters(self, prefix: str = ""):
        return [(prefix + "weight", self.weight), (prefix + "bias", self.bias)]


class Mlp:
    """Single-hidden-layer perceptron with ReLU."""

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int, rng):
        self.lin1 = Linear(in_dim, hidden_dim, rng)
        self.lin2 = Linear(hidden_dim, out_dim, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.lin2(relu(self.lin1(x)))

    @property
    def n_params(self) -> int:
        return self.lin1.n_params + self.lin2.n_params

    def named_parameters(self, prefix: str = ""):
        return self.lin1.named_parameters(prefix + "lin1.") + self.lin2.named_parameters(
            prefix + "lin2."
        )


class Adam:
    """Bias-corrected Adam over a fixed parameter list.

    One instance owns every trainable tensor of a model, classical and
    quantum alike; params with grad None are treated as zero-gradient.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 0.0005,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if p.grad is not None else 0.0
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.values -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
