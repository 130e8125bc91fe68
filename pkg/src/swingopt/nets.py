"""Tiny dense networks with hand-rolled reverse-mode gradients.

The policy and value networks are 5x4 tanh MLPs; an external ML runtime
would be heavier than the arithmetic itself and would cost bit-level
reproducibility. Parameters live in flat lists of arrays; the flatten /
unflatten helpers exist for finite-difference gradient checks.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng

STREAM_NN_INIT = 0x11717


def init_mlp(sizes, seed: int, instance: int) -> list[np.ndarray]:
    """[W0, b0, W1, b1, ...] with scaled uniform fan-in init, biases zero."""
    n_pairs = sum(sizes[i] * sizes[i + 1] for i in range(len(sizes) - 1))
    u = rng.uniform_pairs(seed, STREAM_NN_INIT, instance, 1,
                          (n_pairs + 1) // 2).reshape(-1)[:n_pairs]
    params: list[np.ndarray] = []
    pos = 0
    for i in range(len(sizes) - 1):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        n = fan_in * fan_out
        scale = 1.0 / math.sqrt(fan_in)
        W = (2.0 * u[pos:pos + n] - 1.0).reshape(fan_in, fan_out) * scale
        pos += n
        params.append(W)
        params.append(np.zeros(fan_out))
    return params


def mlp_forward(params: list[np.ndarray], X: np.ndarray):
    """Tanh hidden layers, linear output. Returns (out, cache)."""
    h = X
    cache = [X]
    n_layers = len(params) // 2
    for i in range(n_layers):
        z = h @ params[2 * i] + params[2 * i + 1]
        if i < n_layers - 1:
            h = np.tanh(z)
        else:
            h = z
        cache.append(h)
    return h, cache


def mlp_backward(params: list[np.ndarray], cache: list[np.ndarray],
                 dout: np.ndarray) -> list[np.ndarray]:
    """Gradients in the same layout as params."""
    n_layers = len(params) // 2
    grads: list[np.ndarray] = [None] * len(params)
    delta = dout
    for i in range(n_layers - 1, -1, -1):
        h_in = cache[i]
        grads[2 * i] = h_in.T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            h_prev = cache[i]
            delta = (delta @ params[2 * i].T) * (1.0 - h_prev * h_prev)
    return grads


def flatten(params: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def unflatten(flat: np.ndarray, like: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    pos = 0
    for p in like:
        n = p.size
        out.append(flat[pos:pos + n].reshape(p.shape).copy())
        pos += n
    return out


class Adam:
    """Standard Adam ascent steps on a list of arrays."""

    def __init__(self, shapes, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p += self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


class Sgd:
    """Plain gradient ascent at a fixed rate."""

    def __init__(self, shapes, lr: float):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p += self.lr * g
