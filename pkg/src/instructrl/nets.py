"""Small dense networks with hand-written backprop, plus Adam.

Everything runs in float64 numpy. Layers are stored as a flat parameter list
[W0, b0, W1, b1, ...] with W shaped (n_in, n_out); hidden layers use ReLU and
orthogonal initialization (gain sqrt(2) hidden, configurable on the output).
"""

from __future__ import annotations

import numpy as np


def orthogonal(n_in: int, n_out: int, gain: float, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((n_in, n_out))
    transpose = n_in < n_out
    if transpose:
        a = a.T
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if transpose:
        q = q.T
    return np.ascontiguousarray(gain * q)


class MLP:
    def __init__(self, sizes: list[int], rng: np.random.Generator, out_gain: float = 1.0):
        self.sizes = list(sizes)
        self.params: list[np.ndarray] = []
        last = len(sizes) - 2
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            gain = out_gain if i == last else np.sqrt(2.0)
            self.params.append(orthogonal(a, b, gain, rng))
            self.params.append(np.zeros(b))

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns (output, activations); activations[i] feeds layer i."""
        acts = [x]
        h = x
        for i in range(self.n_layers):
            z = h @ self.params[2 * i] + self.params[2 * i + 1]
            h = z if i == self.n_layers - 1 else np.maximum(z, 0.0)
            acts.append(h)
        return h, acts

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, acts: list[np.ndarray], dout: np.ndarray) -> list[np.ndarray]:
        """Gradient of a scalar loss w.r.t. params, given d loss / d output."""
        grads: list[np.ndarray] = [np.empty(0)] * len(self.params)
        dh = dout
        for i in reversed(range(self.n_layers)):
            dz = dh if i == self.n_layers - 1 else dh * (acts[i + 1] > 0)
            grads[2 * i] = acts[i].T @ dz
            grads[2 * i + 1] = dz.sum(axis=0)
            dh = dz @ self.params[2 * i].T
        return grads


class Adam:
    def __init__(
        self,
        params: list[np.ndarray],
        lr: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
