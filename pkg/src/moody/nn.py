"""Small float64 feed-forward network with hand-written backprop."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np


class Network:
    """``n_in -> hidden... -> n_out`` tanh MLP with an optional scalar value head.

    The value head reads the last hidden layer, so actor and critic share a
    trunk. Parameters are held as a flat list ``[W1, b1, ..., Wout, bout,
    (Wv, bv)]`` with weights shaped ``(fan_in, fan_out)``.
    """

    def __init__(self, n_in: int, hidden: Sequence[int], n_out: int,
                 value_head: bool = False, seed: int = 0, out_scale: float = 0.01):
        self.n_in = n_in
        self.hidden = tuple(int(h) for h in hidden)
        self.n_out = n_out
        self.value_head = value_head
        rng = np.random.default_rng(seed)
        sizes = (n_in,) + self.hidden
        self.params: list[np.ndarray] = []
        for a, b in zip(sizes[:-1], sizes[1:]):
            self.params += [rng.normal(0.0, 1.0 / np.sqrt(a), (a, b)), np.zeros(b)]
        last = sizes[-1]
        self.params += [rng.normal(0.0, out_scale / np.sqrt(last), (last, n_out)), np.zeros(n_out)]
        if value_head:
            self.params += [rng.normal(0.0, out_scale / np.sqrt(last), (last, 1)), np.zeros(1)]

    @property
    def n_trunk(self) -> int:
        return 2 * len(self.hidden)

    def arch(self) -> dict:
        return {"n_in": self.n_in, "hidden": list(self.hidden), "n_out": self.n_out,
                "value_head": self.value_head}

    # -- forward / backward -------------------------------------------------

    def forward(self, x: np.ndarray):
        """Return ``(outputs, values, cache)`` for a batch ``x`` of shape (B, n_in).

        ``values`` is None without a value head.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ValueError(f"expected input of shape (B, {self.n_in}), got {x.shape}")
        acts = [x]
        h = x
        for i in range(len(self.hidden)):
            W, b = self.params[2 * i], self.params[2 * i + 1]
            h = np.tanh(h @ W + b)
            acts.append(h)
        k = self.n_trunk
        out = h @ self.params[k] + self.params[k + 1]
        values = None
        if self.value_head:
            values = (h @ self.params[k + 2] + self.params[k + 3])[:, 0]
        return out, values, acts

    def backward(self, acts, d_out: np.ndarray, d_values: Optional[np.ndarray] = None):
        """Gradients of a scalar loss w.r.t. every parameter, given its output gradients."""
        grads = [None] * len(self.params)
        k = self.n_trunk
        h = acts[-1]
        grads[k] = h.T @ d_out
        grads[k + 1] = d_out.sum(axis=0)
        dh = d_out @ self.params[k].T
        if self.value_head:
            dv = np.zeros((h.shape[0], 1)) if d_values is None else np.asarray(d_values)[:, None]
            grads[k + 2] = h.T @ dv
            grads[k + 3] = dv.sum(axis=0)
            dh = dh + dv @ self.params[k + 2].T
        for i in reversed(range(len(self.hidden))):
            h = acts[i + 1]
            dz = dh * (1.0 - h * h)
            grads[2 * i] = acts[i].T @ dz
            grads[2 * i + 1] = dz.sum(axis=0)
            if i:
                dh = dz @ self.params[2 * i].T
        return grads

    # -- flat parameter access ---------------------------------------------

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat: np.ndarray):
        flat = np.asarray(flat, dtype=np.float64)
        n = sum(p.size for p in self.params)
        if flat.shape != (n,):
            raise ValueError(f"expected {n} parameters, got {flat.shape}")
        i = 0
        for p in self.params:
            p[...] = flat[i:i + p.size].reshape(p.shape)
            i += p.size

    def copy(self) -> "Network":
        clone = Network.__new__(Network)
        clone.__dict__.update(self.__dict__)
        clone.params = [p.copy() for p in self.params]
        return clone


class SGDMomentum:
    def __init__(self, params: list[np.ndarray], lr: float, momentum: float = 0.9,
                 max_grad_norm: Optional[float] = 10.0):
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.max_grad_norm = max_grad_norm
        self.velocity = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]):
        if self.max_grad_norm is not None:
            norm = np.sqrt(sum(float((g * g).sum()) for g in grads))
            if norm > self.max_grad_norm:
                grads = [g * (self.max_grad_norm / norm) for g in grads]
        for p, v, g in zip(self.params, self.velocity, grads):
            v *= self.momentum
            v -= self.lr * g
            p += v
