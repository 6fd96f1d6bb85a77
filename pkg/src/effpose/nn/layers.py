"""Dense, batch-normalization and sigmoid layers with explicit
backpropagation, plus the Adam update rule.

Everything is plain float64 numpy. Layers cache what their backward
pass needs; parameters and gradients are exposed as (name, value,
grad) triples so the optimizer and serializer stay generic.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


class Dense:
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        limit = np.sqrt(6.0 / (n_in + n_out))
        self.W = rng.uniform(-limit, limit, size=(n_in, n_out))
        self.b = np.zeros(n_out)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._x = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if train:
            self._x = x
        return x @ self.W + self.b

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.dW = self._x.T @ dy
        self.db = dy.sum(axis=0)
        return dy @ self.W.T

    def params(self):
        return [("W", self.W, self.dW), ("b", self.b, self.db)]

    def weight_arrays(self):
        # arrays the L1 penalty applies to
        return [(self.W, self.dW)]


class BatchNorm:
    def __init__(self, n: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = np.ones(n)
        self.beta = np.zeros(n)
        self.running_mean = np.zeros(n)
        self.running_var = np.ones(n)
        self.momentum = momentum
        self.eps = eps
        self.dgamma = np.zeros(n)
        self.dbeta = np.zeros(n)
        self._cache = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if train:
            mu = x.mean(axis=0)
            var = x.var(axis=0)
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mu) * inv_std
            self._cache = (xhat, inv_std, x.shape[0])
            m = x.shape[0]
            unbiased = var * m / max(m - 1, 1)
            self.running_mean = ((1 - self.momentum) * self.running_mean
                                 + self.momentum * mu)
            self.running_var = ((1 - self.momentum) * self.running_var
                                + self.momentum * unbiased)
        else:
            xhat = (x - self.running_mean) / np.sqrt(self.running_var + self.eps)
        return self.gamma * xhat + self.beta

    def backward(self, dy: np.ndarray) -> np.ndarray:
        xhat, inv_std, m = self._cache
        self.dgamma = (dy * xhat).sum(axis=0)
        self.dbeta = dy.sum(axis=0)
        dxhat = dy * self.gamma
        # standard batch-norm gradient through the batch statistics
        return (inv_std / m) * (
            m * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))

    def params(self):
        return [("gamma", self.gamma, self.dgamma),
                ("beta", self.beta, self.dbeta)]

    def state_arrays(self):
        # non-trained state that still must be serialized
        return [("running_mean", self.running_mean),
                ("running_var", self.running_var)]


class Sigmoid:
    def __init__(self):
        self._out = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        out = expit(x)
        if train:
            self._out = out
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._out * (1.0 - self._out)

    def params(self):
        return []


class Adam:
    """Adam over a fixed parameter list, states keyed by position."""

    def __init__(self, param_triples, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.triples = list(param_triples)
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(v) for _, v, _ in self.triples]
        self.v = [np.zeros_like(v) for _, v, _ in self.triples]
        self.t = 0

    def step(self, grads) -> None:
        """Apply one update; ``grads`` aligns with the parameter list."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for i, ((_, value, _), g) in enumerate(zip(self.triples, grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            m_hat = self.m[i] / bias1
            v_hat = self.v[i] / bias2
            value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
