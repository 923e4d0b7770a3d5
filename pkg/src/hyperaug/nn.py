"""Minimal deterministic dense-network numerics.

Plain numpy layers with exact analytic backprop, BCE/CE losses and the
bias-corrected ADAM update. Everything is float64 and seeded; no autodiff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ShapeError, StateError


def _as_batch(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise ShapeError(f"expected 1-D or 2-D input, got shape {x.shape}")


# ---------------------------------------------------------------- activations

def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


_ACTIVATIONS = {
    "tanh": np.tanh,
    "relu": lambda x: np.maximum(x, 0.0),
    "sigmoid": sigmoid,
}


def activation(kind: str, x):
    """Elementwise activation; kind is one of tanh, relu, sigmoid."""
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation kind {kind!r}") from None
    return fn(np.asarray(x, dtype=np.float64))


# -------------------------------------------------------------------- layers

class Layer:
    """Forward/backward pair with cached intermediates."""

    def forward(self, x, train: bool = True):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def parameters(self) -> list:
        return []

    def gradients(self) -> list:
        return []


class DenseLayer(Layer):
    def __init__(self, in_dim: int, out_dim: int, rng=None):
        if in_dim < 1 or out_dim < 1:
            raise ShapeError("layer dimensions must be >= 1")
        if rng is None:
            rng = np.random.default_rng(0)
        limit = 1.0 / np.sqrt(in_dim)
        self.weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
        self.bias = np.zeros(out_dim)
        self.grad_weights = np.zeros_like(self.weights)
        self.grad_bias = np.zeros_like(self.bias)
        self._x = None

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]

    def forward(self, x, train: bool = True):
        x, _ = _as_batch(x)
        if x.shape[1] != self.in_dim:
            raise ShapeError(
                f"dense layer expects input dim {self.in_dim}, got {x.shape[1]}")
        self._x = x
        return x @ self.weights.T + self.bias

    def backward(self, grad):
        if self._x is None:
            raise StateError("backward called before forward")
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != (self._x.shape[0], self.out_dim):
            raise ShapeError(
                f"upstream grad shape {grad.shape} != {(self._x.shape[0], self.out_dim)}")
        self.grad_weights = grad.T @ self._x
        self.grad_bias = grad.sum(axis=0)
        return grad @ self.weights

    def parameters(self):
        return [self.weights, self.bias]

    def gradients(self):
        return [self.grad_weights, self.grad_bias]


def dense_forward(layer: DenseLayer, batch):
    """Affine map weights @ x + bias applied row-wise; accepts a single vector."""
    arr, was_vector = _as_batch(batch)
    out = layer.forward(arr, train=False)
    return out[0] if was_vector else out


class BatchNormLayer(Layer):
    def __init__(self, dim: int, momentum: float = 0.1, epsilon: float = 1e-5):
        if not 0.0 < momentum <= 1.0:
            raise ValueError("momentum must be in (0, 1]")
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.gamma = np.ones(dim)
        self.beta = np.zeros(dim)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum
        self.epsilon = epsilon
        self.grad_gamma = np.zeros(dim)
        self.grad_beta = np.zeros(dim)
        self._cache = None

    def forward(self, x, train: bool = True):
        x, _ = _as_batch(x)
        if x.shape[1] != self.gamma.shape[0]:
            raise ShapeError(
                f"batchnorm expects dim {self.gamma.shape[0]}, got {x.shape[1]}")
        if train:
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            inv_std = 1.0 / np.sqrt(var + self.epsilon)
            x_hat = (x - mean) * inv_std
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
            self._cache = (x_hat, inv_std)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.epsilon)
            x_hat = (x - self.running_mean) * inv_std
            self._cache = (x_hat, inv_std)
        return self.gamma * x_hat + self.beta

    def backward(self, grad):
        if self._cache is None:
            raise StateError("backward called before forward")
        x_hat, inv_std = self._cache
        n = x_hat.shape[0]
        self.grad_gamma = (grad * x_hat).sum(axis=0)
        self.grad_beta = grad.sum(axis=0)
        # batch statistics are functions of the input; standard batchnorm backward
        g = grad * self.gamma
        return inv_std / n * (n * g - g.sum(axis=0) - x_hat * (g * x_hat).sum(axis=0))

    def parameters(self):
        return [self.gamma, self.beta]

    def gradients(self):
        return [self.grad_gamma, self.grad_beta]


class DropoutLayer(Layer):
    """Inverted dropout: eval mode is a pure identity."""

    def __init__(self, rate: float, seed: int = 0):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self._rng = np.random.default_rng(seed)
        self._mask = None

    def forward(self, x, train: bool = True):
        x, _ = _as_batch(x)
        if not train or self.rate == 0.0:
            self._mask = None
            self._seen_forward = True
            return x
        keep = 1.0 - self.rate
        self._mask = (self._rng.random(x.shape) < keep) / keep
        self._seen_forward = True
        return x * self._mask

    def backward(self, grad):
        if not getattr(self, "_seen_forward", False):
            raise StateError("backward called before forward")
        if self._mask is None:
            return grad
        return grad * self._mask


class TanhLayer(Layer):
    def __init__(self):
        self._out = None

    def forward(self, x, train: bool = True):
        x, _ = _as_batch(x)
        self._out = np.tanh(x)
        return self._out

    def backward(self, grad):
        if self._out is None:
            raise StateError("backward called before forward")
        return grad * (1.0 - self._out ** 2)


class ReluLayer(Layer):
    def __init__(self):
        self._x = None

    def forward(self, x, train: bool = True):
        x, _ = _as_batch(x)
        self._x = x
        return np.maximum(x, 0.0)

    def backward(self, grad):
        if self._x is None:
            raise StateError("backward called before forward")
        return grad * (self._x > 0)


ACTIVATION_LAYERS = {"tanh": TanhLayer, "relu": ReluLayer}


class Sequential(Layer):
    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x, train: bool = True):
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def gradients(self):
        return [g for layer in self.layers for g in layer.gradients()]


def backward(network: Sequential, upstream_grad):
    """Exact analytic gradients for every parameter plus the input gradient.

    Requires a preceding forward pass; dropout masks and batch-norm statistics
    are those cached by that pass.
    """
    input_grad = network.backward(np.asarray(upstream_grad, dtype=np.float64))
    return network.gradients(), input_grad


# -------------------------------------------------------------------- losses

BCE_WITH_SIGMOID = "binary_cross_entropy_with_sigmoid"
CE_WITH_SOFTMAX = "cross_entropy_with_softmax"


def bce_with_logits(logits, targets):
    """Mean binary cross entropy in logit space; stable for |logit| <= 100."""
    z = np.asarray(logits, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if z.shape != t.shape:
        raise ShapeError(f"logits shape {z.shape} != targets shape {t.shape}")
    # softplus(z) - z*t, computed as max(z,0) - z*t + log1p(exp(-|z|))
    per_elem = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))
    loss = per_elem.mean()
    grad = (sigmoid(z) - t) / z.size
    return loss, grad


def ce_with_softmax(logits, targets):
    """Mean softmax cross entropy; targets are one-hot rows or class indices."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ShapeError("CE expects a 2-D logits matrix")
    t = np.asarray(targets)
    if t.ndim == 1:
        if t.shape[0] != z.shape[0]:
            raise ShapeError("class index vector length != batch size")
        onehot = np.zeros_like(z)
        onehot[np.arange(z.shape[0]), t.astype(int)] = 1.0
        t = onehot
    elif t.shape != z.shape:
        raise ShapeError(f"targets shape {t.shape} != logits shape {z.shape}")
    t = t.astype(np.float64)
    z_shift = z - z.max(axis=1, keepdims=True)
    log_probs = z_shift - np.log(np.exp(z_shift).sum(axis=1, keepdims=True))
    n = z.shape[0]
    loss = -(t * log_probs).sum() / n
    grad = (np.exp(log_probs) - t) / n
    return loss, grad


def loss_and_gradient(kind: str, logits, targets):
    """Loss (mean over batch) and its exact gradient w.r.t. the logits."""
    if kind == BCE_WITH_SIGMOID:
        return bce_with_logits(logits, targets)
    if kind == CE_WITH_SOFTMAX:
        return ce_with_softmax(logits, targets)
    raise ValueError(f"unknown loss kind {kind!r}")


# ---------------------------------------------------------------------- ADAM

@dataclass
class AdamState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: np.ndarray | None = None
    second_moment: np.ndarray | None = None


def adam_step(state: AdamState, params, grads):
    """One bias-corrected ADAM update, in place. Returns (params, state)."""
    grads = np.asarray(grads, dtype=np.float64)
    if not np.all(np.isfinite(grads)):
        raise NumericError(f"non-finite gradient at step {state.step_count + 1}")
    if state.first_moment is None:
        state.first_moment = np.zeros_like(params)
        state.second_moment = np.zeros_like(params)
    if grads.shape != params.shape:
        raise ShapeError(f"grads shape {grads.shape} != params shape {params.shape}")
    state.step_count += 1
    b1, b2 = state.beta1, state.beta2
    state.first_moment = b1 * state.first_moment + (1 - b1) * grads
    state.second_moment = b2 * state.second_moment + (1 - b2) * grads ** 2
    m_hat = state.first_moment / (1 - b1 ** state.step_count)
    v_hat = state.second_moment / (1 - b2 ** state.step_count)
    params -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state


class Adam:
    """ADAM over a list of parameter tensors (one AdamState each)."""

    def __init__(self, params, learning_rate=0.001, beta1=0.9, beta2=0.999,
                 epsilon=1e-8):
        self.params = list(params)
        self.states = [
            AdamState(learning_rate=learning_rate, beta1=beta1, beta2=beta2,
                      epsilon=epsilon)
            for _ in self.params
        ]

    def step(self, grads):
        grads = list(grads)
        if len(grads) != len(self.params):
            raise ShapeError("gradient list length != parameter list length")
        for p, g, s in zip(self.params, grads, self.states):
            adam_step(s, p, g)
