"""Dense ReLU networks with hand-written backprop and an SGD optimizer.

Everything runs in float64. Parameters are plain numpy arrays held in
dataclasses; functions return new objects instead of mutating their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

CLAMP_EPS = 1e-12


@dataclass
class DenseNet:
    """Fully connected net: ReLU on hidden layers, softmax on the output.

    ``weights[i]`` has shape ``(layer_dims[i], layer_dims[i + 1])``.
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if len(self.layer_dims) < 2:
            raise ShapeError("need at least input and output dims")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("one weight matrix and bias per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[i], self.layer_dims[i + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ShapeError(f"layer {i}: weight {w.shape}, bias {b.shape}, expected {expected}")

    @property
    def n_classes(self) -> int:
        return self.layer_dims[-1]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "DenseNet":
        return DenseNet(self.layer_dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @classmethod
    def zeros_like(cls, net: DenseNet) -> "Gradients":
        return cls([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases])


def init_net(layer_dims, rng: np.random.Generator | int) -> DenseNet:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases."""
    rng = np.random.default_rng(rng)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return DenseNet(tuple(layer_dims), weights, biases)


def zero_net(layer_dims) -> DenseNet:
    return DenseNet(
        tuple(layer_dims),
        [np.zeros((a, b)) for a, b in zip(layer_dims[:-1], layer_dims[1:])],
        [np.zeros(b) for b in layer_dims[1:]],
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ForwardCache:
    activations: list[np.ndarray]  # inputs to each layer; activations[0] is the batch
    pre_acts: list[np.ndarray]  # hidden pre-activations, for the ReLU mask
    probs: np.ndarray = field(repr=False)


def forward_cached(net: DenseNet, batch: np.ndarray) -> ForwardCache:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != net.layer_dims[0]:
        raise ShapeError(f"batch shape {batch.shape} does not match input dim {net.layer_dims[0]}")
    acts, pres = [batch], []
    h = batch
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        if i == last:
            return ForwardCache(acts, pres, softmax(z))
        pres.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    raise AssertionError("unreachable")


def forward(net: DenseNet, batch: np.ndarray) -> np.ndarray:
    """Class probabilities, one row per input row."""
    return forward_cached(net, batch).probs


def softmax_backward(probs: np.ndarray, grad_probs: np.ndarray) -> np.ndarray:
    """Map dL/dp to dL/dlogits through the softmax Jacobian."""
    return probs * (grad_probs - np.sum(grad_probs * probs, axis=1, keepdims=True))


def backward(net: DenseNet, batch: np.ndarray, grad_probs: np.ndarray, cache: ForwardCache | None = None) -> Gradients:
    """Parameter gradients given the upstream gradient on the output probabilities."""
    if cache is None:
        cache = forward_cached(net, batch)
    grad_probs = np.asarray(grad_probs, dtype=np.float64)
    if grad_probs.shape != cache.probs.shape:
        raise ShapeError(f"upstream gradient shape {grad_probs.shape} != output shape {cache.probs.shape}")
    delta = softmax_backward(cache.probs, grad_probs)
    n_layers = len(net.weights)
    gw: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for i in range(n_layers - 1, -1, -1):
        gw[i] = cache.activations[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (cache.pre_acts[i - 1] > 0)
    return Gradients(gw, gb)


def cross_entropy_loss(probs: np.ndarray, labels: np.ndarray, clamp_eps: float = CLAMP_EPS) -> float:
    """Mean negative log-likelihood of ``labels`` under ``probs``."""
    picked = _pick(probs, labels)
    return float(-np.mean(np.log(np.maximum(picked, clamp_eps))))


def cross_entropy_grad(probs: np.ndarray, labels: np.ndarray, clamp_eps: float = CLAMP_EPS) -> np.ndarray:
    """d(mean CE)/d probs. Zero where the clamp is active."""
    picked = _pick(probs, labels)
    n = probs.shape[0]
    grad = np.zeros_like(probs)
    g = np.where(picked > clamp_eps, -1.0 / (n * np.maximum(picked, clamp_eps)), 0.0)
    grad[np.arange(n), labels] = g
    return grad


def entropy(probs: np.ndarray, clamp_eps: float = CLAMP_EPS) -> np.ndarray | float:
    """Shannon entropy (nats) along the last axis, probabilities clamped below."""
    q = np.maximum(np.asarray(probs, dtype=np.float64), clamp_eps)
    h = -np.sum(q * np.log(q), axis=-1)
    return float(h) if np.ndim(h) == 0 else h


def entropy_grad(probs: np.ndarray, clamp_eps: float = CLAMP_EPS) -> np.ndarray:
    """Elementwise dH/dp for the clamped entropy."""
    probs = np.asarray(probs, dtype=np.float64)
    q = np.maximum(probs, clamp_eps)
    return np.where(probs > clamp_eps, -(np.log(q) + 1.0), 0.0)


def _pick(probs, labels):
    labels = np.asarray(labels)
    if labels.shape != (probs.shape[0],):
        raise ShapeError(f"labels shape {labels.shape} does not match {probs.shape[0]} rows")
    if labels.size and (labels.min() < 0 or labels.max() >= probs.shape[1]):
        raise IndexError(f"label out of range [0, {probs.shape[1]})")
    return probs[np.arange(probs.shape[0]), labels]


# -- optimizer ---------------------------------------------------------------


@dataclass
class SgdConfig:
    """SGD with heavy-ball momentum and coupled L2 weight decay.

    ``lr_schedule`` is a list of ``(epoch, multiplier)``; every multiplier whose
    epoch has been reached is applied cumulatively to ``learning_rate``.
    """

    learning_rate: float = 0.2
    momentum: float = 0.9
    weight_decay: float = 3e-4
    lr_schedule: list[tuple[int, float]] = field(default_factory=lambda: [(10, 0.4), (25, 0.4), (40, 0.4)])

    def __post_init__(self):
        self.lr_schedule = [(int(e), float(m)) for e, m in self.lr_schedule]
        errs = []
        if not self.learning_rate >= 0:
            errs.append(f"learning_rate must be non-negative, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            errs.append(f"momentum must be in [0, 1), got {self.momentum}")
        if not self.weight_decay >= 0:
            errs.append(f"weight_decay must be non-negative, got {self.weight_decay}")
        epochs = [e for e, _ in self.lr_schedule]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            errs.append("lr_schedule epochs must be strictly increasing")
        if any(m <= 0 for _, m in self.lr_schedule):
            errs.append("lr_schedule multipliers must be positive")
        if errs:
            raise ConfigError(errs)

    def lr_at(self, epoch: int) -> float:
        lr = self.learning_rate
        for e, mult in self.lr_schedule:
            if epoch >= e:
                lr *= mult
        return lr


@dataclass
class SgdState:
    velocity: list[np.ndarray]

    @classmethod
    def zeros(cls, net: DenseNet) -> "SgdState":
        return cls([np.zeros_like(p) for p in net.params()])


def sgd_step(net: DenseNet, grads: Gradients, state: SgdState, config: SgdConfig, epoch: int):
    """One momentum step; returns ``(new_net, new_state)``."""
    params, gparams = net.params(), grads.params()
    if len(gparams) != len(params):
        raise ShapeError("gradient structure does not match network")
    lr = config.lr_at(epoch)
    new_params, new_vel = [], []
    for idx, (p, g, v) in enumerate(zip(params, gparams, state.velocity)):
        if g.shape != p.shape:
            raise ShapeError(f"parameter {idx}: gradient shape {g.shape} != {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter {idx}")
        v = config.momentum * v + g + config.weight_decay * p
        new_vel.append(v)
        new_params.append(p - lr * v)
    new_net = DenseNet(net.layer_dims, new_params[0::2], new_params[1::2])
    return new_net, SgdState(new_vel)
