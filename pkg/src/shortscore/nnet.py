"""Feedforward softmax classifier trained with full-batch Adam.

Used twice in the stacking ensemble: a two-hidden-layer base model over the
sentence features and a zero- or one-hidden-layer final model over the base
models' class probabilities. Hidden activation is ReLU; one optimizer step is
taken per full-batch iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ValidationError
from .seeding import spawn_rng

N_CLASSES = 2


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def parameters(self) -> list[np.ndarray]:
        """Interleaved [W0, b0, W1, b1, ...] view of the parameters."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def with_parameters(self, params: list[np.ndarray]) -> "MlpModel":
        weights = [params[2 * i] for i in range(len(self.weights))]
        biases = [params[2 * i + 1] for i in range(len(self.biases))]
        return MlpModel(self.layer_sizes, weights, biases)

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init_like(cls, params: list[np.ndarray], **kwargs) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


@dataclass(frozen=True)
class TrainSpec:
    learning_rate: float
    iterations: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.iterations < 1:
            raise ValidationError(f"iterations must be >= 1, got {self.iterations}")


def init_mlp(layer_sizes, seed: int) -> MlpModel:
    """Glorot-uniform weights, zero biases; deterministic in ``seed``."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValidationError(f"invalid layer sizes {sizes}")
    if sizes[-1] != N_CLASSES:
        raise ValidationError(f"output layer must have {N_CLASSES} units, got {sizes[-1]}")
    rng = spawn_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases)


def _forward(model: MlpModel, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Hidden activations plus output log-probabilities."""
    acts = [X]
    a = X
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        if i < last:
            a = np.maximum(z, 0.0)
            acts.append(a)
        else:
            z = z - z.max(axis=1, keepdims=True)
            logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
            return acts, logp
    raise AssertionError("unreachable")


def _check_input(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.layer_sizes[0]:
        raise ValidationError(
            f"input shape {X.shape} incompatible with input size {model.layer_sizes[0]}"
        )
    return X


def loss_and_grad(model: MlpModel, X: np.ndarray, y: np.ndarray):
    """Mean softmax cross-entropy and its exact gradients.

    Returns ``(loss, grads)`` with grads in the ``parameters()`` layout.
    """
    X = _check_input(model, X)
    y = np.asarray(y, dtype=int)
    if not np.all(np.isfinite(X)):
        raise ValidationError("non-finite values in input matrix")
    n = X.shape[0]
    acts, logp = _forward(model, X)
    loss = -float(logp[np.arange(n), y].mean())

    probs = np.exp(logp)
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y] = 1.0
    delta = (probs - onehot) / n

    grads: list[np.ndarray] = []
    for i in range(len(model.weights) - 1, -1, -1):
        grads.append(delta.sum(axis=0))          # db_i
        grads.append(acts[i].T @ delta)          # dW_i
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0)
    grads.reverse()
    return loss, grads


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState, lr: float
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    t = state.t + 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(new_m, new_v, t, b1, b2, eps)


def train_mlp(model: MlpModel, X: np.ndarray, y: np.ndarray, spec: TrainSpec) -> MlpModel:
    """Run ``spec.iterations`` full-batch Adam steps; the input model is not
    modified. Raises DivergenceError on a non-finite loss."""
    trained = model.copy()
    params = trained.parameters()
    state = AdamState.init_like(params)
    for it in range(spec.iterations):
        loss, grads = loss_and_grad(trained, X, y)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite loss at iteration {it}")
        params, state = adam_step(params, grads, state, spec.learning_rate)
        trained = trained.with_parameters(params)
    return trained


def predict_proba(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Per-row softmax class distribution, shape (n, 2)."""
    X = _check_input(model, X)
    _, logp = _forward(model, X)
    return np.exp(logp)
