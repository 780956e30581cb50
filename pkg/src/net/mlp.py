#!/usr/bin/env python3
"""
Fully connected ReLU network

Forward pass and exact reverse-mode gradients with respect to the input.
The network emits raw logits; temperature-scaled softmax lives with the
detector. All arithmetic is float64.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from src.utils.errors import InputShapeError, ParameterError
from src.utils.rng import get_rng

logger = logging.getLogger(__name__)


@dataclass
class Mlp:
    """Dense network: ReLU on hidden layers, identity on the output layer"""
    layer_dims: List[int]
    weights: List[np.ndarray]  # weights[k] is (layer_dims[k+1], layer_dims[k])
    biases: List[np.ndarray]   # biases[k] has length layer_dims[k+1]

    def __post_init__(self):
        self.layer_dims = [int(dim) for dim in self.layer_dims]
        if len(self.layer_dims) < 2 or any(dim <= 0 for dim in self.layer_dims):
            raise ParameterError(f"Layer dims must be at least two positive integers, got {self.layer_dims}")
        if len(self.weights) != self.num_layers or len(self.biases) != self.num_layers:
            raise ParameterError(
                f"Expected {self.num_layers} weight matrices and bias vectors, "
                f"got {len(self.weights)} and {len(self.biases)}"
            )

        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in self.biases]

        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[k + 1], self.layer_dims[k])
            if w.shape != expected:
                raise ParameterError(f"Layer {k} weights have shape {w.shape}, expected {expected}")
            if b.shape != (self.layer_dims[k + 1],):
                raise ParameterError(f"Layer {k} bias has shape {b.shape}, expected ({self.layer_dims[k + 1]},)")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ParameterError(f"Layer {k} has non-finite parameters")

    @property
    def num_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def num_classes(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> 'Mlp':
        return Mlp(
            layer_dims=list(self.layer_dims),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def parameters_equal(self, other: 'Mlp') -> bool:
        """Bitwise parameter comparison"""
        if self.layer_dims != other.layer_dims:
            return False
        pairs = list(zip(self.weights, other.weights)) + list(zip(self.biases, other.biases))
        return all(a.tobytes() == b.tobytes() for a, b in pairs)


def init_mlp(layer_dims: Sequence[int], seed: int) -> Mlp:
    """
    Seeded uniform initialization in +-sqrt(6 / (fan_in + fan_out)) per layer,
    zero biases.
    """
    dims = [int(dim) for dim in layer_dims]
    if len(dims) < 2 or any(dim <= 0 for dim in dims):
        raise ParameterError(f"Layer dims must be at least two positive integers, got {dims}")

    rng = get_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(layer_dims=dims, weights=weights, biases=biases)


def _as_batch(model: Mlp, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise InputShapeError(f"Expected inputs of shape (n, {model.input_dim}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputShapeError("Inputs contain non-finite values")
    return X


def _as_vector(model: Mlp, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.input_dim:
        raise InputShapeError(f"Expected an input vector of length {model.input_dim}, got shape {x.shape}")
    return x


def forward_with_activations(model: Mlp, X: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Forward pass keeping every layer input.
    Returns (logits, activations) where activations[k] is the input to layer k.
    """
    X = _as_batch(model, X)
    activations = [X]
    h = X
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        if k < model.num_layers - 1:
            h = np.maximum(z, 0.0)
            activations.append(h)
        else:
            h = z
    return h, activations


def forward_batch(model: Mlp, X: np.ndarray) -> np.ndarray:
    """Logits for each row of X, shape (n, N)"""
    logits, _ = forward_with_activations(model, X)
    return logits


def forward(model: Mlp, x: np.ndarray) -> np.ndarray:
    """Logits f(x) for a single input vector"""
    return forward_batch(model, _as_vector(model, x)[None, :])[0]


def predict(model: Mlp, X: np.ndarray) -> np.ndarray:
    """Class predictions; np.argmax picks the lowest index on ties"""
    return np.argmax(forward_batch(model, X), axis=1)


def backward_to_input(model: Mlp, activations: List[np.ndarray], grad_logits: np.ndarray) -> np.ndarray:
    """Propagate d(objective)/d(logits) back to d(objective)/d(input)"""
    g = grad_logits
    for k in range(model.num_layers - 1, -1, -1):
        g = g @ model.weights[k]
        if k > 0:
            g = g * (activations[k] > 0.0)
    return g


def input_gradient_batch(model: Mlp, X: np.ndarray, temperature: float) -> np.ndarray:
    """
    Row-wise gradient of log S_yhat(x; T) with respect to x, where yhat is
    the argmax of the logits at x.
    """
    if not temperature > 0:
        raise ParameterError(f"Temperature must be positive, got {temperature}")

    logits, activations = forward_with_activations(model, X)
    probs = softmax(logits / temperature, axis=1)
    top = np.argmax(logits, axis=1)

    # d log S_yhat / d f = (onehot(yhat) - S) / T
    grad_logits = -probs
    grad_logits[np.arange(len(top)), top] += 1.0
    grad_logits /= temperature

    return backward_to_input(model, activations, grad_logits)


def input_gradient(model: Mlp, x: np.ndarray, temperature: float) -> np.ndarray:
    """Gradient of log S_yhat(x; T) with respect to a single input vector"""
    return input_gradient_batch(model, _as_vector(model, x)[None, :], temperature)[0]


def log_top_softmax(model: Mlp, x: np.ndarray, temperature: float) -> float:
    """log S_yhat(x; T); the quantity input_gradient differentiates"""
    logits = forward(model, x) / temperature
    return float(logits[int(np.argmax(logits))] - logsumexp(logits))
