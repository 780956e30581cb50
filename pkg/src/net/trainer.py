#!/usr/bin/env python3
"""
Mini-batch trainer for the dense network

Softmax cross-entropy at T=1, optimized with Adam or SGD with Nesterov
momentum and a step learning-rate schedule. Shuffling and initialization
both derive from TrainConfig.seed, so identical inputs give a bit-identical model.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from src.datasets.containers import LabeledDataset
from src.net.mlp import Mlp, forward_with_activations, init_mlp, predict
from src.utils.errors import DataError, ParameterError
from src.utils.rng import spawn_rngs

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    """Optimizer and schedule settings"""
    optimizer: str = 'adam'          # 'adam' or 'sgd_nesterov'
    epochs: int = 30
    batch_size: int = 128
    learning_rate: float = 1e-3
    momentum: float = 0.9            # sgd_nesterov only
    lr_drop_points: List[float] = field(default_factory=list)  # fractions of training, LR /10 at each
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in ('adam', 'sgd_nesterov'):
            raise ParameterError(f"Unknown optimizer: {self.optimizer}")
        if self.epochs < 0:
            raise ParameterError("Epochs must be non-negative")
        if self.batch_size <= 0:
            raise ParameterError("Batch size must be positive")
        if not self.learning_rate > 0:
            raise ParameterError("Learning rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ParameterError("Momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ParameterError("Weight decay must be non-negative")
        points = list(self.lr_drop_points)
        if any(not 0.0 < p < 1.0 for p in points):
            raise ParameterError(f"LR drop points must lie in (0, 1), got {points}")
        if any(b <= a for a, b in zip(points, points[1:])):
            raise ParameterError(f"LR drop points must be strictly increasing, got {points}")

    @classmethod
    def sgd_default(cls, **overrides) -> 'TrainConfig':
        """SGD with Nesterov momentum 0.9, LR 0.1 dropped at 50% and 75% of training"""
        values = dict(optimizer='sgd_nesterov', learning_rate=0.1, momentum=0.9,
                      lr_drop_points=[0.5, 0.75])
        values.update(overrides)
        return cls(**values)

    def learning_rate_at(self, epoch: int) -> float:
        drops = sum(1 for p in self.lr_drop_points if epoch >= p * self.epochs)
        return self.learning_rate * (0.1 ** drops)


class MlpTrainer:
    """Trains a dense network and keeps a per-epoch history"""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.history: List[Dict] = []

    def _validate(self, data: LabeledDataset, dims: Sequence[int]):
        if data.num_samples == 0:
            raise DataError(f"Dataset '{data.name}' is empty")
        if dims[0] != data.input_dim:
            raise DataError(f"First layer dim {dims[0]} does not match input dim {data.input_dim}")
        labels = data.labels
        if labels.min() < 0 or labels.max() >= dims[-1]:
            raise DataError(f"Labels must lie in [0, {dims[-1]}), found range [{labels.min()}, {labels.max()}]")

    def _loss_and_grads(self, model: Mlp, X: np.ndarray, y: np.ndarray):
        logits, activations = forward_with_activations(model, X)
        n = X.shape[0]
        loss = float(np.mean(logsumexp(logits, axis=1) - logits[np.arange(n), y]))

        grad = softmax(logits, axis=1)
        grad[np.arange(n), y] -= 1.0
        grad /= n

        grad_w = [None] * model.num_layers
        grad_b = [None] * model.num_layers
        for k in range(model.num_layers - 1, -1, -1):
            grad_w[k] = grad.T @ activations[k]
            grad_b[k] = grad.sum(axis=0)
            if k > 0:
                grad = (grad @ model.weights[k]) * (activations[k] > 0.0)

        if self.config.weight_decay > 0:
            for k in range(model.num_layers):
                grad_w[k] = grad_w[k] + self.config.weight_decay * model.weights[k]
        return loss, grad_w, grad_b

    def initialize(self, dims: Sequence[int]) -> Mlp:
        """The starting point fit uses for this config"""
        init_rng, _ = spawn_rngs(self.config.seed, 2)
        return init_mlp(dims, int(init_rng.integers(0, 2 ** 63)))

    def fit(self, data: LabeledDataset, dims: Sequence[int],
            test_data: Optional[LabeledDataset] = None) -> Mlp:
        """Train a fresh model; 0 epochs returns the initialization unchanged"""
        dims = [int(dim) for dim in dims]
        self._validate(data, dims)
        config = self.config

        model = self.initialize(dims)
        _, shuffle_rng = spawn_rngs(config.seed, 2)
        params = model.weights + model.biases

        # Optimizer state
        first = [np.zeros_like(p) for p in params]
        second = [np.zeros_like(p) for p in params]
        step = 0

        X, y = data.inputs, data.labels
        n = data.num_samples
        self.history = []

        for epoch in range(config.epochs):
            lr = config.learning_rate_at(epoch)
            order = shuffle_rng.permutation(n)
            epoch_loss = 0.0

            for start in range(0, n, config.batch_size):
                batch = order[start:start + config.batch_size]
                loss, grad_w, grad_b = self._loss_and_grads(model, X[batch], y[batch])
                epoch_loss += loss * len(batch)
                grads = grad_w + grad_b
                step += 1

                for i, (p, g) in enumerate(zip(params, grads)):
                    if config.optimizer == 'adam':
                        first[i] = ADAM_BETA1 * first[i] + (1 - ADAM_BETA1) * g
                        second[i] = ADAM_BETA2 * second[i] + (1 - ADAM_BETA2) * g * g
                        m_hat = first[i] / (1 - ADAM_BETA1 ** step)
                        v_hat = second[i] / (1 - ADAM_BETA2 ** step)
                        p -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
                    else:
                        # Nesterov momentum (Sutskever formulation)
                        first[i] = config.momentum * first[i] - lr * g
                        p += config.momentum * first[i] - lr * g

            record = {
                'epoch': epoch + 1,
                'loss': epoch_loss / n,
                'accuracy': accuracy(model, data),
                'learning_rate': lr,
            }
            if test_data is not None:
                record['test_accuracy'] = accuracy(model, test_data)
            self.history.append(record)
            logger.info(
                f"📈 Epoch {epoch + 1}/{config.epochs}: loss {record['loss']:.4f}, "
                f"accuracy {record['accuracy']:.2%}, lr {lr:g}"
            )

        return model


def accuracy(model: Mlp, data: LabeledDataset) -> float:
    """Fraction of samples whose argmax class equals the label"""
    if data.num_samples == 0:
        raise DataError(f"Dataset '{data.name}' is empty")
    return float(np.mean(predict(model, data.inputs) == data.labels))


def train(data: LabeledDataset, dims: Sequence[int], config: TrainConfig) -> Mlp:
    """Train a model on data with the given layer dims"""
    return MlpTrainer(config).fit(data, dims)
