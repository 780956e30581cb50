#!/usr/bin/env python3
"""
ODIN out-of-distribution detector

Temperature-scaled softmax scoring plus gradient-sign input preprocessing:

    S_i(x; T) = exp(f_i(x)/T) / sum_j exp(f_j(x)/T)
    x~        = x - eps * sign(-grad_x log S_yhat(x; T))

An input is in-distribution when the top softmax score of x~ is strictly
above the threshold delta. With T=1 and eps=0 this is the plain maximum
softmax probability baseline.
"""

import logging
from dataclasses import dataclass, asdict
from enum import Enum
from typing import Dict

import numpy as np
from scipy.special import softmax

from src.net.mlp import Mlp, forward, forward_batch, input_gradient, input_gradient_batch
from src.utils.errors import InputShapeError, ParameterError

logger = logging.getLogger(__name__)


class Flag(str, Enum):
    IN_DISTRIBUTION = 'in_distribution'
    OUT_OF_DISTRIBUTION = 'out_of_distribution'


@dataclass(frozen=True)
class OdinParams:
    """Detector configuration: temperature T, perturbation magnitude eps, threshold delta"""
    temperature: float = 1.0
    epsilon: float = 0.0
    delta: float = 0.5

    def __post_init__(self):
        _check_temperature(self.temperature)
        _check_epsilon(self.epsilon)
        if not 0.0 <= self.delta <= 1.0:
            raise ParameterError(f"Threshold delta must lie in [0, 1], got {self.delta}")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _check_temperature(temperature: float):
    if not (np.isfinite(temperature) and temperature > 0):
        raise ParameterError(f"Temperature must be a positive finite number, got {temperature}")


def _check_epsilon(epsilon: float):
    if not (np.isfinite(epsilon) and epsilon >= 0):
        raise ParameterError(f"Perturbation magnitude must be non-negative, got {epsilon}")


def softmax_with_temperature(logits: np.ndarray, temperature: float) -> np.ndarray:
    """
    Softmax of logits / T along the last axis, computed with max-subtraction
    so temperatures up to 1e8 neither overflow nor lose the argmax.
    """
    _check_temperature(temperature)
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim == 0 or logits.shape[-1] < 1:
        raise InputShapeError("Need at least one logit")
    if not np.all(np.isfinite(logits)):
        raise InputShapeError("Logits must be finite")
    return softmax(logits / temperature, axis=-1)


def softmax_scores(model: Mlp, X: np.ndarray, temperature: float) -> np.ndarray:
    """Top softmax probability for each row of X"""
    return softmax_with_temperature(forward_batch(model, X), temperature).max(axis=1)


def softmax_score(model: Mlp, x: np.ndarray, temperature: float) -> float:
    """S_yhat(x; T) = max_i S_i(x; T)"""
    return float(softmax_with_temperature(forward(model, x), temperature).max())


def preprocess_batch(model: Mlp, X: np.ndarray, temperature: float, epsilon: float) -> np.ndarray:
    """Row-wise x - eps * sign(-grad log S_yhat); no clipping to [0, 1]"""
    _check_epsilon(epsilon)
    X = np.asarray(X, dtype=np.float64)
    gradient = input_gradient_batch(model, X, temperature)
    return X - epsilon * np.sign(-gradient)


def preprocess(model: Mlp, x: np.ndarray, temperature: float, epsilon: float) -> np.ndarray:
    """Perturbed copy of x that raises the top log-softmax to first order"""
    _check_epsilon(epsilon)
    x = np.asarray(x, dtype=np.float64)
    gradient = input_gradient(model, x, temperature)
    return x - epsilon * np.sign(-gradient)


def odin_scores(model: Mlp, X: np.ndarray, temperature: float, epsilon: float) -> np.ndarray:
    """Top softmax probability of each preprocessed row at temperature T"""
    if epsilon == 0:
        return softmax_scores(model, X, temperature)
    return softmax_scores(model, preprocess_batch(model, X, temperature, epsilon), temperature)


def odin_score(model: Mlp, x: np.ndarray, params: OdinParams) -> float:
    """S at the perturbed input, using the perturbed input's own top class"""
    perturbed = preprocess(model, x, params.temperature, params.epsilon)
    return softmax_score(model, perturbed, params.temperature)


def decide(score: float, delta: float) -> Flag:
    """In-distribution iff score > delta (strict)"""
    return Flag.IN_DISTRIBUTION if score > delta else Flag.OUT_OF_DISTRIBUTION


def detect(model: Mlp, x: np.ndarray, params: OdinParams) -> Flag:
    """Classify one input as in- or out-of-distribution"""
    return decide(odin_score(model, x, params), params.delta)


def detect_batch(model: Mlp, X: np.ndarray, params: OdinParams) -> np.ndarray:
    """Boolean mask, True where the row is flagged in-distribution"""
    return odin_scores(model, X, params.temperature, params.epsilon) > params.delta
