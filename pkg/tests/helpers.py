"""
Model builders shared by the test modules
"""
import numpy as np

from src.net.mlp import Mlp, init_mlp
from src.utils.rng import get_rng


def linear_model(weights, bias=None) -> Mlp:
    """Single-layer network with logits = W x + b"""
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.zeros(weights.shape[0]) if bias is None else np.asarray(bias, dtype=np.float64)
    return Mlp(layer_dims=[weights.shape[1], weights.shape[0]], weights=[weights], biases=[bias])


def random_model(seed: int, dims=(6, 8, 8, 4), bias_scale: float = 0.1) -> Mlp:
    """Seeded network with non-zero biases so ReLU kinks are not all at the origin"""
    model = init_mlp(list(dims), seed)
    rng = get_rng(seed + 1000)
    biases = [rng.uniform(-bias_scale, bias_scale, size=b.shape) for b in model.biases]
    return Mlp(layer_dims=model.layer_dims, weights=model.weights, biases=biases)
