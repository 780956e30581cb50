# Dense network engine
from .mlp import Mlp, forward, forward_batch, init_mlp, input_gradient, input_gradient_batch, predict
from .trainer import MlpTrainer, TrainConfig, train
from .model_io import load_model, save_model

__all__ = [
    'Mlp', 'forward', 'forward_batch', 'init_mlp', 'input_gradient', 'input_gradient_batch', 'predict',
    'MlpTrainer', 'TrainConfig', 'train',
    'load_model', 'save_model',
]
