# Out-of-distribution detectors
from .odin_detector import (
    Flag, OdinParams, decide, detect, detect_batch, odin_score, odin_scores,
    preprocess, preprocess_batch, softmax_score, softmax_scores, softmax_with_temperature,
)
from .tuner import (
    TuneGrid, TuneResult, load_tuned_params, odin_scores_over_epsilons, save_tuned_params,
    threshold_for_tpr, tune, tuning_size_curve,
)

__all__ = [
    'Flag', 'OdinParams', 'decide', 'detect', 'detect_batch', 'odin_score', 'odin_scores',
    'preprocess', 'preprocess_batch', 'softmax_score', 'softmax_scores', 'softmax_with_temperature',
    'TuneGrid', 'TuneResult', 'load_tuned_params', 'odin_scores_over_epsilons', 'save_tuned_params',
    'threshold_for_tpr', 'tune', 'tuning_size_curve',
]
