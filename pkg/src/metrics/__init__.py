# Detection metrics
from .detection_metrics import (
    CURVE_COLUMNS, METRIC_NAMES, EvalReport, OperatingPoint, ScoreSet,
    aupr, auroc, curves_frame, detection_error, evaluate, fpr_at_tpr,
    operating_point, pr_curve, roc_curve, threshold_sweep,
)

__all__ = [
    'CURVE_COLUMNS', 'METRIC_NAMES', 'EvalReport', 'OperatingPoint', 'ScoreSet',
    'aupr', 'auroc', 'curves_frame', 'detection_error', 'evaluate', 'fpr_at_tpr',
    'operating_point', 'pr_curve', 'roc_curve', 'threshold_sweep',
]
