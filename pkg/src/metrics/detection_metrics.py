#!/usr/bin/env python3
"""
Detection metrics over paired in/out score sets

In-distribution samples are the positives. Every threshold comparison uses
the detector's strict rule (score > delta counts as in-distribution), and
curves place one operating point at each distinct score value.

Metrics:
- FPR at a target TPR and the matching detection error
  P_e = 0.5 * (1 - TPR) + 0.5 * FPR
- AUROC from the rank statistic (ties count one half)
- AUPR with in- or out-distribution taken as positive, trapezoidal over the
  distinct thresholds with the leftmost point taking the precision of the
  highest threshold
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.stats import rankdata

from src.detectors.tuner import threshold_for_tpr
from src.utils.errors import DataError, ParameterError

logger = logging.getLogger(__name__)

METRIC_NAMES = ['fpr_at_tpr', 'detection_error', 'auroc', 'aupr_in', 'aupr_out']
CURVE_COLUMNS = ['threshold', 'fpr', 'tpr', 'precision_in', 'recall_in', 'precision_out', 'recall_out']
POSITIVE_SIDES = ('in', 'out')


@dataclass
class ScoreSet:
    """Detector scores of in-distribution (positive) and OOD (negative) samples"""
    in_scores: np.ndarray
    out_scores: np.ndarray
    in_name: str = 'in'
    out_name: str = 'out'

    def __post_init__(self):
        self.in_scores = np.asarray(self.in_scores, dtype=np.float64).ravel()
        self.out_scores = np.asarray(self.out_scores, dtype=np.float64).ravel()
        if self.in_scores.size == 0 or self.out_scores.size == 0:
            raise DataError(f"Both score sets must be non-empty "
                            f"({self.in_name}: {self.in_scores.size}, {self.out_name}: {self.out_scores.size})")
        if not (np.all(np.isfinite(self.in_scores)) and np.all(np.isfinite(self.out_scores))):
            raise DataError("Scores must be finite")

    def swapped(self) -> 'ScoreSet':
        return ScoreSet(self.out_scores, self.in_scores, self.out_name, self.in_name)


@dataclass
class OperatingPoint:
    delta: float
    tpr: float
    fpr: float


@dataclass
class EvalReport:
    """All threshold-based and threshold-free metrics for one score set"""
    fpr_at_tpr: float
    detection_error: float
    auroc: float
    aupr_in: float
    aupr_out: float
    roc_points: np.ndarray
    pr_points_in: np.ndarray
    pr_points_out: np.ndarray
    delta: float = float('nan')
    tpr: float = float('nan')
    target_tpr: float = 0.95
    in_name: str = 'in'
    out_name: str = 'out'
    curves: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=CURVE_COLUMNS))

    def metrics(self) -> Dict[str, float]:
        return {name: float(getattr(self, name)) for name in METRIC_NAMES}

    def to_dict(self) -> Dict[str, Any]:
        return {'in_name': self.in_name, 'out_name': self.out_name,
                'target_tpr': self.target_tpr, 'delta': self.delta, 'tpr': self.tpr,
                **self.metrics()}

    def metrics_frame(self) -> pd.DataFrame:
        """One row per metric"""
        return pd.DataFrame({'metric': METRIC_NAMES,
                             'value': [self.metrics()[name] for name in METRIC_NAMES]})


def _check_target(target_tpr: float):
    if not 0.0 < target_tpr < 1.0:
        raise ParameterError(f"Target TPR must lie in (0, 1), got {target_tpr}")


def _check_side(positive_side: str):
    if positive_side not in POSITIVE_SIDES:
        raise ParameterError(f"positive_side must be one of {POSITIVE_SIDES}, got {positive_side!r}")


def operating_point(scores: ScoreSet, target_tpr: float = 0.95) -> OperatingPoint:
    """Threshold at the target TPR together with the achieved TPR and the FPR"""
    _check_target(target_tpr)
    delta = threshold_for_tpr(scores.in_scores, target_tpr)
    return OperatingPoint(delta=delta,
                          tpr=float(np.mean(scores.in_scores > delta)),
                          fpr=float(np.mean(scores.out_scores > delta)))


def fpr_at_tpr(scores: ScoreSet, target_tpr: float = 0.95) -> float:
    return operating_point(scores, target_tpr).fpr


def detection_error(scores: ScoreSet, target_tpr: float = 0.95) -> float:
    """P_e at the achieved operating point"""
    point = operating_point(scores, target_tpr)
    return 0.5 * (1.0 - point.tpr) + 0.5 * point.fpr


def auroc(scores: ScoreSet) -> float:
    """Mann-Whitney form: P(in > out) + 0.5 * P(in == out)"""
    n, m = scores.in_scores.size, scores.out_scores.size
    ranks = rankdata(np.concatenate([scores.in_scores, scores.out_scores]), method='average')
    in_rank_sum = float(np.sum(ranks[:n]))
    return (in_rank_sum - n * (n + 1) / 2.0) / (n * m)


def _cumulative_counts(positives: np.ndarray, negatives: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Distinct thresholds in descending order with the positive and negative
    counts scoring at or above each of them.
    """
    values = np.concatenate([positives, negatives])
    is_positive = np.concatenate([np.ones(positives.size), np.zeros(negatives.size)])

    order = np.argsort(-values, kind='mergesort')
    values, is_positive = values[order], is_positive[order]
    tp = np.cumsum(is_positive)
    fp = np.cumsum(1.0 - is_positive)

    last_of_group = np.append(np.diff(values) != 0, True)
    return values[last_of_group], tp[last_of_group], fp[last_of_group]


def _roc(scores: ScoreSet) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    thresholds, tp, fp = _cumulative_counts(scores.in_scores, scores.out_scores)
    fpr = np.concatenate([[0.0], fp / scores.out_scores.size])
    tpr = np.concatenate([[0.0], tp / scores.in_scores.size])
    return np.concatenate([[np.inf], thresholds]), fpr, tpr


def roc_curve(scores: ScoreSet) -> np.ndarray:
    """(fpr, tpr) rows from (0, 0) through each distinct threshold, descending"""
    _, fpr, tpr = _roc(scores)
    return np.column_stack([fpr, tpr])


def _oriented(scores: ScoreSet, positive_side: str) -> Tuple[np.ndarray, np.ndarray]:
    _check_side(positive_side)
    if positive_side == 'in':
        return scores.in_scores, scores.out_scores
    # OOD samples become positives under the reversed ordering
    return -scores.out_scores, -scores.in_scores


def pr_curve(scores: ScoreSet, positive_side: str = 'in') -> np.ndarray:
    """(recall, precision) rows, leftmost point (0, precision at the top threshold)"""
    positives, negatives = _oriented(scores, positive_side)
    _, tp, fp = _cumulative_counts(positives, negatives)
    recall = tp / positives.size
    precision = tp / (tp + fp)
    return np.column_stack([np.concatenate([[0.0], recall]),
                            np.concatenate([[precision[0]], precision])])


def aupr(scores: ScoreSet, positive_side: str = 'in') -> float:
    points = pr_curve(scores, positive_side)
    return float(trapezoid(points[:, 1], points[:, 0]))


def curves_frame(scores: ScoreSet) -> pd.DataFrame:
    """
    Joint curve table at each distinct threshold t, descending, plus t = inf.
    In-side columns count samples with score >= t as predicted positive; out-side
    columns count samples with score < t. Undefined precisions are NaN.
    """
    thresholds, fpr, tpr = _roc(scores)
    n, m = scores.in_scores.size, scores.out_scores.size
    tp = tpr * n
    fp = fpr * m
    out_below = m - fp
    in_below = n - tp
    with np.errstate(divide='ignore', invalid='ignore'):
        precision_in = np.where(tp + fp > 0, tp / (tp + fp), np.nan)
        precision_out = np.where(out_below + in_below > 0, out_below / (out_below + in_below), np.nan)
    return pd.DataFrame({
        'threshold': thresholds,
        'fpr': fpr,
        'tpr': tpr,
        'precision_in': precision_in,
        'recall_in': tpr,
        'precision_out': precision_out,
        'recall_out': out_below / m,
    }, columns=CURVE_COLUMNS)


def threshold_sweep(scores: ScoreSet, deltas: Iterable[float]) -> pd.DataFrame:
    """TPR and FPR at each fixed delta under the strict > rule"""
    deltas = np.asarray(list(deltas), dtype=np.float64)
    return pd.DataFrame({
        'delta': deltas,
        'tpr': [float(np.mean(scores.in_scores > d)) for d in deltas],
        'fpr': [float(np.mean(scores.out_scores > d)) for d in deltas],
    })


def evaluate(scores: ScoreSet, target_tpr: float = 0.95) -> EvalReport:
    point = operating_point(scores, target_tpr)
    report = EvalReport(
        fpr_at_tpr=point.fpr,
        detection_error=0.5 * (1.0 - point.tpr) + 0.5 * point.fpr,
        auroc=auroc(scores),
        aupr_in=aupr(scores, 'in'),
        aupr_out=aupr(scores, 'out'),
        roc_points=roc_curve(scores),
        pr_points_in=pr_curve(scores, 'in'),
        pr_points_out=pr_curve(scores, 'out'),
        delta=point.delta,
        tpr=point.tpr,
        target_tpr=target_tpr,
        in_name=scores.in_name,
        out_name=scores.out_name,
        curves=curves_frame(scores),
    )
    logger.debug(f"{scores.in_name} vs {scores.out_name}: FPR={report.fpr_at_tpr:.4f} AUROC={report.auroc:.4f}")
    return report
