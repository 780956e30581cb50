#!/usr/bin/env python3
"""
Detector diagnostics: conditional expectations, the large-temperature limit,
and classification accuracy on either side of the detection threshold.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from src.analysis.logit_stats import _as_logit_matrix, exact_score_batch, u_stats_batch
from src.datasets.containers import LabeledDataset
from src.detectors.odin_detector import OdinParams, odin_scores
from src.detectors.tuner import threshold_for_tpr
from src.metrics.detection_metrics import ScoreSet, operating_point
from src.net.mlp import Mlp, predict
from src.utils.errors import DataError, ParameterError

logger = logging.getLogger(__name__)

ScoreFn = Callable[[float], np.ndarray]


@dataclass
class BinnedExpectation:
    """Per-bin mean of a response; empty bins have count 0 and mean NaN"""
    bin_edges: np.ndarray
    bin_means: np.ndarray
    counts: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'bin_lo': self.bin_edges[:-1],
            'bin_hi': self.bin_edges[1:],
            'count': self.counts,
            'mean': self.bin_means,
        })


def conditional_expectation(xs: Sequence[float], ys: Sequence[float], n_bins: int = 20) -> BinnedExpectation:
    """E[y | x] over equal-width bins spanning [min(xs), max(xs)]"""
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.size != ys.size:
        raise DataError(f"Length mismatch: {xs.size} conditioning values, {ys.size} responses")
    if xs.size == 0:
        raise DataError("Cannot bin an empty sample")
    if n_bins < 1:
        raise ParameterError(f"Bin count must be at least 1, got {n_bins}")

    edges = np.histogram_bin_edges(xs, bins=n_bins)
    counts, _ = np.histogram(xs, bins=edges)
    sums, _ = np.histogram(xs, bins=edges, weights=ys)
    with np.errstate(invalid='ignore', divide='ignore'):
        means = np.where(counts > 0, sums / counts, np.nan)
    return BinnedExpectation(bin_edges=edges, bin_means=means, counts=counts.astype(np.int64))


def detection_error_limit(in_scores_fn: ScoreFn, out_scores_fn: ScoreFn, temperatures: Sequence[float],
                          target_tpr: float = 0.95) -> pd.DataFrame:
    """
    Detection error P_e(T, 0) along an ascending temperature sequence.
    The score functions map T to the eps = 0 scores of fixed sample sets.
    """
    temperatures = [float(t) for t in temperatures]
    if any(b <= a for a, b in zip(temperatures, temperatures[1:])):
        raise ParameterError("Temperatures must be strictly ascending")

    rows = []
    for temperature in temperatures:
        point = operating_point(ScoreSet(in_scores_fn(temperature), out_scores_fn(temperature)), target_tpr)
        rows.append({
            'temperature': temperature,
            'tpr': point.tpr,
            'fpr': point.fpr,
            'detection_error': 0.5 * (1.0 - point.tpr) + 0.5 * point.fpr,
        })
    return pd.DataFrame(rows)


def limit_statistic(scores, num_classes: int, temperature: float) -> np.ndarray:
    """T * (N - 1/S), which tends to (N - 1) * U1 as T grows"""
    return temperature * (num_classes - 1.0 / np.asarray(scores, dtype=np.float64))


def limit_rank_agreement(logits: np.ndarray, temperature: float = 1e8) -> float:
    """Spearman correlation between the top softmax at T and U1"""
    logits = _as_logit_matrix(logits)
    if len(logits) < 2:
        raise DataError("Rank agreement needs at least two samples")
    u1, _ = u_stats_batch(logits)
    scores = exact_score_batch(logits, temperature)
    return float(spearmanr(scores, u1).correlation)


@dataclass
class ThresholdAccuracy:
    """Classifier accuracy on samples scored above / at-or-below delta"""
    accuracy_above: Optional[float]
    accuracy_below: Optional[float]
    count_above: int
    count_below: int


def _split_accuracy(correct: np.ndarray, above: np.ndarray) -> ThresholdAccuracy:
    count_above = int(above.sum())
    count_below = int((~above).sum())
    return ThresholdAccuracy(
        accuracy_above=float(correct[above].mean()) if count_above else None,
        accuracy_below=float(correct[~above].mean()) if count_below else None,
        count_above=count_above,
        count_below=count_below,
    )


def accuracy_by_threshold(model: Mlp, data: LabeledDataset, params: OdinParams) -> ThresholdAccuracy:
    """Predictions come from the original inputs; the split uses the ODIN score"""
    correct = predict(model, data.inputs) == data.labels
    scores = odin_scores(model, data.inputs, params.temperature, params.epsilon)
    return _split_accuracy(correct, scores > params.delta)


def accuracy_by_tpr(model: Mlp, data: LabeledDataset, temperature: float, epsilon: float,
                    tprs: Sequence[float]) -> pd.DataFrame:
    """Threshold-split accuracy with delta fixed by each TPR level on data itself"""
    correct = predict(model, data.inputs) == data.labels
    scores = odin_scores(model, data.inputs, temperature, epsilon)

    rows = []
    for tpr in tprs:
        delta = threshold_for_tpr(scores, tpr)
        split = _split_accuracy(correct, scores > delta)
        rows.append({'tpr': float(tpr), 'delta': delta,
                     'accuracy_above': split.accuracy_above, 'accuracy_below': split.accuracy_below,
                     'count_above': split.count_above, 'count_below': split.count_below})
    return pd.DataFrame(rows)
