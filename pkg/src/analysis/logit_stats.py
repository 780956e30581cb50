#!/usr/bin/env python3
"""
Per-sample logit statistics

With gaps g_i = f_yhat - f_i between the top logit and the others:
    U1 = mean_{i != yhat} g_i        U2 = mean_{i != yhat} g_i^2
and the second-order expansion of the temperature-scaled top softmax
    S ~= 1 / (N - sum_i g_i / T + sum_i g_i^2 / (2 T^2))
"""

import logging
from dataclasses import dataclass, asdict
from typing import List, Tuple

import numpy as np
import pandas as pd

from src.detectors.odin_detector import softmax_with_temperature
from src.net.mlp import Mlp, forward_batch, input_gradient, input_gradient_batch
from src.utils.errors import DomainError, InputShapeError, ParameterError

logger = logging.getLogger(__name__)

STATS_COLUMNS = ['source', 'u1', 'u2', 'score', 'taylor_score', 'grad_norm_l1']


@dataclass
class LogitStats:
    source: str
    u1: float
    u2: float
    softmax_score: float
    taylor_score: float
    grad_norm_l1: float

    def to_row(self) -> dict:
        row = asdict(self)
        row['score'] = row.pop('softmax_score')
        return row


def _as_logit_matrix(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim == 1:
        logits = logits[None, :]
    if logits.ndim != 2 or logits.shape[1] < 1:
        raise InputShapeError(f"Expected a logit vector or (n, N) matrix, got shape {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise InputShapeError("Logits must be finite")
    return logits


def _gaps(logits: np.ndarray) -> np.ndarray:
    """f_yhat - f_i for every class; the top class contributes a zero"""
    return logits.max(axis=1, keepdims=True) - logits


def u_stats_batch(logits: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    logits = _as_logit_matrix(logits)
    num_classes = logits.shape[1]
    if num_classes < 2:
        raise ParameterError("U1/U2 need at least two classes")
    gaps = _gaps(logits)
    # the zero gap of the top class drops out of both sums
    u1 = gaps.sum(axis=1) / (num_classes - 1)
    u2 = (gaps ** 2).sum(axis=1) / (num_classes - 1)
    return u1, u2


def u_stats(logits: np.ndarray) -> Tuple[float, float]:
    u1, u2 = u_stats_batch(np.asarray(logits, dtype=np.float64).ravel())
    return float(u1[0]), float(u2[0])


def taylor_score_batch(logits: np.ndarray, temperature: float) -> np.ndarray:
    if not (np.isfinite(temperature) and temperature > 0):
        raise ParameterError(f"Temperature must be positive, got {temperature}")
    logits = _as_logit_matrix(logits)
    gaps = _gaps(logits)
    denominator = (logits.shape[1]
                   - gaps.sum(axis=1) / temperature
                   + (gaps ** 2).sum(axis=1) / (2.0 * temperature ** 2))
    if np.any(denominator <= 0):
        raise DomainError(f"Second-order expansion has a non-positive denominator at T={temperature}")
    return 1.0 / denominator


def taylor_score(logits: np.ndarray, temperature: float) -> float:
    return float(taylor_score_batch(np.asarray(logits, dtype=np.float64).ravel(), temperature)[0])


def exact_score_batch(logits: np.ndarray, temperature: float) -> np.ndarray:
    return softmax_with_temperature(_as_logit_matrix(logits), temperature).max(axis=1)


def grad_norm_l1(model: Mlp, x: np.ndarray, temperature: float) -> float:
    """1-norm of the input gradient of log S_yhat(x; T)"""
    return float(np.abs(input_gradient(model, x, temperature)).sum())


def score_proxy(u1, u2, temperature: float):
    """(U1 - U2 / 2T) / T, the leading T-dependent part of the expansion"""
    return (np.asarray(u1) - np.asarray(u2) / (2.0 * temperature)) / temperature


def collect_logit_stats(model: Mlp, X: np.ndarray, temperature: float, source: str) -> List[LogitStats]:
    """LogitStats for every row of X, labelled with its source set"""
    logits = forward_batch(model, X)
    u1, u2 = u_stats_batch(logits)
    scores = exact_score_batch(logits, temperature)
    taylor = taylor_score_batch(logits, temperature)
    grad_norms = np.abs(input_gradient_batch(model, X, temperature)).sum(axis=1)

    logger.debug(f"Collected logit statistics for {len(logits)} {source} samples at T={temperature:g}")
    return [LogitStats(source, float(a), float(b), float(s), float(t), float(g))
            for a, b, s, t, g in zip(u1, u2, scores, taylor, grad_norms)]


def logit_stats_frame(stats: List[LogitStats]) -> pd.DataFrame:
    return pd.DataFrame([s.to_row() for s in stats], columns=STATS_COLUMNS)
