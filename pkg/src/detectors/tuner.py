#!/usr/bin/env python3
"""
Grid-search tuning of ODIN parameters on holdout sets

For each (T, eps) in the grid the in-distribution holdout fixes delta at the
target TPR, and the OOD holdout gives the FPR at that delta. The grid point
with the lowest FPR wins; ties go to the smaller eps, then the smaller T.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config.settings import DEFAULT_TEMPERATURES, DEFAULT_EPSILON_MAX, DEFAULT_EPSILON_STEPS
from src.detectors.odin_detector import OdinParams, _check_epsilon, _check_temperature, softmax_scores
from src.net.mlp import Mlp, input_gradient_batch
from src.utils.errors import DataError, FormatError, ParameterError
from src.utils.rng import get_rng

logger = logging.getLogger(__name__)

TUNED_FIELDS = ('temperature', 'epsilon', 'delta', 'target_tpr', 'holdout_fpr')
GRID_COLUMNS = ['temperature', 'epsilon', 'delta', 'holdout_fpr', 'holdout_tpr']


def _check_target_tpr(target_tpr: float):
    if not 0.0 < target_tpr < 1.0:
        raise ParameterError(f"Target TPR must lie in (0, 1), got {target_tpr}")


@dataclass
class TuneGrid:
    """Candidate temperatures and perturbation magnitudes"""
    temperatures: List[float] = field(default_factory=lambda: list(DEFAULT_TEMPERATURES))
    epsilons: List[float] = field(
        default_factory=lambda: np.linspace(0.0, DEFAULT_EPSILON_MAX, DEFAULT_EPSILON_STEPS).tolist())
    target_tpr: float = 0.95

    def __post_init__(self):
        self.temperatures = [float(t) for t in self.temperatures]
        self.epsilons = [float(e) for e in self.epsilons]
        if not self.temperatures or not self.epsilons:
            raise DataError("Tuning grid needs at least one temperature and one epsilon")
        for t in self.temperatures:
            _check_temperature(t)
        for e in self.epsilons:
            _check_epsilon(e)
        _check_target_tpr(self.target_tpr)

    @classmethod
    def baseline(cls, target_tpr: float = 0.95) -> 'TuneGrid':
        return cls(temperatures=[1.0], epsilons=[0.0], target_tpr=target_tpr)

    @property
    def size(self) -> int:
        return len(self.temperatures) * len(self.epsilons)


def threshold_for_tpr(in_scores: np.ndarray, target_tpr: float) -> float:
    """
    Largest delta such that at least target_tpr of in_scores are strictly above it.

    With scores sorted descending, delta is the score at 1-based rank
    ceil(target_tpr * n), moved one ulp toward -inf. Ties can push the
    achieved TPR above the target.
    """
    _check_target_tpr(target_tpr)
    scores = np.asarray(in_scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise DataError("Cannot set a threshold from an empty score set")
    if not np.all(np.isfinite(scores)):
        raise DataError("Scores must be finite")

    n = scores.size
    # round() keeps 0.95 * 100 at rank 95 instead of 96
    rank = min(max(math.ceil(round(target_tpr * n, 9)), 1), n)
    ordered = np.sort(scores)[::-1]
    return float(np.nextafter(ordered[rank - 1], -np.inf))


@dataclass
class TuneResult:
    """Winning parameters plus the full grid evaluation"""
    params: OdinParams
    target_tpr: float
    holdout_fpr: float
    grid_table: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=GRID_COLUMNS))

    def to_record(self) -> Dict[str, float]:
        return {
            'temperature': self.params.temperature,
            'epsilon': self.params.epsilon,
            'delta': self.params.delta,
            'target_tpr': self.target_tpr,
            'holdout_fpr': self.holdout_fpr,
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> 'TuneResult':
        missing = [name for name in TUNED_FIELDS if name not in record]
        if missing:
            raise FormatError(f"Tuned parameter record is missing fields {missing}")
        params = OdinParams(temperature=float(record['temperature']),
                            epsilon=float(record['epsilon']),
                            delta=float(record['delta']))
        return cls(params=params, target_tpr=float(record['target_tpr']),
                   holdout_fpr=float(record['holdout_fpr']))


def save_tuned_params(result: TuneResult, path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w') as f:
        # repr-exact floats so delta survives the round trip bit for bit
        json.dump(result.to_record(), f, indent=2)
    logger.info(f"💾 Saved tuned parameters to {path}")


def load_tuned_params(path: str) -> TuneResult:
    if not os.path.exists(path):
        raise DataError(f"Tuned parameter file not found: {path}")
    try:
        with open(path, 'r') as f:
            record = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e.msg})", offset=e.pos)
    if not isinstance(record, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return TuneResult.from_record(record)


def _as_rows(X: np.ndarray, what: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError(f"{what} holdout must be a non-empty (n, d) array, got shape {X.shape}")
    return X


def odin_scores_over_epsilons(model: Mlp, X: np.ndarray, temperature: float,
                              epsilons: Sequence[float]) -> List[np.ndarray]:
    """Scores for every eps at one T, sharing the gradient-sign computation"""
    direction = np.sign(input_gradient_batch(model, X, temperature))
    scores = []
    for epsilon in epsilons:
        perturbed = X if epsilon == 0 else X + epsilon * direction
        scores.append(softmax_scores(model, perturbed, temperature))
    return scores


def tune(model: Mlp, in_holdout: np.ndarray, ood_holdout: np.ndarray,
         grid: Optional[TuneGrid] = None) -> TuneResult:
    """Exhaustive search over grid minimizing holdout FPR at the target TPR"""
    grid = grid or TuneGrid()
    in_holdout = _as_rows(in_holdout, "In-distribution")
    ood_holdout = _as_rows(ood_holdout, "Out-of-distribution")

    rows = []
    for temperature in grid.temperatures:
        in_by_eps = odin_scores_over_epsilons(model, in_holdout, temperature, grid.epsilons)
        out_by_eps = odin_scores_over_epsilons(model, ood_holdout, temperature, grid.epsilons)
        for epsilon, in_scores, out_scores in zip(grid.epsilons, in_by_eps, out_by_eps):
            delta = threshold_for_tpr(in_scores, grid.target_tpr)
            rows.append({
                'temperature': temperature,
                'epsilon': epsilon,
                'delta': delta,
                'holdout_fpr': float(np.mean(out_scores > delta)),
                'holdout_tpr': float(np.mean(in_scores > delta)),
            })
        logger.debug(f"Evaluated T={temperature} over {len(grid.epsilons)} epsilons")

    table = pd.DataFrame(rows, columns=GRID_COLUMNS)
    best = table.sort_values(['holdout_fpr', 'epsilon', 'temperature'], kind='mergesort').iloc[0]

    # nextafter can dip below 0 only when the rank score is exactly 0
    params = OdinParams(temperature=float(best['temperature']),
                        epsilon=float(best['epsilon']),
                        delta=min(max(float(best['delta']), 0.0), 1.0))
    result = TuneResult(params=params, target_tpr=grid.target_tpr,
                        holdout_fpr=float(best['holdout_fpr']), grid_table=table)

    logger.info(f"🎯 Tuned over {grid.size} grid points: T={params.temperature:g}, "
                f"eps={params.epsilon:g}, delta={params.delta:.6f}, holdout FPR={result.holdout_fpr:.4f}")
    return result


def tuning_size_curve(model: Mlp, in_tuning: np.ndarray, in_test: np.ndarray,
                      ood_pool: np.ndarray, ood_test: np.ndarray, sizes: Sequence[int],
                      grid: Optional[TuneGrid] = None, seed: int = 0) -> pd.DataFrame:
    """
    Tune on seeded OOD subsets of each requested size and report how the
    chosen parameters transfer to the test sets.
    """
    grid = grid or TuneGrid()
    ood_pool = _as_rows(ood_pool, "Out-of-distribution")
    in_test = _as_rows(in_test, "In-distribution test")
    ood_test = _as_rows(ood_test, "Out-of-distribution test")

    rows = []
    for i, size in enumerate(sizes):
        if not 1 <= size <= len(ood_pool):
            raise ParameterError(f"Tuning size must lie in [1, {len(ood_pool)}], got {size}")
        picked = np.sort(get_rng(seed + i).permutation(len(ood_pool))[:size])
        result = tune(model, in_tuning, ood_pool[picked], grid)

        p = result.params
        in_scores = odin_scores_over_epsilons(model, in_test, p.temperature, [p.epsilon])[0]
        out_scores = odin_scores_over_epsilons(model, ood_test, p.temperature, [p.epsilon])[0]
        rows.append({
            'tuning_size': int(size),
            'temperature': p.temperature,
            'epsilon': p.epsilon,
            'delta': p.delta,
            'holdout_fpr': result.holdout_fpr,
            'test_tpr': float(np.mean(in_scores > p.delta)),
            'test_fpr': float(np.mean(out_scores > p.delta)),
        })
    return pd.DataFrame(rows)
