#!/usr/bin/env python3
"""
Two-sample distances between datasets

Both statistics work on flattened pixel vectors of two equally sized sets
V, W of m points:

  MMD^2 with a Gaussian RBF kernel k(x, y) = exp(-|x - y|^2 / 2 sigma^2),
  where 2 sigma^2 is the median pairwise distance of V u W. The within-set
  terms average over unordered pairs i < j; the cross term averages
  k(v_i, w_j) over i != j, so identical aligned sets give exactly 0.

  Energy distance with the 2-norm:
    (2/m^2) sum_ij |v_i - w_j| - mean_{i<j} |v_i - v_j| - mean_{i<j} |w_i - w_j|
"""

import logging
from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.stats import spearmanr

from src.utils.errors import DataError, DomainError, ParameterError
from src.utils.rng import spawn_rngs

logger = logging.getLogger(__name__)


def _as_points(values: np.ndarray) -> np.ndarray:
    points = np.asarray(values, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    return points.reshape(len(points), -1)


def _check_pair(V: np.ndarray, W: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    V, W = _as_points(V), _as_points(W)
    if len(V) != len(W):
        raise DataError(f"Point sets must have equal size, got {len(V)} and {len(W)}")
    if len(V) < 2:
        raise DataError("Each point set needs at least two points")
    if V.shape[1] != W.shape[1]:
        raise DataError(f"Dimension mismatch: {V.shape[1]} vs {W.shape[1]}")
    return V, W


def median_heuristic(points: np.ndarray) -> float:
    """2 sigma^2 as the median Euclidean distance over unordered distinct pairs"""
    points = _as_points(points)
    if len(points) < 2:
        raise DataError("Median heuristic needs at least two points")
    bandwidth = float(np.median(pdist(points, 'euclidean')))
    if bandwidth == 0.0:
        raise DomainError("Degenerate kernel bandwidth: the median pairwise distance is 0")
    return bandwidth


def _upper_mean(matrix: np.ndarray) -> float:
    rows, cols = np.triu_indices(len(matrix), k=1)
    return float(matrix[rows, cols].mean())


def mmd_squared(V: np.ndarray, W: np.ndarray, sigma_squared_times_two: Optional[float] = None) -> float:
    V, W = _check_pair(V, W)
    if sigma_squared_times_two is None:
        sigma_squared_times_two = median_heuristic(np.vstack([V, W]))
    elif not sigma_squared_times_two > 0:
        raise ParameterError(f"Kernel bandwidth must be positive, got {sigma_squared_times_two}")

    def kernel(a, b):
        return np.exp(-cdist(a, b, 'sqeuclidean') / sigma_squared_times_two)

    within_v = _upper_mean(kernel(V, V))
    within_w = _upper_mean(kernel(W, W))
    k_vw = kernel(V, W)
    # ordered pairs i != j, as the mean of the two triangles
    cross = (_upper_mean(k_vw) + _upper_mean(k_vw.T)) / 2.0
    return within_v + within_w - 2.0 * cross


def energy_squared(V: np.ndarray, W: np.ndarray) -> float:
    V, W = _check_pair(V, W)
    m = len(V)
    between = 2.0 * cdist(V, W, 'euclidean').sum() / m ** 2
    return float(between - pdist(V, 'euclidean').mean() - pdist(W, 'euclidean').mean())


@dataclass
class DistanceReport:
    mmd_squared: float
    energy_squared: float
    sigma_squared_times_two: float
    m: int
    v_name: str = 'V'
    w_name: str = 'W'

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def dataset_distance(V: np.ndarray, W: np.ndarray, v_name: str = 'V', w_name: str = 'W') -> DistanceReport:
    """MMD^2 and energy distance with one shared median-heuristic bandwidth"""
    V, W = _check_pair(V, W)
    bandwidth = median_heuristic(np.vstack([V, W]))
    report = DistanceReport(
        mmd_squared=mmd_squared(V, W, bandwidth),
        energy_squared=energy_squared(V, W),
        sigma_squared_times_two=bandwidth,
        m=len(V),
        v_name=v_name,
        w_name=w_name,
    )
    logger.info(f"📏 {v_name} vs {w_name} (m={report.m}): MMD²={report.mmd_squared:.6f}, "
                f"energy={report.energy_squared:.6f}")
    return report


def subsample_pair(V: np.ndarray, W: np.ndarray, m: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded subsets of both sets at a common size m (at most the smaller set size)"""
    V, W = _as_points(V), _as_points(W)
    m = min(m, len(V), len(W))
    if m < 2:
        raise ParameterError(f"Common subsample size must be at least 2, got {m}")
    rng_v, rng_w = spawn_rngs(seed, 2)
    pick_v = np.sort(rng_v.permutation(len(V))[:m])
    pick_w = np.sort(rng_w.permutation(len(W))[:m])
    return V[pick_v], W[pick_w]


def distance_performance_correlation(distances: Sequence[float], fprs: Sequence[float]) -> float:
    """Spearman correlation between per-set distances and detection FPRs"""
    distances = np.asarray(distances, dtype=np.float64)
    fprs = np.asarray(fprs, dtype=np.float64)
    if distances.size != fprs.size or distances.size < 2:
        raise DataError("Need at least two OOD sets with one distance and one FPR each")
    correlation = float(spearmanr(distances, fprs).correlation)
    if np.isnan(correlation):
        logger.warning("⚠️ Rank correlation undefined: distances or FPRs are constant")
    return correlation
