# Dataset distances
from .statistical_distances import (
    DistanceReport, dataset_distance, distance_performance_correlation, energy_squared,
    median_heuristic, mmd_squared, subsample_pair,
)

__all__ = [
    'DistanceReport', 'dataset_distance', 'distance_performance_correlation', 'energy_squared',
    'median_heuristic', 'mmd_squared', 'subsample_pair',
]
