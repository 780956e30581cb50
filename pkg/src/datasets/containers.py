#!/usr/bin/env python3
"""
Dataset containers

LabeledDataset holds flattened inputs with class labels (what the network
trains on); ImageTensor holds image stacks (n, h, w[, c]) or flat rows (n, d)
produced by ingestion, noise generators and transforms.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.utils.errors import DataError


def _check_unit_range(values: np.ndarray, name: str):
    if values.size and (not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0):
        raise DataError(f"Dataset '{name}' has values outside [0, 1]")


@dataclass
class LabeledDataset:
    """Inputs (n, d) in [0, 1] with integer labels"""
    inputs: np.ndarray
    labels: np.ndarray
    name: str = 'dataset'

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2:
            raise DataError(f"Dataset '{self.name}' inputs must be 2-D, got shape {self.inputs.shape}")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.inputs.shape[0]:
            raise DataError(
                f"Dataset '{self.name}' has {self.inputs.shape[0]} inputs but {self.labels.shape[0]} labels"
            )
        _check_unit_range(self.inputs, self.name)

    @property
    def num_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    def subset(self, indices: np.ndarray, name: Optional[str] = None) -> 'LabeledDataset':
        return LabeledDataset(self.inputs[indices], self.labels[indices], name or self.name)

    def __len__(self) -> int:
        return self.num_samples


@dataclass
class ImageTensor:
    """Image stack or flat rows with values in [0, 1]"""
    values: np.ndarray
    name: str = 'images'
    seed: Optional[int] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim < 2:
            raise DataError(f"Tensor '{self.name}' needs a leading sample axis plus data axes, got {self.values.shape}")
        _check_unit_range(self.values, self.name)

    @property
    def num_samples(self) -> int:
        return self.values.shape[0]

    @property
    def image_shape(self) -> tuple:
        return self.values.shape[1:]

    def flatten(self) -> np.ndarray:
        """Rows of length h*w*c; RGB values are flattened exactly like grayscale"""
        return self.values.reshape(self.num_samples, -1)

    def subset(self, indices: np.ndarray, name: Optional[str] = None) -> 'ImageTensor':
        return ImageTensor(self.values[indices], name or self.name, self.seed)

    def __len__(self) -> int:
        return self.num_samples
