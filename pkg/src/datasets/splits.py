#!/usr/bin/env python3
"""
Dataset splits: class partitions (same-manifold experiments) and seeded
tuning / test holdouts.
"""

import logging
from typing import Dict, Iterable, Tuple, TypeVar, Union

import numpy as np

from src.datasets.containers import ImageTensor, LabeledDataset
from src.utils.errors import DataError, ParameterError
from src.utils.rng import get_rng

logger = logging.getLogger(__name__)

Splittable = TypeVar('Splittable', ImageTensor, LabeledDataset)


def class_split(data: LabeledDataset,
                in_classes: Iterable[int]) -> Tuple[LabeledDataset, LabeledDataset, Dict[int, int]]:
    """
    Partition data by label.

    The in-part keeps samples whose label is in in_classes, relabelled densely
    in ascending class order; the out-part keeps the rest with original labels.
    Returns (in_part, out_part, label_map) where label_map maps original -> new label.
    """
    wanted = sorted({int(c) for c in in_classes})
    present = set(int(c) for c in data.classes)

    missing = [c for c in wanted if c not in present]
    if not wanted or missing:
        raise DataError(f"In-classes {wanted} must be a non-empty subset of present classes {sorted(present)}")
    if set(wanted) == present:
        raise DataError("In-classes cover every present class, the out-part would be empty")

    label_map = {original: new for new, original in enumerate(wanted)}
    in_mask = np.isin(data.labels, wanted)

    in_part = LabeledDataset(
        data.inputs[in_mask],
        np.array([label_map[int(label)] for label in data.labels[in_mask]], dtype=np.int64),
        name=f"{data.name}_in",
    )
    out_part = data.subset(np.nonzero(~in_mask)[0], name=f"{data.name}_out")

    logger.info(f"✂️ Class split of {data.name}: {len(in_part)} in ({wanted}), {len(out_part)} out")
    return in_part, out_part, label_map


def holdout_split(images: Splittable, holdout_n: int, seed: int) -> Tuple[Splittable, Splittable]:
    """
    Seeded uniform partition without replacement into (tuning, test).
    Both parts keep the original sample order.
    """
    n = len(images)
    if holdout_n < 1 or holdout_n >= n:
        raise ParameterError(f"Holdout size must lie in [1, {n - 1}] for {n} samples, got {holdout_n}")

    permutation = get_rng(seed).permutation(n)
    tuning_idx = np.sort(permutation[:holdout_n])
    test_idx = np.sort(permutation[holdout_n:])
    return images.subset(tuning_idx), images.subset(test_idx)


def subsample(items: Union[ImageTensor, LabeledDataset], m: int, seed: int):
    """Seeded subset of m samples (all of them when m >= len)"""
    if m < 1:
        raise ParameterError(f"Subsample size must be positive, got {m}")
    if m >= len(items):
        return items
    return items.subset(np.sort(get_rng(seed).permutation(len(items))[:m]))
