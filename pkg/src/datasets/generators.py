#!/usr/bin/env python3
"""
Out-of-distribution set construction

Synthetic noise images and the crop / downsample constructions used to
turn larger natural images into OOD sets at the classifier's input size.
"""

import logging
from typing import Tuple

import numpy as np

from src.datasets.containers import ImageTensor
from src.utils.errors import ParameterError
from src.utils.rng import get_rng

logger = logging.getLogger(__name__)


def _check_counts(n: int, h: int, w: int):
    if n <= 0 or h <= 0 or w <= 0:
        raise ParameterError(f"Sample count and image dims must be positive, got n={n}, h={h}, w={w}")


def gen_gaussian_noise(n: int, h: int, w: int, seed: int) -> ImageTensor:
    """i.i.d. Normal(0.5, 1) pixels clipped to [0, 1]"""
    _check_counts(n, h, w)
    values = get_rng(seed).normal(loc=0.5, scale=1.0, size=(n, h, w))
    return ImageTensor(np.clip(values, 0.0, 1.0), name='gaussian', seed=seed)


def gen_uniform_noise(n: int, h: int, w: int, seed: int) -> ImageTensor:
    """i.i.d. Uniform[0, 1] pixels"""
    _check_counts(n, h, w)
    values = get_rng(seed).uniform(0.0, 1.0, size=(n, h, w))
    return ImageTensor(values, name='uniform', seed=seed)


def _spatial_dims(images: ImageTensor) -> Tuple[int, int]:
    if images.values.ndim not in (3, 4):
        raise ParameterError(
            f"Tensor '{images.name}' must be shaped (n, h, w) or (n, h, w, c) for spatial transforms, "
            f"got {images.values.shape}"
        )
    return images.values.shape[1], images.values.shape[2]


def random_crop(images: ImageTensor, out_h: int, out_w: int, seed: int) -> ImageTensor:
    """Per-image crop at an independent uniformly random top-left corner"""
    h, w = _spatial_dims(images)
    if out_h <= 0 or out_w <= 0 or out_h > h or out_w > w:
        raise ParameterError(f"Crop {out_h}x{out_w} does not fit inside {h}x{w} images")

    rng = get_rng(seed)
    tops = rng.integers(0, h - out_h + 1, size=images.num_samples)
    lefts = rng.integers(0, w - out_w + 1, size=images.num_samples)

    crops = np.stack([
        images.values[i, top:top + out_h, left:left + out_w]
        for i, (top, left) in enumerate(zip(tops, lefts))
    ]) if images.num_samples else images.values[:, :out_h, :out_w]
    return ImageTensor(crops, name=f"{images.name}_crop", seed=seed)


def _area_weights(src: int, dst: int) -> np.ndarray:
    """
    (dst, src) matrix; row i holds the overlap of each source pixel with the
    output interval [i*src/dst, (i+1)*src/dst), normalized to sum to 1.
    """
    scale = src / dst
    weights = np.zeros((dst, src))
    for i in range(dst):
        lo, hi = i * scale, (i + 1) * scale
        first, last = int(np.floor(lo)), int(np.ceil(hi))
        for j in range(first, min(last, src)):
            weights[i, j] = min(hi, j + 1) - max(lo, j)
    return weights / weights.sum(axis=1, keepdims=True)


def downsample(images: ImageTensor, out_h: int, out_w: int) -> ImageTensor:
    """Box-filter (area-average) resampling; every output pixel is a convex combination"""
    h, w = _spatial_dims(images)
    if out_h <= 0 or out_w <= 0 or out_h > h or out_w > w:
        raise ParameterError(f"Cannot downsample {h}x{w} images to {out_h}x{out_w}")

    rows, cols = _area_weights(h, out_h), _area_weights(w, out_w)
    if images.values.ndim == 3:
        values = np.einsum('ih,nhw,jw->nij', rows, images.values, cols)
    else:
        values = np.einsum('ih,nhwc,jw->nijc', rows, images.values, cols)
    # Rounding can leave convex combinations a hair outside the source range
    if images.values.size:
        values = np.clip(values, images.values.min(), images.values.max())
    return ImageTensor(values, name=f"{images.name}_resize", seed=images.seed)
