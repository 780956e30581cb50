#!/usr/bin/env python3
"""
Weight file persistence

Layout (little-endian):
  b"ODN1" | u32 layer count L | (L+1) x u32 dims |
  per layer: float64 weight matrix (row-major, out x in) then float64 bias vector
"""

import logging
import os
import struct

import numpy as np

from src.net.mlp import Mlp
from src.utils.errors import DataError, FormatError

logger = logging.getLogger(__name__)

MODEL_MAGIC = b'ODN1'


def model_to_bytes(model: Mlp) -> bytes:
    parts = [MODEL_MAGIC, struct.pack('<I', model.num_layers),
             struct.pack(f'<{len(model.layer_dims)}I', *model.layer_dims)]
    for w, b in zip(model.weights, model.biases):
        parts.append(np.ascontiguousarray(w, dtype='<f8').tobytes())
        parts.append(np.ascontiguousarray(b, dtype='<f8').tobytes())
    return b''.join(parts)


def model_from_bytes(raw: bytes, source: str = '<bytes>') -> Mlp:
    if len(raw) < 4 or raw[:4] != MODEL_MAGIC:
        raise FormatError(f"{source}: bad magic {raw[:4]!r}, expected {MODEL_MAGIC!r}", offset=0)
    if len(raw) < 8:
        raise FormatError(f"{source}: truncated layer count", offset=4)

    num_layers, = struct.unpack_from('<I', raw, 4)
    if num_layers == 0:
        raise FormatError(f"{source}: layer count must be positive", offset=4)
    dims_end = 8 + 4 * (num_layers + 1)
    if len(raw) < dims_end:
        raise FormatError(f"{source}: truncated layer dims", offset=len(raw))
    dims = list(struct.unpack_from(f'<{num_layers + 1}I', raw, 8))
    if any(dim == 0 for dim in dims):
        raise FormatError(f"{source}: zero layer dimension in {dims}", offset=8)

    offset = dims_end
    weights, biases = [], []
    for k in range(num_layers):
        rows, cols = dims[k + 1], dims[k]
        w_bytes = 8 * rows * cols
        if len(raw) < offset + w_bytes:
            raise FormatError(f"{source}: truncated weight matrix of layer {k}", offset=len(raw))
        weights.append(np.frombuffer(raw, dtype='<f8', count=rows * cols, offset=offset)
                       .reshape(rows, cols).astype(np.float64))
        offset += w_bytes

        b_bytes = 8 * rows
        if len(raw) < offset + b_bytes:
            raise FormatError(f"{source}: truncated bias vector of layer {k}", offset=len(raw))
        biases.append(np.frombuffer(raw, dtype='<f8', count=rows, offset=offset).astype(np.float64))
        offset += b_bytes

    if offset != len(raw):
        raise FormatError(f"{source}: {len(raw) - offset} trailing bytes after the last layer", offset=offset)

    for k, (w, b) in enumerate(zip(weights, biases)):
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise FormatError(f"{source}: non-finite parameters in layer {k}")

    return Mlp(layer_dims=dims, weights=weights, biases=biases)


def save_model(model: Mlp, path: str):
    """Write model weights; values round-trip bit-exactly"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'wb') as f:
        f.write(model_to_bytes(model))
    logger.info(f"💾 Saved model {model.layer_dims} to {path}")


def load_model(path: str) -> Mlp:
    """Read a weight file written by save_model"""
    if not os.path.exists(path):
        raise DataError(f"Model file not found: {path}")
    with open(path, 'rb') as f:
        raw = f.read()
    return model_from_bytes(raw, source=path)
