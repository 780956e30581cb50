#!/usr/bin/env python3
"""
Dataset file formats

- IDX (MNIST layout): big-endian header, unsigned bytes scaled by 1/255.
  Magic 0x00000803 for image stacks, 0x00000801 for label vectors.
  Gzip-compressed files are accepted.
- Raw tensor: b"OTN1", u32 rank, rank x u32 dims, float64 little-endian values.
  Generated tensors get a JSON sidecar (<file>.json) recording how they were made.
"""

import gzip
import json
import logging
import os
import struct
from typing import Any, Dict, Optional, Sequence

import numpy as np

from src.datasets.containers import ImageTensor, LabeledDataset
from src.utils.errors import DataError, FormatError

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
TENSOR_MAGIC = b'OTN1'
GZIP_MAGIC = b'\x1f\x8b'


def _read_bytes(path: str) -> bytes:
    if not os.path.exists(path):
        raise DataError(f"Dataset file not found: {path}")
    with open(path, 'rb') as f:
        raw = f.read()
    if raw[:2] == GZIP_MAGIC:
        raw = gzip.decompress(raw)
    return raw


def _parse_idx(raw: bytes, expected_magic: int, path: str) -> np.ndarray:
    if len(raw) < 4:
        raise FormatError(f"{path}: file too short for an IDX header", offset=len(raw))
    magic, = struct.unpack_from('>I', raw, 0)
    if magic != expected_magic:
        raise FormatError(f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}", offset=0)

    rank = magic & 0xFF
    header_end = 4 + 4 * rank
    if len(raw) < header_end:
        raise FormatError(f"{path}: truncated IDX dimension header", offset=len(raw))
    dims = struct.unpack_from(f'>{rank}I', raw, 4)

    count = int(np.prod(dims))
    if len(raw) - header_end < count:
        raise FormatError(f"{path}: truncated IDX payload, expected {count} bytes", offset=len(raw))
    if len(raw) - header_end > count:
        raise FormatError(f"{path}: trailing bytes after IDX payload", offset=header_end + count)

    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header_end).reshape(dims)


def read_idx_images(path: str, name: Optional[str] = None) -> ImageTensor:
    """IDX image stack (n, rows, cols) scaled to [0, 1]"""
    pixels = _parse_idx(_read_bytes(path), IDX_IMAGES_MAGIC, path)
    logger.debug(f"Read {pixels.shape[0]} IDX images of shape {pixels.shape[1:]} from {path}")
    return ImageTensor(pixels.astype(np.float64) / 255.0, name=name or os.path.basename(path))


def read_idx_labels(path: str) -> np.ndarray:
    """IDX label vector as int64"""
    return _parse_idx(_read_bytes(path), IDX_LABELS_MAGIC, path).astype(np.int64)


def write_idx_images(path: str, pixels: np.ndarray):
    """Write a uint8 (n, rows, cols) stack as IDX"""
    pixels = np.asarray(pixels, dtype=np.uint8)
    with open(path, 'wb') as f:
        f.write(struct.pack('>I', IDX_IMAGES_MAGIC))
        f.write(struct.pack(f'>{pixels.ndim}I', *pixels.shape))
        f.write(pixels.tobytes())


def write_idx_labels(path: str, labels: np.ndarray):
    """Write a uint8 label vector as IDX"""
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, 'wb') as f:
        f.write(struct.pack('>I', IDX_LABELS_MAGIC))
        f.write(struct.pack('>I', labels.shape[0]))
        f.write(labels.tobytes())


def read_tensor(path: str, name: Optional[str] = None) -> ImageTensor:
    """Raw OTN1 tensor; the sidecar's name and seed are picked up when present"""
    raw = _read_bytes(path)
    if raw[:4] != TENSOR_MAGIC:
        raise FormatError(f"{path}: bad tensor magic {raw[:4]!r}", offset=0)
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated tensor rank", offset=len(raw))
    rank, = struct.unpack_from('<I', raw, 4)
    header_end = 8 + 4 * rank
    if rank == 0 or len(raw) < header_end:
        raise FormatError(f"{path}: invalid or truncated tensor dims (rank {rank})", offset=8)
    dims = struct.unpack_from(f'<{rank}I', raw, 8)

    count = int(np.prod(dims))
    if len(raw) - header_end != 8 * count:
        raise FormatError(
            f"{path}: tensor payload has {len(raw) - header_end} bytes, expected {8 * count}",
            offset=header_end,
        )
    values = np.frombuffer(raw, dtype='<f8', count=count, offset=header_end).reshape(dims).astype(np.float64)

    metadata = read_sidecar(path)
    return ImageTensor(
        values,
        name=name or metadata.get('name') or os.path.basename(path),
        seed=metadata.get('seed'),
    )


def write_tensor(path: str, tensor: ImageTensor, metadata: Optional[Dict[str, Any]] = None):
    """Write the raw OTN1 tensor plus a JSON sidecar"""
    values = np.ascontiguousarray(tensor.values, dtype='<f8')
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'wb') as f:
        f.write(TENSOR_MAGIC)
        f.write(struct.pack('<I', values.ndim))
        f.write(struct.pack(f'<{values.ndim}I', *values.shape))
        f.write(values.tobytes())

    sidecar = {'name': tensor.name, 'seed': tensor.seed, 'shape': list(values.shape)}
    sidecar.update(metadata or {})
    with open(path + '.json', 'w') as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
    logger.info(f"💾 Wrote tensor {tensor.name} {values.shape} to {path}")


def read_sidecar(path: str) -> Dict[str, Any]:
    sidecar_path = path + '.json'
    if not os.path.exists(sidecar_path):
        return {}
    with open(sidecar_path, 'r') as f:
        return json.load(f)


def load_images(path: str, name: Optional[str] = None) -> ImageTensor:
    """Load an IDX image stack or a raw tensor, detected by magic"""
    raw = _read_bytes(path)
    if raw[:4] == TENSOR_MAGIC:
        return read_tensor(path, name)
    return read_idx_images(path, name)


def load_labeled(images_path: str, labels_path: str, name: Optional[str] = None) -> LabeledDataset:
    """Pair an image file with its IDX labels into a flat LabeledDataset"""
    images = load_images(images_path, name)
    labels = read_idx_labels(labels_path)
    if labels.shape[0] != images.num_samples:
        raise DataError(f"{images_path} has {images.num_samples} images but {labels_path} has {labels.shape[0]} labels")
    return LabeledDataset(images.flatten(), labels, name=images.name)


def select_classes(data: LabeledDataset, classes: Sequence[int], name: Optional[str] = None) -> LabeledDataset:
    """Keep samples whose label is in classes, labels unchanged"""
    mask = np.isin(data.labels, list(classes))
    if not mask.any():
        raise DataError(f"Dataset '{data.name}' has no samples of classes {list(classes)}")
    return data.subset(np.nonzero(mask)[0], name)
