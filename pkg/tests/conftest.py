"""
Shared fixtures for the ODIN toolkit tests
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from src.datasets.file_formats import write_idx_images, write_idx_labels
from src.utils.rng import get_rng
from tests.helpers import random_model


@pytest.fixture
def rng():
    return get_rng(12345)


@pytest.fixture
def small_model():
    return random_model(7)


@pytest.fixture
def tiny_idx(tmp_path):
    """90 4x4 images in three classes (class k has a bright row k) written as IDX files"""
    rng = get_rng(99)
    n_per_class = 30
    images, labels = [], []
    for label in range(3):
        for _ in range(n_per_class):
            image = rng.integers(0, 40, size=(4, 4))
            image[label, :] = rng.integers(200, 256, size=4)
            images.append(image)
            labels.append(label)
    images = np.array(images, dtype=np.uint8)
    labels = np.array(labels, dtype=np.uint8)

    images_path = tmp_path / 'tiny-images-idx3-ubyte'
    labels_path = tmp_path / 'tiny-labels-idx1-ubyte'
    write_idx_images(str(images_path), images)
    write_idx_labels(str(labels_path), labels)
    return {'images': str(images_path), 'labels': str(labels_path),
            'pixels': images, 'label_values': labels}


@pytest.fixture(scope="session")
def mnist_dir():
    """Directory holding the four MNIST IDX files, or skip"""
    path = os.getenv('MNIST_DIR')
    if not path or not os.path.isdir(path):
        pytest.skip("MNIST_DIR not set; full-scale MNIST checks skipped")
    return path
