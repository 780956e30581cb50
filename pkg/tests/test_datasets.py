"""
Tests for dataset files, OOD set construction and splits
"""
import gzip
import json
import struct

import numpy as np
import pytest
from scipy.stats import norm

from src.datasets.containers import ImageTensor, LabeledDataset
from src.datasets.file_formats import (
    load_images, load_labeled, read_idx_images, read_idx_labels, read_tensor, select_classes,
    write_idx_images, write_idx_labels, write_tensor,
)
from src.datasets.generators import downsample, gen_gaussian_noise, gen_uniform_noise, random_crop
from src.datasets.splits import class_split, holdout_split, subsample
from src.utils.errors import DataError, FormatError, ParameterError
from src.utils.rng import get_rng


# IDX files

def test_idx_round_trip(tiny_idx):
    images = read_idx_images(tiny_idx['images'])
    assert images.values.shape == (90, 4, 4)
    np.testing.assert_array_equal(images.values, tiny_idx['pixels'].astype(np.float64) / 255.0)
    assert images.values.min() >= 0.0 and images.values.max() <= 1.0
    np.testing.assert_array_equal(read_idx_labels(tiny_idx['labels']), tiny_idx['label_values'])


def test_gzip_idx_is_accepted(tmp_path):
    pixels = get_rng(0).integers(0, 256, size=(3, 2, 2)).astype(np.uint8)
    plain = tmp_path / 'images'
    write_idx_images(str(plain), pixels)
    packed = tmp_path / 'images.gz'
    packed.write_bytes(gzip.compress(plain.read_bytes()))

    np.testing.assert_array_equal(read_idx_images(str(packed)).values, read_idx_images(str(plain)).values)


def test_idx_format_errors(tmp_path):
    labels_as_images = tmp_path / 'labels'
    write_idx_labels(str(labels_as_images), np.array([1, 2, 3]))
    with pytest.raises(FormatError) as info:
        read_idx_images(str(labels_as_images))
    assert info.value.offset == 0

    truncated = tmp_path / 'truncated'
    truncated.write_bytes(struct.pack('>IIII', 0x803, 2, 2, 2) + b'\x00' * 7)
    with pytest.raises(FormatError):
        read_idx_images(str(truncated))

    trailing = tmp_path / 'trailing'
    trailing.write_bytes(struct.pack('>II', 0x801, 2) + b'\x01\x02\x03')
    with pytest.raises(FormatError) as info:
        read_idx_labels(str(trailing))
    assert info.value.offset == 10

    with pytest.raises(DataError):
        read_idx_images(str(tmp_path / 'absent'))


def test_load_labeled_pairs_images_and_labels(tiny_idx, tmp_path):
    data = load_labeled(tiny_idx['images'], tiny_idx['labels'])
    assert data.inputs.shape == (90, 16)
    assert data.classes.tolist() == [0, 1, 2]

    short_labels = tmp_path / 'short-labels'
    write_idx_labels(str(short_labels), tiny_idx['label_values'][:10])
    with pytest.raises(DataError):
        load_labeled(tiny_idx['images'], str(short_labels))


def test_select_classes_keeps_labels(tiny_idx):
    data = select_classes(load_labeled(tiny_idx['images'], tiny_idx['labels']), [2])
    assert len(data) == 30 and set(data.labels) == {2}
    assert data.name == 'tiny-images-idx3-ubyte'
    assert select_classes(data, [2], name='twos').name == 'twos'
    with pytest.raises(DataError):
        select_classes(data, [7])


# Raw tensors

def test_tensor_round_trip_with_sidecar(tmp_path):
    tensor = gen_uniform_noise(5, 3, 2, seed=4)
    path = tmp_path / 'noise.otn'
    write_tensor(str(path), tensor, {'kind': 'uniform'})

    loaded = read_tensor(str(path))
    np.testing.assert_array_equal(loaded.values, tensor.values)
    assert loaded.name == 'uniform' and loaded.seed == 4
    sidecar = json.loads((tmp_path / 'noise.otn.json').read_text())
    assert sidecar == {'kind': 'uniform', 'name': 'uniform', 'seed': 4, 'shape': [5, 3, 2]}
    assert load_images(str(path)).values.shape == (5, 3, 2)


def test_tensor_format_errors(tmp_path):
    path = tmp_path / 't.otn'
    write_tensor(str(path), ImageTensor(np.zeros((2, 2))))
    raw = path.read_bytes()

    path.write_bytes(raw[:-8])
    with pytest.raises(FormatError):
        read_tensor(str(path))
    path.write_bytes(b'NOPE' + raw[4:])
    with pytest.raises(FormatError) as info:
        read_tensor(str(path))
    assert info.value.offset == 0


def test_containers_reject_out_of_range_values():
    with pytest.raises(DataError):
        ImageTensor(np.full((2, 2), 1.5))
    with pytest.raises(DataError):
        LabeledDataset(np.zeros((3, 2)), np.zeros(2))


# Generators

def test_noise_is_seeded_and_in_range():
    for generate in (gen_gaussian_noise, gen_uniform_noise):
        a = generate(20, 4, 4, seed=9)
        b = generate(20, 4, 4, seed=9)
        c = generate(20, 4, 4, seed=10)
        np.testing.assert_array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)
        assert a.values.min() >= 0.0 and a.values.max() <= 1.0
        assert a.values.shape == (20, 4, 4)


def test_gaussian_noise_is_clipped():
    values = gen_gaussian_noise(10000, 28, 28, seed=1).values
    below = norm.cdf(-0.5)
    assert np.mean(values == 0.0) == pytest.approx(below, abs=0.01)
    assert np.mean(values == 1.0) == pytest.approx(below, abs=0.01)
    with pytest.raises(ParameterError):
        gen_gaussian_noise(0, 8, 8, seed=1)


def test_uniform_noise_mean():
    values = gen_uniform_noise(10000, 10, 10, seed=3).values
    assert values.size == 10 ** 6
    assert abs(values.mean() - 0.5) <= 0.002


def test_random_crop():
    values = np.arange(2 * 6 * 6, dtype=np.float64).reshape(2, 6, 6) / 100.0
    images = ImageTensor(values)
    crops = random_crop(images, 3, 4, seed=2)
    assert crops.values.shape == (2, 3, 4)
    for i in range(2):
        found = any(np.array_equal(crops.values[i], values[i, top:top + 3, left:left + 4])
                    for top in range(4) for left in range(3))
        assert found
    np.testing.assert_array_equal(random_crop(images, 3, 4, seed=2).values, crops.values)
    with pytest.raises(ParameterError):
        random_crop(images, 7, 2, seed=0)


def test_downsample_box_filter():
    values = np.array([[[0.0, 0.2, 0.4, 0.6],
                        [0.2, 0.4, 0.6, 0.8],
                        [1.0, 1.0, 0.0, 0.0],
                        [1.0, 1.0, 0.0, 0.0]]])
    small = downsample(ImageTensor(values), 2, 2).values
    np.testing.assert_allclose(small[0], [[0.2, 0.6], [1.0, 0.0]], atol=1e-12)

    row = np.array([[[0.0, 0.3, 0.9]]])
    resized = downsample(ImageTensor(row), 1, 2).values
    np.testing.assert_allclose(resized[0, 0], [(0.0 + 0.5 * 0.3) / 1.5, (0.5 * 0.3 + 0.9) / 1.5], atol=1e-12)


def test_downsample_preserves_range_and_channels():
    rgb = ImageTensor(get_rng(3).uniform(0, 1, size=(4, 9, 9, 3)))
    small = downsample(rgb, 4, 4)
    assert small.values.shape == (4, 4, 4, 3)
    assert small.values.min() >= rgb.values.min() and small.values.max() <= rgb.values.max()
    with pytest.raises(ParameterError):
        downsample(rgb, 10, 4)


# Splits

def test_class_split_relabels_in_part(tiny_idx):
    data = load_labeled(tiny_idx['images'], tiny_idx['labels'])
    in_part, out_part, label_map = class_split(data, [2, 0])

    assert label_map == {0: 0, 2: 1}
    assert len(in_part) == 60 and len(out_part) == 30
    assert set(in_part.labels) == {0, 1}
    assert set(out_part.labels) == {1}
    np.testing.assert_array_equal(in_part.inputs[in_part.labels == 1], data.inputs[data.labels == 2])

    with pytest.raises(DataError):
        class_split(data, [0, 1, 2])
    with pytest.raises(DataError):
        class_split(data, [5])


def test_holdout_split_partitions_and_is_seeded():
    data = ImageTensor(np.linspace(0, 1, 50)[:, None])
    tuning, test = holdout_split(data, 10, seed=5)
    assert len(tuning) == 10 and len(test) == 40
    combined = np.sort(np.concatenate([tuning.values.ravel(), test.values.ravel()]))
    np.testing.assert_array_equal(combined, data.values.ravel())
    assert np.all(np.diff(tuning.values.ravel()) > 0)

    again, _ = holdout_split(data, 10, seed=5)
    np.testing.assert_array_equal(again.values, tuning.values)
    for bad in (0, 50):
        with pytest.raises(ParameterError):
            holdout_split(data, bad, seed=5)


def test_subsample():
    data = ImageTensor(np.linspace(0, 1, 20)[:, None])
    assert subsample(data, 50, seed=0) is data
    assert len(subsample(data, 7, seed=0)) == 7
    with pytest.raises(ParameterError):
        subsample(data, 0, seed=0)
