"""
Tests for weight file persistence
"""
import struct

import numpy as np
import pytest

from tests.helpers import random_model
from src.net.model_io import MODEL_MAGIC, load_model, model_from_bytes, model_to_bytes, save_model
from src.utils.errors import DataError, FormatError


def test_save_load_is_bit_exact(tmp_path):
    model = random_model(3, dims=(5, 6, 3))
    path = tmp_path / 'model.odn'
    save_model(model, str(path))

    loaded = load_model(str(path))
    assert loaded.parameters_equal(model)
    assert path.read_bytes() == model_to_bytes(loaded)


def test_layout_header():
    model = random_model(0, dims=(2, 3))
    raw = model_to_bytes(model)

    assert raw[:4] == MODEL_MAGIC
    assert struct.unpack_from('<I', raw, 4) == (1,)
    assert struct.unpack_from('<2I', raw, 8) == (2, 3)
    assert len(raw) == 4 + 4 + 8 + 8 * (2 * 3 + 3)
    np.testing.assert_array_equal(np.frombuffer(raw, '<f8', count=6, offset=16).reshape(3, 2), model.weights[0])


def test_bad_magic_reports_offset_zero():
    raw = b'XXXX' + model_to_bytes(random_model(0, dims=(2, 2)))[4:]
    with pytest.raises(FormatError) as info:
        model_from_bytes(raw)
    assert info.value.offset == 0


def test_truncated_and_trailing_bytes_are_rejected():
    raw = model_to_bytes(random_model(0, dims=(3, 4, 2)))
    with pytest.raises(FormatError):
        model_from_bytes(raw[:-1])
    with pytest.raises(FormatError):
        model_from_bytes(raw[:10])
    with pytest.raises(FormatError) as info:
        model_from_bytes(raw + b'\x00')
    assert info.value.offset == len(raw)


def test_non_finite_weights_are_rejected():
    raw = bytearray(model_to_bytes(random_model(0, dims=(2, 2))))
    raw[16:24] = struct.pack('<d', float('nan'))
    with pytest.raises(FormatError):
        model_from_bytes(bytes(raw))


def test_missing_file_is_a_data_error(tmp_path):
    with pytest.raises(DataError):
        load_model(str(tmp_path / 'absent.odn'))
