import numpy as np
import pytest

from akd import CheckpointError, MlpModel
from akd.checkpoint import MAGIC, load_layers, save_layers


def test_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(1)
    model = MlpModel.initialize([3, 8, 2], rng)
    path = tmp_path / "m.ckpt"
    model.save(path)
    loaded = MlpModel.load(path)
    assert loaded.widths == model.widths
    for a, b in zip(model.params(), loaded.params()):
        assert np.array_equal(a.values, b.values)
    assert not loaded.params()[0].requires_grad
    assert MlpModel.load(path, requires_grad=True).params()[0].requires_grad


def test_save_is_byte_stable(tmp_path):
    rng = np.random.default_rng(2)
    model = MlpModel.initialize([2, 4, 3], rng)
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    model.save(p1)
    model.save(p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_bytes()[:4] == MAGIC


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(CheckpointError, match="magic"):
        load_layers(path)


def test_truncated_file_rejected(tmp_path):
    rng = np.random.default_rng(3)
    model = MlpModel.initialize([2, 3], rng)
    path = tmp_path / "t.ckpt"
    model.save(path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-4])
    with pytest.raises(CheckpointError, match="truncated"):
        load_layers(path)


def test_trailing_bytes_rejected(tmp_path):
    rng = np.random.default_rng(4)
    model = MlpModel.initialize([2, 3], rng)
    path = tmp_path / "t.ckpt"
    model.save(path)
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(CheckpointError, match="trailing"):
        load_layers(path)


def test_unchained_widths_rejected(tmp_path):
    path = tmp_path / "chain.ckpt"
    save_layers(path, [(np.zeros((2, 3)), np.zeros(3)), (np.zeros((4, 2)), np.zeros(2))])
    with pytest.raises(CheckpointError, match="chain"):
        load_layers(path)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_layers(tmp_path / "absent.ckpt")
