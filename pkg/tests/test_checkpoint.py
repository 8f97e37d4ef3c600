import numpy as np
import pytest

from sacts.checkpoint import load_checkpoint, save_checkpoint
from sacts.errors import CheckpointError


class TestContainer:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "x.ckpt"
        meta = {"hyper": {"window_size": 5}, "note": "abc"}
        arrays = {
            "w": np.arange(12, dtype=np.float64).reshape(3, 4),
            "b": np.array([1.5]),
            "scalar": np.array(7.0),
            "ints": np.array([3, 4], dtype=np.int64),
        }
        save_checkpoint(path, meta, arrays)
        meta2, arrays2 = load_checkpoint(path)
        assert meta2 == meta
        for name, arr in arrays.items():
            assert arrays2[name].dtype == arr.dtype
            assert np.array_equal(arrays2[name], arr)

    def test_bytes_are_deterministic(self, tmp_path):
        arrays = {"a": np.linspace(0, 1, 100), "z": np.ones((2, 2))}
        p1, p2 = tmp_path / "a", tmp_path / "b"
        save_checkpoint(p1, {"k": 1}, arrays)
        save_checkpoint(p2, {"k": 1}, dict(reversed(list(arrays.items()))))
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad"
        path.write_bytes(b"XXXX")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc"
        save_checkpoint(path, {}, {"w": np.ones(100)})
        path.write_bytes(path.read_bytes()[:-50])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)
