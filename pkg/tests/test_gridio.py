import numpy as np
import pytest

from ompfpga.gridio import dumps_grid, grid_to_csv, load_grid, loads_grid, save_grid


def test_round_trip_2d_and_3d(tmp_path, rng):
    for shape in [(4, 5), (3, 4, 5)]:
        g = rng.random(shape, dtype=np.float32)
        p = tmp_path / "g.bin"
        save_grid(p, g)
        back = load_grid(p)
        assert back.shape == shape and np.array_equal(back, g)


def test_header_layout():
    raw = dumps_grid(np.zeros((3, 4), np.float32))
    assert raw[:4] == b"GRD1"
    assert len(raw) == 20 + 12 * 4


def test_bad_inputs():
    raw = dumps_grid(np.zeros((3, 4), np.float32))
    with pytest.raises(ValueError):
        loads_grid(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        loads_grid(raw[:-4])
    with pytest.raises(ValueError):
        loads_grid(raw[:10])


def test_csv_export():
    text = grid_to_csv(np.arange(9, dtype=np.float32).reshape(3, 3))
    assert text.splitlines()[0].split(",") == ["0.0", "1.0", "2.0"]
