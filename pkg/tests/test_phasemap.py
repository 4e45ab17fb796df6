"""Phase-difference map extraction and its CSV/PGM file formats."""

import numpy as np
import numpy.testing as npt
import pytest

from wavemlp.errors import ConfigurationError, UnsupportedModeError
from wavemlp.model import build, preset
from wavemlp.phasemap import (
    export_phase_map,
    phase_difference_map,
    phase_grid,
    read_pgm,
    read_phase_map_csv,
    write_pgm,
)


def _rng(seed=0):
    return np.random.default_rng(seed)


def _image(seed=0, h=32, w=32):
    return _rng(seed).normal(size=(h, w, 3))


def test_phase_grid_shapes():
    m = build(preset("tiny"), seed=0)
    theta3 = phase_grid(m, _image(), 3)
    theta4 = phase_grid(m, _image(), 4)
    assert theta3.shape == (2, 2, 24)
    assert theta4.shape == (1, 1, 32)


def test_phase_grid_rejects_static_and_none_modes():
    m = build(preset("tiny", phase_mode="none"), seed=0)
    with pytest.raises(UnsupportedModeError):
        phase_grid(m, _image(), 4)
    m = build(preset("tiny", phase_mode="static", input_size=(32, 32)), seed=0)
    with pytest.raises(UnsupportedModeError):
        phase_grid(m, _image(), 4)


def test_phase_grid_rejects_early_stages():
    m = build(preset("tiny"), seed=0)
    with pytest.raises(ConfigurationError):
        phase_grid(m, _image(), 2)


def test_map_diagonal_is_one_and_range_bounded():
    theta = _rng(1).uniform(-9, 9, (3, 4, 5))
    vals = phase_difference_map(theta, 7)
    assert vals.shape == (21, 28)
    assert vals.min() >= -1.0 and vals.max() <= 1.0
    centers = vals[3::7, 3::7]
    npt.assert_allclose(centers, 1.0, atol=1e-12)


def test_map_is_symmetric_under_pair_swap():
    theta = _rng(2).uniform(-9, 9, (4, 3, 6))
    win, half = 5, 2
    vals = phase_difference_map(theta, win)
    h, w, _ = theta.shape
    for i in range(h):
        for j in range(w):
            for di in range(-half, half + 1):
                for dj in range(-half, half + 1):
                    ki, kj = i + di, j + dj
                    if 0 <= ki < h and 0 <= kj < w:
                        a = vals[i * win + half + di, j * win + half + dj]
                        b = vals[ki * win + half - di, kj * win + half - dj]
                        assert abs(a - b) < 1e-10


def test_map_out_of_grid_cells_are_zero():
    theta = np.zeros((2, 2, 3))
    vals = phase_difference_map(theta, 5)
    assert vals[0, 0] == 0.0  # top-left corner looks outside the grid
    assert vals[2, 2] == 1.0  # centre of the (0, 0) patch


def test_export_round_trips_csv_and_pgm(tmp_path):
    m = build(preset("tiny"), seed=0)
    csv_path, pgm_path = export_phase_map(m, _image(3), 3, str(tmp_path))
    vals = phase_difference_map(phase_grid(m, _image(3), 3), m.windows[2])
    back = read_phase_map_csv(csv_path)
    npt.assert_array_equal(back, vals)  # full precision text round trip
    pixels = read_pgm(pgm_path)
    expected = np.rint((np.clip(vals, -1, 1) + 1) * 0.5 * 255).astype(np.uint8)
    npt.assert_array_equal(pixels, expected)
    # decoded grey levels land within one quantization step of the values
    decoded = pixels.astype(np.float64) / 255.0 * 2.0 - 1.0
    assert np.abs(decoded - vals).max() <= 1.0 / 255.0


def test_pgm_writer_reader_inverse(tmp_path):
    vals = _rng(4).uniform(-1, 1, (5, 9))
    path = str(tmp_path / "x.pgm")
    write_pgm(path, vals)
    pixels = read_pgm(path)
    assert pixels.shape == (5, 9)
    write_pgm(path, vals)  # re-encode equality
    npt.assert_array_equal(read_pgm(path), pixels)


def test_map_rejects_even_window():
    with pytest.raises(ConfigurationError):
        phase_difference_map(np.zeros((2, 2, 3)), 4)
