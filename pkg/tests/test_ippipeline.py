import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ompfpga.fabric.ippipeline import (CELLS_PER_BEAT, LineBufferIP, StreamBeat, StreamError, beats_to_grid,
                                       grid_to_beats, ip_process_stream, line_buffer_cells)
from ompfpga.stencil import KernelKind, StencilError, StencilKernel, apply_stencil, run_iterations


def test_ones_is_fixed_point():
    k = StencilKernel.default("laplace2d")
    g = np.ones((4, 4), np.float32)
    out, _ = ip_process_stream(k, g.shape, grid_to_beats(g))
    assert np.array_equal(beats_to_grid(out, g.shape), g)


def test_impulse_matches_oracle_beats():
    k = StencilKernel.default("laplace2d")
    g = np.zeros((5, 5), np.float32)
    g[2, 2] = 4.0
    out, _ = ip_process_stream(k, g.shape, grid_to_beats(g))
    want = grid_to_beats(apply_stencil(k, g))
    assert [b.payload for b in out] == [b.payload for b in want]
    assert out[-1].last


def test_three_ip_chain():
    k = StencilKernel.default("diffusion2d")
    g = np.random.default_rng(3).random((9, 11), dtype=np.float32)
    beats = grid_to_beats(g)
    for _ in range(3):
        beats, _ = ip_process_stream(k, g.shape, beats)
    assert np.array_equal(beats_to_grid(beats, g.shape), run_iterations(k, g, 3))


def test_latency_formula():
    k = StencilKernel.default("laplace2d")
    shape = (17, 9)
    ip = LineBufferIP(k, shape)
    cells = 17 * 9
    assert ip.buffer_cells == 2 * 9 + 3
    fill = math.ceil(ip.buffer_cells / CELLS_PER_BEAT)
    assert ip.fill_cycles == fill
    _, lat = ip_process_stream(k, shape, grid_to_beats(np.zeros(shape, np.float32)))
    assert lat == fill + math.ceil(cells / CELLS_PER_BEAT)
    assert ip.emit_cycle(1) == fill + 1
    assert ip.emit_cycle(9) == fill + 2


def test_3d_line_buffer_uses_plane_stride():
    assert line_buffer_cells((4, 6, 7)) == 2 * 6 * 7 + 2 * 7 + 3


def test_stream_errors():
    k = StencilKernel.default("laplace2d")
    g = np.zeros((5, 5), np.float32)
    beats = grid_to_beats(g)
    with pytest.raises(StreamError):
        ip_process_stream(k, g.shape, beats[:-1])
    unmarked = beats[:-1] + [StreamBeat(beats[-1].payload, False)]
    with pytest.raises(StreamError):
        ip_process_stream(k, g.shape, unmarked)
    with pytest.raises(StencilError):
        ip_process_stream(k, (5, 5, 5), beats)
    with pytest.raises(StreamError):
        StreamBeat(b"123")


def test_outputs_start_before_input_ends():
    k = StencilKernel.default("laplace2d")
    ip = LineBufferIP(k, (20, 16))
    g = np.arange(320, dtype=np.float32)
    first = ip.push(g[:64])
    assert first.size > 0 and first.size % CELLS_PER_BEAT == 0


@pytest.mark.parametrize("kind", list(KernelKind))
@given(data=st.data())
def test_matches_oracle(kind, data):
    if kind.rank == 2:
        shape = data.draw(st.tuples(st.integers(3, 20), st.integers(3, 20)))
    else:
        shape = data.draw(st.tuples(st.integers(3, 7), st.integers(3, 7), st.integers(3, 7)))
    seed = data.draw(st.integers(0, 2**32 - 1))
    g = np.random.default_rng(seed).standard_normal(shape).astype(np.float32)
    k = StencilKernel.default(kind)
    out, _ = ip_process_stream(k, shape, grid_to_beats(g))
    assert len(out) == math.ceil(g.size / 8)
    assert np.array_equal(beats_to_grid(out, shape), apply_stencil(k, g))


@given(st.lists(st.integers(1, 40), min_size=1, max_size=30))
def test_any_push_split_gives_same_result(chunks):
    k = StencilKernel.default("jacobi9pt2d")
    g = np.random.default_rng(7).random((9, 13), dtype=np.float32).ravel()
    ip = LineBufferIP(k, (9, 13))
    out, pos = [], 0
    for c in chunks:
        out.append(ip.push(g[pos:pos + c]))
        pos += c
    out.append(ip.push(g[pos:]))
    assert ip.done
    assert np.array_equal(np.concatenate(out), apply_stencil(k, g.reshape(9, 13)).ravel())
