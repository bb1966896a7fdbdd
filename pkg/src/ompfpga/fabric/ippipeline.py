"""Shift-register stencil IP: 256-bit stream in, 8 processing elements.

The IP sees the grid only as a raster stream of float32 cells.  Every tap of
the stencil is a fixed offset into that stream (``-w`` is the cell above,
``+1`` the one to the right, ``-h*w`` the previous plane), so a cell can be
produced as soon as the stream has advanced past its furthest forward tap.
Only a sliding window of the stream is retained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..stencil import StencilError, StencilKernel

CELLS_PER_BEAT = 8
BEAT_BYTES = 4 * CELLS_PER_BEAT
PE_COUNT = 8


class StreamError(ValueError):
    pass


@dataclass(frozen=True)
class StreamBeat:
    payload: bytes
    last: bool = False

    def __post_init__(self):
        if len(self.payload) != BEAT_BYTES:
            raise StreamError(f"a beat carries {BEAT_BYTES} bytes, got {len(self.payload)}")

    def cells(self) -> np.ndarray:
        return np.frombuffer(self.payload, dtype="<f4").astype(np.float32)


def beat_count(cells: int) -> int:
    return -(-cells // CELLS_PER_BEAT)


def pad_cells(flat: np.ndarray) -> np.ndarray:
    n = beat_count(flat.size) * CELLS_PER_BEAT
    if n == flat.size:
        return flat
    out = np.zeros(n, dtype=np.float32)
    out[:flat.size] = flat
    return out


def grid_to_beats(grid) -> list:
    flat = pad_cells(np.ascontiguousarray(grid, dtype=np.float32).ravel())
    raw = flat.astype("<f4").tobytes()
    nb = flat.size // CELLS_PER_BEAT
    return [StreamBeat(raw[i * BEAT_BYTES:(i + 1) * BEAT_BYTES], i == nb - 1) for i in range(nb)]


def beats_to_grid(beats, shape) -> np.ndarray:
    cells = np.concatenate([b.cells() for b in beats]) if beats else np.zeros(0, np.float32)
    n = math.prod(shape)
    if cells.size < n:
        raise StreamError(f"stream holds {cells.size} cells, grid needs {n}")
    return cells[:n].reshape(shape).copy()


def line_buffer_cells(shape) -> int:
    """Shift-register length: two rows plus three cells, and two planes in 3-D."""
    row = shape[-1]
    if len(shape) == 2:
        return 2 * row + 3
    return 2 * shape[-2] * row + 2 * row + 3


class LineBufferIP:
    """One stencil iteration over a streamed grid."""

    def __init__(self, kernel: StencilKernel, shape):
        shape = tuple(int(x) for x in shape)
        if len(shape) != kernel.rank:
            raise StencilError(f"{kernel.kind.value} needs rank {kernel.rank}, dims are {shape}")
        if min(shape) < 3:
            raise StencilError(f"every grid dimension must be >= 3, got {shape}")
        self.kernel = kernel
        self.shape = shape
        self.n = math.prod(shape)
        strides = [math.prod(shape[i + 1:]) for i in range(len(shape))]
        self.taps = [(sum(o * s for o, s in zip(off, strides)), ci) for off, ci in kernel.terms]
        offs = [o for o, _ in self.taps] + [0]
        self.lookahead = max(offs)
        self.lookbehind = -min(offs)
        self.buffer_cells = line_buffer_cells(shape)
        self.fill_cycles = max(math.ceil(self.buffer_cells / CELLS_PER_BEAT),
                               (CELLS_PER_BEAT - 1 + self.lookahead) // CELLS_PER_BEAT + 1)
        self.beats = beat_count(self.n)
        self._buf = np.zeros(0, dtype=np.float32)
        self._base = 0
        self.received = 0
        self.emitted = 0

    @property
    def done(self) -> bool:
        return self.emitted >= self.n

    def emit_cycle(self, cell: int) -> int:
        """Cycle at which 1-based output ``cell`` leaves the IP when fed one beat per cycle."""
        return self.fill_cycles + math.ceil(cell / CELLS_PER_BEAT)

    def latency_cycles(self) -> int:
        return self.emit_cycle(self.n)

    def push(self, cells: np.ndarray) -> np.ndarray:
        """Shift ``cells`` in; return every output cell that became computable.

        Output is produced in whole beats except at the end of the grid.
        Padding cells past the end of the grid are accepted and ignored.
        """
        cells = np.asarray(cells, dtype=np.float32)
        take = min(cells.size, self.n - self.received)
        if take > 0:
            self._buf = np.concatenate([self._buf, cells[:take]])
            self.received += take
        if self.received >= self.n:
            limit = self.n
        else:
            limit = max(0, self.received - self.lookahead)
            limit -= limit % CELLS_PER_BEAT
        if limit <= self.emitted:
            return np.zeros(0, dtype=np.float32)
        out = self._compute(self.emitted, limit)
        self.emitted = limit
        keep_from = max(self._base, self.emitted - self.lookbehind)
        if keep_from > self._base:
            self._buf = self._buf[keep_from - self._base:]
            self._base = keep_from
        return out

    def _interior(self, idx: np.ndarray) -> np.ndarray:
        mask = np.ones(idx.size, dtype=bool)
        rem = idx
        for extent in reversed(self.shape):
            rem, pos = np.divmod(rem, extent)
            mask &= (pos >= 1) & (pos <= extent - 2)
        return mask

    def _compute(self, start: int, stop: int) -> np.ndarray:
        idx = np.arange(start, stop)
        local = idx - self._base
        hi = self._buf.size - 1
        center = self._buf[local]
        acc = None
        for off, ci in self.taps:
            v = self._buf[np.clip(local + off, 0, hi)]
            term = v if ci is None else self.kernel.coeffs[ci] * v
            acc = term if acc is None else acc + term
        if self.kernel.scale is not None:
            acc = self.kernel.scale * acc
        return np.where(self._interior(idx), acc, center).astype(np.float32)


def ip_process_stream(kernel: StencilKernel, dims, beats) -> tuple:
    """Feed ``beats`` one per cycle; return ``(out_beats, latency_cycles)``."""
    beats = list(beats)
    ip = LineBufferIP(kernel, dims)
    if len(beats) != ip.beats:
        raise StreamError(f"{dims} needs {ip.beats} beats, got {len(beats)}")
    if not beats[-1].last:
        raise StreamError("short stream: final beat lacks the last marker")
    if any(b.last for b in beats[:-1]):
        raise StreamError("last marker before the end of the stream")
    produced = []
    for b in beats:
        out = ip.push(b.cells())
        if out.size:
            produced.append(out)
    if not ip.done:
        raise StreamError("stream ended before the grid was complete")
    flat = pad_cells(np.concatenate(produced))
    raw = flat.astype("<f4").tobytes()
    nb = flat.size // CELLS_PER_BEAT
    out_beats = [StreamBeat(raw[i * BEAT_BYTES:(i + 1) * BEAT_BYTES], i == nb - 1) for i in range(nb)]
    return out_beats, ip.latency_cycles()
