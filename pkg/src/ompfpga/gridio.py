"""Grid files: raw little-endian float32 with a small header, plus CSV export.

Binary layout::

    b"GRD1"  rank:u32  dims:u32 x 3  data:float32[...]

``dims`` is the array shape in memory order, zero padded for rank 2.
"""

from __future__ import annotations

import io
import struct

import numpy as np

from .stencil import StencilError, as_grid

MAGIC = b"GRD1"
_HEADER = struct.Struct("<4sI3I")
HEADER_SIZE = _HEADER.size


def dumps_grid(grid) -> bytes:
    g = as_grid(grid)
    dims = list(g.shape) + [0] * (3 - g.ndim)
    return _HEADER.pack(MAGIC, g.ndim, *dims) + g.astype("<f4").tobytes()


def loads_grid(data: bytes) -> np.ndarray:
    if len(data) < HEADER_SIZE:
        raise StencilError("grid file too short for header")
    magic, rank, *dims = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise StencilError(f"bad grid magic {magic!r}")
    if rank not in (2, 3):
        raise StencilError(f"bad grid rank {rank}")
    shape = tuple(dims[:rank])
    body = data[HEADER_SIZE:]
    expected = 4 * int(np.prod(shape))
    if len(body) != expected:
        raise StencilError(f"grid body is {len(body)} bytes, header implies {expected}")
    arr = np.frombuffer(body, dtype="<f4").astype(np.float32).reshape(shape)
    return as_grid(arr)


def save_grid(path, grid) -> None:
    with open(path, "wb") as f:
        f.write(dumps_grid(grid))


def load_grid(path) -> np.ndarray:
    with open(path, "rb") as f:
        return loads_grid(f.read())


def grid_to_csv(grid) -> str:
    """One CSV row per grid row; 3-D planes are stacked top to bottom."""
    g = as_grid(grid)
    rows = g.reshape(-1, g.shape[-1])
    buf = io.StringIO()
    for row in rows:
        buf.write(",".join(repr(float(x)) for x in row))
        buf.write("\n")
    return buf.getvalue()
