"""Golden stencil kernels.

Grids are float32 numpy arrays in memory (streaming) order: ``(h, w)`` for
2-D and ``(d, h, w)`` for 3-D.  In the kernel formulas ``i`` runs along the
width (fastest axis), ``j`` along the height and ``k`` along the depth, so the
terms of every kernel are listed in the order a raster stream delivers them.

Updates are Jacobi style: every interior cell of the result is computed from
the input grid only, boundary cells are copied through unchanged.  Float
additions associate strictly left to right in the order the terms are written.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import prod

import numpy as np


class StencilError(ValueError):
    pass


class KernelKind(str, enum.Enum):
    LAPLACE2D = "laplace2d"
    DIFFUSION2D = "diffusion2d"
    JACOBI9PT2D = "jacobi9pt2d"
    LAPLACE3D = "laplace3d"
    DIFFUSION3D = "diffusion3d"

    @property
    def rank(self) -> int:
        return 3 if self.value.endswith("3d") else 2


# (offset, coefficient index) per term; offsets are (dj, di) or (dk, dj, di).
_TERMS = {
    KernelKind.LAPLACE2D: [((-1, 0), None), ((0, -1), None), ((0, 1), None), ((1, 0), None)],
    KernelKind.DIFFUSION2D: [((-1, 0), 0), ((0, -1), 1), ((0, 0), 2), ((0, 1), 3), ((1, 0), 4)],
    KernelKind.JACOBI9PT2D: [
        ((-1, -1), 0), ((-1, 0), 1), ((-1, 1), 2),
        ((0, -1), 3), ((0, 0), 4), ((0, 1), 5),
        ((1, -1), 6), ((1, 0), 7), ((1, 1), 8),
    ],
    # Written form, including the repeated i+1 and j+1 terms.
    KernelKind.LAPLACE3D: [
        ((0, -1, 0), None), ((0, 0, -1), None), ((0, 0, 1), None),
        ((0, 1, 0), None), ((0, 0, 1), None), ((0, 1, 0), None),
    ],
    KernelKind.DIFFUSION3D: [
        ((0, -1, 0), 0), ((0, 0, -1), 1), ((-1, 0, 0), 2),
        ((0, 0, 0), 3), ((0, 0, 1), 4), ((0, 1, 0), 5),
    ],
}

# Six distinct neighbours with a 1/6 factor, selectable with verbatim=False.
_LAPLACE3D_SYMMETRIC = [
    ((-1, 0, 0), None), ((0, -1, 0), None), ((0, 0, -1), None),
    ((0, 0, 1), None), ((0, 1, 0), None), ((1, 0, 0), None),
]

_COEFF_COUNT = {
    KernelKind.LAPLACE2D: 0,
    KernelKind.DIFFUSION2D: 5,
    KernelKind.JACOBI9PT2D: 9,
    KernelKind.LAPLACE3D: 0,
    KernelKind.DIFFUSION3D: 6,
}

# Dyadic weights summing to one, so constant grids stay exactly constant.
DEFAULT_COEFFS = {
    KernelKind.LAPLACE2D: (),
    KernelKind.DIFFUSION2D: (0.125, 0.125, 0.5, 0.125, 0.125),
    KernelKind.JACOBI9PT2D: (0.0625, 0.125, 0.0625, 0.125, 0.25, 0.125, 0.0625, 0.125, 0.0625),
    KernelKind.LAPLACE3D: (),
    KernelKind.DIFFUSION3D: (0.125, 0.125, 0.125, 0.375, 0.125, 0.125),
}


@dataclass(frozen=True)
class StencilKernel:
    kind: KernelKind
    coeffs: tuple = ()
    verbatim: bool = True
    terms: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = KernelKind(self.kind)
        coeffs = tuple(np.float32(c) for c in self.coeffs)
        if len(coeffs) != _COEFF_COUNT[kind]:
            raise StencilError(
                f"{kind.value} takes {_COEFF_COUNT[kind]} coefficients, got {len(coeffs)}"
            )
        terms = _TERMS[kind]
        if kind is KernelKind.LAPLACE3D and not self.verbatim:
            terms = _LAPLACE3D_SYMMETRIC
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def default(cls, kind, verbatim=True) -> "StencilKernel":
        kind = KernelKind(kind)
        return cls(kind, DEFAULT_COEFFS[kind], verbatim)

    @property
    def rank(self) -> int:
        return self.kind.rank

    @property
    def scale(self):
        """Factor applied to the sum of a coefficient-free kernel, else None."""
        if self.kind is KernelKind.LAPLACE2D:
            return np.float32(0.25)
        if self.kind is KernelKind.LAPLACE3D:
            return np.float32(0.25) if self.verbatim else np.float32(1.0 / 6.0)
        return None

    @property
    def window(self) -> tuple:
        return (3,) * self.rank


def as_grid(grid) -> np.ndarray:
    """Validate and return ``grid`` as a C-contiguous float32 array."""
    arr = np.ascontiguousarray(grid, dtype=np.float32)
    if arr.ndim not in (2, 3):
        raise StencilError(f"grid rank must be 2 or 3, got {arr.ndim}")
    if min(arr.shape) < 3:
        raise StencilError(f"every grid dimension must be >= 3, got {arr.shape}")
    return arr


def interior_cells(shape) -> int:
    return prod(n - 2 for n in shape)


def apply_stencil(kernel: StencilKernel, grid) -> np.ndarray:
    v = as_grid(grid)
    if v.ndim != kernel.rank:
        raise StencilError(f"{kernel.kind.value} needs a rank-{kernel.rank} grid, got rank {v.ndim}")
    acc = None
    for offset, ci in kernel.terms:
        view = v[tuple(slice(1 + o, n - 1 + o) for o, n in zip(offset, v.shape))]
        term = view if ci is None else kernel.coeffs[ci] * view
        acc = term if acc is None else acc + term
    if kernel.scale is not None:
        acc = kernel.scale * acc
    out = v.copy()
    out[(slice(1, -1),) * v.ndim] = acc
    return out


def run_iterations(kernel: StencilKernel, grid, t: int) -> np.ndarray:
    if t < 0:
        raise StencilError("iteration count must be >= 0")
    v = as_grid(grid).copy()
    for _ in range(t):
        v = apply_stencil(kernel, v)
    return v


def flops_per_cell(kernel: StencilKernel) -> int:
    """Adds plus multiplies in one interior cell update, as written."""
    n = len(kernel.terms)
    muls = sum(ci is not None for _, ci in kernel.terms)
    return (n - 1) + muls + (kernel.scale is not None)
