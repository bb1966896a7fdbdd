"""Stencil IP catalog: per-kernel resource cost and OpenMP function names."""

from __future__ import annotations

from dataclasses import dataclass

from .stencil import KernelKind


@dataclass(frozen=True)
class Resources:
    luts: int
    brams: int
    dsps: int

    def __add__(self, other):
        return Resources(self.luts + other.luts, self.brams + other.brams, self.dsps + other.dsps)

    def scaled(self, n: int) -> "Resources":
        return Resources(self.luts * n, self.brams * n, self.dsps * n)

    def fits(self, capacity: "Resources") -> bool:
        return self.luts <= capacity.luts and self.brams <= capacity.brams and self.dsps <= capacity.dsps

    def percent_of(self, capacity: "Resources") -> dict:
        return {
            "luts": 100.0 * self.luts / capacity.luts,
            "brams": 100.0 * self.brams / capacity.brams,
            "dsps": 100.0 * self.dsps / capacity.dsps,
        }

    def to_dict(self) -> dict:
        return {"luts": self.luts, "brams": self.brams, "dsps": self.dsps}


# Free-region capacity back-derived from the published per-IP percentages.
DEFAULT_CAPACITY = Resources(luts=161_840, brams=1_083, dsps=3_564)


@dataclass(frozen=True)
class CatalogEntry:
    kernel: KernelKind
    cost: Resources
    base_name: str
    variant_name: str


IP_CATALOG = {
    KernelKind.LAPLACE2D: CatalogEntry(KernelKind.LAPLACE2D, Resources(12138, 8, 16), "do_laplace2d", "hw_laplace2d"),
    KernelKind.DIFFUSION2D: CatalogEntry(KernelKind.DIFFUSION2D, Resources(25024, 8, 80), "do_diffusion2d", "hw_diffusion2d"),
    KernelKind.JACOBI9PT2D: CatalogEntry(KernelKind.JACOBI9PT2D, Resources(45733, 8, 144), "do_jacobi9", "hw_jacobi9"),
    KernelKind.LAPLACE3D: CatalogEntry(KernelKind.LAPLACE3D, Resources(21790, 65, 17), "do_laplace3d", "hw_laplace3d"),
    KernelKind.DIFFUSION3D: CatalogEntry(KernelKind.DIFFUSION3D, Resources(27615, 23, 97), "do_diffusion3d", "hw_diffusion3d"),
}

# Utilisation of one IP as a share of the free region, as published.
PUBLISHED_PERCENT = {
    KernelKind.LAPLACE2D: {"luts": 7.5, "brams": 0.7, "dsps": 0.4},
    KernelKind.DIFFUSION2D: {"luts": 15.4, "brams": 0.7, "dsps": 2.2},
    KernelKind.JACOBI9PT2D: {"luts": 28.3, "brams": 0.7, "dsps": 4.0},
    KernelKind.LAPLACE3D: {"luts": 13.5, "brams": 6.0, "dsps": 0.5},
    KernelKind.DIFFUSION3D: {"luts": 17.1, "brams": 2.1, "dsps": 2.7},
}
