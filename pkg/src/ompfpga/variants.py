"""``declare variant`` resolution.

A base function name (``do_laplace2d``) resolves to a hardware IP variant
(``hw_laplace2d``) when the active device context contains every tag of the
variant's match context, otherwise to the CPU base implementation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .catalog import IP_CATALOG
from .stencil import KernelKind


class VariantError(LookupError):
    pass


class VariantKind(str, enum.Enum):
    CPU_BASE = "cpu_base"
    IP_VARIANT = "ip_variant"


@dataclass(frozen=True)
class VariantEntry:
    base_name: str
    variant_name: str
    match_ctx: frozenset
    kind: VariantKind
    kernel: KernelKind
    ip_catalog_ref: KernelKind | None = None


class VariantRegistry:
    def __init__(self, catalog=None):
        self._catalog = dict(IP_CATALOG if catalog is None else catalog)
        self._entries: list[VariantEntry] = []

    def __len__(self):
        return len(self._entries)

    def register_variant(self, base_name: str, variant_name: str, match_ctx, kind,
                         kernel=None) -> int:
        if not base_name or not variant_name:
            raise VariantError("variant names must be non-empty")
        kind = VariantKind(kind)
        ctx = frozenset(match_ctx)
        if kind is VariantKind.CPU_BASE and ctx:
            raise VariantError("a cpu_base entry must have an empty match context")
        kernel = KernelKind(kernel) if kernel is not None else self._kernel_for(base_name)
        ref = None
        if kind is VariantKind.IP_VARIANT:
            if kernel not in self._catalog:
                raise VariantError(f"{variant_name!r} has no IP catalog entry for {kernel.value}")
            ref = kernel
        for e in self._entries:
            if e.base_name == base_name and e.match_ctx == ctx:
                raise VariantError(f"duplicate registration of {base_name!r} for context {sorted(ctx)}")
            if (e.base_name == base_name and e.kind is VariantKind.IP_VARIANT
                    and kind is VariantKind.IP_VARIANT and len(e.match_ctx) == len(ctx)
                    and not e.match_ctx.isdisjoint(ctx)):
                raise VariantError(f"ambiguous variants for {base_name!r}: equally specific contexts overlap")
        self._entries.append(VariantEntry(base_name, variant_name, ctx, kind, kernel, ref))
        return len(self._entries) - 1

    def _kernel_for(self, base_name: str) -> KernelKind:
        for entry in self._catalog.values():
            if base_name in (entry.base_name, entry.variant_name):
                return entry.kernel
        for e in self._entries:
            if e.base_name == base_name:
                return e.kernel
        raise VariantError(f"cannot infer the kernel implemented by {base_name!r}")

    def resolve(self, base_name: str, active_ctx=()) -> VariantEntry:
        ctx = frozenset(active_ctx)
        candidates = [e for e in self._entries if e.base_name == base_name]
        if not candidates:
            raise VariantError(f"unknown base function {base_name!r}")
        matching = [e for e in candidates if e.kind is VariantKind.IP_VARIANT and e.match_ctx <= ctx]
        if matching:
            return max(matching, key=lambda e: len(e.match_ctx))
        for e in candidates:
            if e.kind is VariantKind.CPU_BASE:
                return e
        raise VariantError(f"{base_name!r} has no variant for context {sorted(ctx)} and no CPU base")

    @classmethod
    def from_catalog(cls, catalog=None, device_arch: str = "vc709") -> "VariantRegistry":
        """CPU base plus one IP variant per catalog entry."""
        reg = cls(catalog)
        for entry in reg._catalog.values():
            reg.register_variant(entry.base_name, entry.base_name, (), VariantKind.CPU_BASE, entry.kernel)
            reg.register_variant(entry.base_name, entry.variant_name, {device_arch},
                                 VariantKind.IP_VARIANT, entry.kernel)
        return reg
