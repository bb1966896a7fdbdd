import numpy as np
import pytest

from ompfpga.catalog import IP_CATALOG
from ompfpga.fabric.ippipeline import beats_to_grid, grid_to_beats, ip_process_stream
from ompfpga.stencil import StencilKernel, apply_stencil
from ompfpga.variants import VariantError, VariantKind, VariantRegistry


def fresh():
    r = VariantRegistry()
    r.register_variant("do_laplace2d", "hw_laplace2d", {"vc709"}, "ip_variant")
    r.register_variant("do_laplace2d", "do_laplace2d", set(), "cpu_base")
    return r


def test_register_and_resolve():
    r = fresh()
    assert r.resolve("do_laplace2d", {"vc709"}).variant_name == "hw_laplace2d"
    assert r.resolve("do_laplace2d", set()).variant_name == "do_laplace2d"
    assert r.resolve("do_laplace2d", set()).kind is VariantKind.CPU_BASE


def test_duplicate_rejected():
    r = fresh()
    with pytest.raises(VariantError):
        r.register_variant("do_laplace2d", "hw_laplace2d", {"vc709"}, "ip_variant")


def test_fallback_without_variant():
    r = VariantRegistry()
    r.register_variant("do_jacobi9", "do_jacobi9", set(), "cpu_base")
    assert r.resolve("do_jacobi9", {"vc709"}).kind is VariantKind.CPU_BASE


def test_unknown_base():
    with pytest.raises(VariantError):
        fresh().resolve("do_nothing", {"vc709"})


def test_ip_variant_needs_catalog_entry():
    r = VariantRegistry(catalog={})
    with pytest.raises(VariantError):
        r.register_variant("do_laplace2d", "hw_laplace2d", {"vc709"}, "ip_variant", kernel="laplace2d")


def test_most_specific_wins_and_ties_rejected():
    r = fresh()
    r.register_variant("do_laplace2d", "hw_laplace2d_fast", {"vc709", "fast"}, "ip_variant")
    assert r.resolve("do_laplace2d", {"vc709", "fast"}).variant_name == "hw_laplace2d_fast"
    assert r.resolve("do_laplace2d", {"vc709"}).variant_name == "hw_laplace2d"
    with pytest.raises(VariantError):
        r.register_variant("do_laplace2d", "hw_other", {"vc709", "slow"}, "ip_variant")


def test_empty_context_is_always_cpu():
    r = VariantRegistry.from_catalog()
    for e in IP_CATALOG.values():
        assert r.resolve(e.base_name, ()).kind is VariantKind.CPU_BASE


def test_ip_variant_behaves_like_cpu_base(rng):
    r = VariantRegistry.from_catalog()
    for kind, e in IP_CATALOG.items():
        hw = r.resolve(e.base_name, {"vc709"})
        assert hw.kind is VariantKind.IP_VARIANT and hw.ip_catalog_ref is kind
        k = StencilKernel.default(kind)
        shape = (7, 9) if kind.rank == 2 else (4, 5, 6)
        g = rng.random(shape, dtype=np.float32)
        out, _ = ip_process_stream(k, shape, grid_to_beats(g))
        assert np.array_equal(beats_to_grid(out, shape), apply_stencil(k, g))
