import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, strategies as st

from ompfpga.cluster import ring_cluster
from ompfpga.experiments import run_point
from ompfpga.metrics import (CSV_COLUMNS, ExperimentRecord, ReportError, compute_gflops, compute_speedup,
                             emit_csv, emit_report, emit_svg, load_csv)
from ompfpga.stencil import KernelKind


def rec(kind="laplace2d", fpgas=1, elapsed=1.0, dims=(64, 64)):
    return ExperimentRecord(KernelKind(kind), dims, 24, fpgas, 4, elapsed, 1.0)


def test_gflops_examples():
    assert compute_gflops("laplace2d", (4, 4), 1, 1.0) == pytest.approx(16e-9)
    assert compute_gflops("laplace2d", (4, 4), 0, 0.0) == 0.0
    assert compute_gflops("laplace2d", (4096, 512), 240, 2.0) == pytest.approx(4 * 4094 * 510 * 240 / 2.0 / 1e9)
    assert compute_gflops("laplace2d", (4, 4), 1, 1.0, interior_only=False) == pytest.approx(64e-9)
    with pytest.raises(ReportError):
        compute_gflops("laplace2d", (4, 4), 1, 0.0)


def test_gflops_from_a_simulation_matches_hand_formula():
    pt = run_point("laplace2d", (64, 32), 8, ring_cluster(2, 4))
    hand = 4 * 62 * 30 * 8 / pt.record.elapsed_s / 1e9
    assert pt.record.gflops == pytest.approx(hand)


def test_gflops_ignores_grid_content():
    c = ring_cluster(1, 2)
    a = run_point("laplace2d", (32, 32), 2, c, seed=1)
    b = run_point("laplace2d", (32, 32), 2, c, seed=2)
    assert a.record.gflops == b.record.gflops


def test_speedup():
    rs = compute_speedup([rec(fpgas=1, elapsed=2.0), rec(fpgas=2, elapsed=1.0)])
    assert [r.speedup for r in rs] == [1.0, 2.0]
    with pytest.raises(ReportError):
        compute_speedup([rec(fpgas=2)])


def test_csv_shape_and_round_trip():
    rs = [rec(k.value, f, 1.0 / f, (8, 8) if k.rank == 2 else (4, 5, 6)) for k in KernelKind for f in range(1, 7)]
    text = emit_csv(rs)
    lines = text.splitlines()
    assert len(lines) == 31
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert CSV_COLUMNS[:10] == ["kernel", "h", "w", "d", "iterations", "fpgas", "ips_per_fpga",
                                "elapsed_s", "gflops", "speedup"]
    assert load_csv(text) == rs
    assert lines[-1].split(",")[1:4] == ["5", "6", "4"]


@given(st.floats(1e-9, 10), st.floats(0, 1e3), st.integers(1, 6))
def test_csv_round_trip_property(elapsed, gflops, fpgas):
    r = ExperimentRecord(KernelKind.JACOBI9PT2D, (9, 7), 3, fpgas, 1, elapsed, gflops, 1.5)
    assert load_csv(emit_csv([r])) == [r]


def test_svg_is_standalone():
    svg = emit_svg([rec()], "speedup")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert "<script" not in svg and "href" not in svg
    many = emit_report([rec(k.value, f) for k in KernelKind for f in (1, 2, 3)], "svg", metric="gflops")
    assert many.count("<polyline") == 5


def test_report_errors():
    with pytest.raises(ReportError):
        emit_csv([])
    with pytest.raises(ReportError):
        emit_svg([])
    with pytest.raises(ReportError):
        emit_report([rec()], "pdf")
