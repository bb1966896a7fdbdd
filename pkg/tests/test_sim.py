from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ompfpga.cluster import HOST_PORT, VFIFO_PORT, HostLink, ring_cluster
from ompfpga.experiments import build_program, input_grid, plan_program, run_point
from ompfpga.fabric.frames import MAC_HEADER_BYTES, frame_sizes
from ompfpga.fabric.ippipeline import LineBufferIP
from ompfpga.fabric.sim import (DeadlockError, RoutingError, SimParams, SimulationError, simulate)
from ompfpga.placement import SWITCH_BASE, ConfWrite, stream_bytes
from ompfpga.stencil import KernelKind, StencilKernel, run_iterations


def sim(kind, dims, n, fpgas, ips, grid=None, params=None, writes=None, **kw):
    c = ring_cluster(fpgas, ips, kind, **kw)
    g = build_program(kind, dims, n)
    p = plan_program(g, c)
    grid = np.random.default_rng(0).random(dims, dtype=np.float32) if grid is None else grid
    res = simulate(g, p.placement, p.routes, p.writes if writes is None else writes, {"V": grid}, c,
                   params=params)
    return res, p, grid


def host_transfers_in_trace(res):
    return sum(1 for _, comp, ev, _ in res.trace
               if comp.startswith("host_dma") and (ev.startswith("h2d_end") or ev.startswith("d2h_end")))


def test_single_task_all_ones():
    g = np.ones((16, 16), np.float32)
    res, _, _ = sim("laplace2d", (16, 16), 1, 1, 1, grid=g)
    assert np.array_equal(res.buffers["V"], g)
    nbytes = stream_bytes(g.nbytes)
    host = HostLink().bytes_per_sec
    ip = LineBufferIP(StencilKernel.default("laplace2d"), (16, 16))
    # in and out each pay the DMA latency; the slowest stage bounds the streaming time
    bound = 2 * SimParams().dma_latency_s + max(nbytes / host, ip.latency_cycles() / 200e6)
    assert res.elapsed >= bound


def test_fig1_impulse():
    g = np.zeros((64, 64), np.float32)
    g[32, 32] = 4.0
    res, _, _ = sim("laplace2d", (64, 64), 4, 2, 2, grid=g)
    k = StencilKernel.default("laplace2d")
    assert np.array_equal(res.buffers["V"], run_iterations(k, g, 4))
    assert host_transfers_in_trace(res) == 2 == res.host_transfers
    assert res.frames >= 1 and sum(res.link_bytes.values()) > 0


def test_byte_conservation_on_links():
    res, p, g = sim("laplace2d", (40, 40), 4, 2, 2)
    payload = stream_bytes(g.nbytes)
    frames = frame_sizes(payload)
    per_crossing = payload + MAC_HEADER_BYTES * len(frames)
    assert res.link_bytes == {"F0->F1": per_crossing, "F1->F0": per_crossing}
    assert res.frames == 2 * len(frames)


def test_elapsed_bounds_busy_time():
    for fpgas, ips, n in [(1, 1, 1), (2, 2, 7), (3, 1, 5)]:
        res, _, _ = sim("diffusion2d", (32, 24), n, fpgas, ips)
        assert res.elapsed >= max(res.busy.values())


def test_pipelined_chain_overlaps():
    dims = (256, 64)
    k = StencilKernel.default("laplace2d")
    ip = LineBufferIP(k, dims)
    clock = 200e6
    C, L = ip.beats, ip.fill_cycles
    for n in (2, 4, 8):
        res, _, _ = sim("laplace2d", dims, n, 1, n)
        want = (C + n * L) / clock
        assert res.compute_time == pytest.approx(want, rel=0.05)
        assert res.compute_time < 0.75 * n * C / clock


def test_deterministic():
    a, _, _ = sim("jacobi9pt2d", (20, 20), 5, 3, 1)
    b, _, _ = sim("jacobi9pt2d", (20, 20), 5, 3, 1)
    assert a.trace == b.trace and a.summary_json() == b.summary_json() and a.trace_csv() == b.trace_csv()


@pytest.mark.parametrize("fpgas,ips,n", [(2, 1, 2), (3, 2, 9), (6, 1, 13), (2, 2, 10)])
def test_slower_links_never_help(fpgas, ips, n):
    times = []
    for bps in (100e9, 40e9, 10e9, 5e9, 1e9):
        res, _, _ = sim("laplace2d", (48, 32), n, fpgas, ips, link_bps=bps)
        times.append(res.elapsed)
    assert times == sorted(times)


def test_pcie_gen1_slower_than_gen3():
    a, _, _ = sim("laplace2d", (64, 64), 2, 1, 2, host_link=HostLink.preset(1))
    b, _, _ = sim("laplace2d", (64, 64), 2, 1, 2, host_link=HostLink.preset(3))
    assert a.elapsed > b.elapsed


def test_missing_switch_route_is_reported():
    _, p, g = sim("laplace2d", (8, 8), 2, 1, 2)
    writes = [w for w in p.writes if not (w.meaning == "switch_route" and w.offset == SWITCH_BASE + 4 * 3)]
    with pytest.raises(RoutingError, match="switch0: in-port 3"):
        sim("laplace2d", (8, 8), 2, 1, 2, grid=g, writes=writes)


def test_unprogrammed_ip_is_reported():
    _, p, g = sim("diffusion2d", (8, 8), 1, 1, 1)
    writes = [w for w in p.writes if w.meaning != "ip_coeff"]
    with pytest.raises(SimulationError, match="ip0.0"):
        sim("diffusion2d", (8, 8), 1, 1, 1, grid=g, writes=writes)


def test_stranded_data_is_a_deadlock():
    _, p, g = sim("laplace2d", (8, 8), 1, 1, 1)
    # send the result to temporal storage instead of home: nobody ever reads it
    writes = [replace(w, value=VFIFO_PORT) if w.meaning == "switch_route" and w.value == HOST_PORT else w
              for w in p.writes]
    with pytest.raises(DeadlockError, match="vfifo0"):
        sim("laplace2d", (8, 8), 1, 1, 1, grid=g, writes=writes)


def test_wrong_host_buffer_shape():
    c = ring_cluster(1, 1)
    graph = build_program("laplace2d", (8, 8), 1)
    p = plan_program(graph, c)
    with pytest.raises(SimulationError):
        simulate(graph, p.placement, p.routes, p.writes, {"V": np.zeros((9, 8), np.float32)}, c)
    with pytest.raises(SimulationError):
        simulate(graph, p.placement, p.routes, p.writes, {}, c)


def test_jumbo_frames_and_small_bursts_keep_results():
    for params in (SimParams(max_payload=9000), SimParams(burst_beats=1), SimParams(max_payload=32)):
        res, _, g = sim("diffusion3d", (5, 6, 7), 4, 2, 1, params=params)
        assert np.array_equal(res.buffers["V"], run_iterations(StencilKernel.default("diffusion3d"), g, 4))


def test_multi_hop_forwarding():
    # Custom placement: a chain across the ring that skips a board goes two hops.
    from ompfpga.placement import Placement, gen_conf_writes, infer_routes
    c = ring_cluster(4, 1)
    graph = build_program("laplace2d", (8, 8), 2)
    p = plan_program(graph, c).placement
    a0, a1 = p[0], p[1]
    moved = Placement({0: a0, 1: replace(a1, fpga=2)}, 1)
    routes = infer_routes(graph, moved, c)
    kinds = routes.routes[(0, 1)].hop_kinds()
    assert kinds.count("NetLink") == 2
    writes = gen_conf_writes(graph, moved, routes)
    g = np.random.default_rng(2).random((8, 8), dtype=np.float32)
    res = simulate(graph, moved, routes, writes, {"V": g}, c)
    assert np.array_equal(res.buffers["V"], run_iterations(StencilKernel.default("laplace2d"), g, 2))
    with pytest.raises(Exception, match="misrouted"):
        simulate(graph, moved, routes, writes, {"V": g}, c, params=SimParams(net_forwarding=False))


def ip_visit_order(res):
    return [comp for _, comp, ev, _ in sorted(res.trace, key=lambda r: r[0]) if ev.startswith("start:")]


@pytest.mark.parametrize("fpgas", [1, 2, 3])
@pytest.mark.parametrize("ips", [1, 2, 3, 4])
def test_replay_follows_placement(fpgas, ips):
    # Configured only from CONF writes, the fabric visits the IPs in placement order.
    for n in (1, fpgas * ips, 2 * fpgas * ips + 1):
        res, p, g = sim("laplace2d", (12, 10), n, fpgas, ips)
        want = [f"ip{a.fpga}.{a.slot}" for _, a in sorted(p.placement.assignments.items())]
        assert ip_visit_order(res) == want
        assert res.host_transfers == 2
        assert np.array_equal(res.buffers["V"], run_iterations(StencilKernel.default("laplace2d"), g, n))


@settings(max_examples=25)
@given(kind=st.sampled_from(list(KernelKind)), n=st.integers(1, 12),
       cluster=st.sampled_from([(1, 1), (1, 4), (2, 2), (3, 2), (6, 4)]), seed=st.integers(0, 2**31),
       data=st.data())
def test_equivalence_property(kind, n, cluster, seed, data):
    if kind.rank == 2:
        dims = data.draw(st.tuples(st.integers(3, 64), st.integers(3, 64)))
    else:
        dims = data.draw(st.tuples(st.integers(3, 12), st.integers(3, 12), st.integers(3, 12)))
    pt = run_point(kind, dims, n, ring_cluster(6, 4, kind.value).restrict(*cluster), seed=seed, check=False)
    want = run_iterations(StencilKernel.default(kind), input_grid(dims, seed), n)
    assert np.array_equal(pt.output, want)


def test_trace_exports():
    res, _, _ = sim("laplace2d", (8, 8), 2, 2, 1)
    lines = res.trace_csv().splitlines()
    assert lines[0] == "time_s,component,event,bytes"
    assert len(lines) == len(res.trace) + 1
    assert '"host_transfers": 2' in res.summary_json()
