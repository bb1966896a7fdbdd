"""Build the pipelined stencil program, plan it, simulate it, check it."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .catalog import IP_CATALOG
from .cluster import ClusterDesc, ConfigError, HostLink
from .fabric.sim import SimParams, SimResult, simulate
from .metrics import ExperimentRecord, compute_gflops
from .placement import PlanError, RouteTable, gen_conf_writes, infer_routes, map_tasks
from .stencil import KernelKind, StencilError, StencilKernel, run_iterations
from .taskgraph import TaskGraph, chain_pipeline
from .variants import VariantError


class EquivalenceError(AssertionError):
    """The simulated result differs from the software stencil."""


# Everything a bad input or an impossible plan can raise before simulation.
VALIDATION_ERRORS = (ConfigError, PlanError, StencilError, VariantError, ValueError)


@dataclass(frozen=True)
class Plan:
    graph: TaskGraph
    placement: object
    routes: RouteTable
    writes: list


@dataclass
class PointResult:
    record: ExperimentRecord
    plan: Plan
    sim: SimResult
    output: np.ndarray = field(repr=False)


def build_program(kind, dims, iterations: int, kernel: StencilKernel | None = None) -> TaskGraph:
    kind = KernelKind(kind)
    kernel = kernel or StencilKernel.default(kind)
    region = chain_pipeline(iterations, IP_CATALOG[kind].base_name, tuple(dims), kernel.coeffs)
    return region.finalize_at_sync()


def plan_program(graph: TaskGraph, cluster: ClusterDesc) -> Plan:
    placement = map_tasks(graph, cluster)
    routes = infer_routes(graph, placement, cluster)
    return Plan(graph, placement, routes, gen_conf_writes(graph, placement, routes))


def input_grid(dims, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).random(tuple(dims), dtype=np.float32)


def run_point(kind, dims, iterations: int, cluster: ClusterDesc, fpgas: int | None = None,
              ips_per_fpga: int | None = None, seed: int = 0, grid: np.ndarray | None = None,
              params: SimParams | None = None, host_link: HostLink | None = None,
              check: bool = True) -> PointResult:
    """Simulate one configuration; raises EquivalenceError when the fabric
    disagrees with the software stencil."""
    kind = KernelKind(kind)
    params = params or SimParams()
    kernel = StencilKernel.default(kind, verbatim=params.laplace3d_verbatim)
    sub = cluster.restrict(fpgas, ips_per_fpga, host_link)
    dims = tuple(dims)
    grid = input_grid(dims, seed) if grid is None else np.asarray(grid, dtype=np.float32)
    if grid.shape != dims:
        raise StencilError(f"grid shape {grid.shape} does not match dims {dims}")
    ips = max(len(f.ips) for f in sub.fpgas)
    if iterations == 0:
        # No task, no offload: the buffer never leaves the host.
        rec = ExperimentRecord(kind, dims, 0, len(sub.fpgas), ips, 0.0, 0.0, 1.0)
        return PointResult(rec, None, None, grid.copy())
    graph = build_program(kind, dims, iterations, kernel)
    plan = plan_program(graph, sub)
    res = simulate(graph, plan.placement, plan.routes, plan.writes, {"V": grid}, sub, params=params)
    out = res.buffers["V"]
    if check:
        want = run_iterations(kernel, grid, iterations)
        if not np.array_equal(out, want):
            bad = int(np.count_nonzero(out != want))
            raise EquivalenceError(f"{kind.value} {dims} x{iterations}: {bad} cells differ from the oracle")
    rec = ExperimentRecord(
        kind, dims, iterations, len(sub.fpgas), ips, res.elapsed,
        compute_gflops(kernel, dims, iterations, res.elapsed), 1.0, res.compute_time,
        compute_gflops(kernel, dims, iterations, res.compute_time) if res.compute_time > 0 else 0.0)
    return PointResult(rec, plan, res, out)


def parse_sweep(text: str) -> tuple:
    """``"fpgas=1..6"`` or ``"iterations=30,60,120"`` -> (axis, [values])."""
    try:
        axis, values = text.split("=", 1)
    except ValueError:
        raise ValueError(f"sweep must look like axis=values, got {text!r}") from None
    axis = axis.strip()
    if axis not in ("fpgas", "ips", "iterations"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    out = []
    for part in values.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (int(x) for x in part.split(".."))
            if hi < lo:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ValueError("sweep has no values")
    return axis, out


def parse_grid(text: str) -> tuple:
    """``"256x64"`` (h x w) or ``"16x16x8"`` (h x w x d) -> memory-order dims."""
    try:
        parts = [int(x) for x in text.lower().split("x")]
    except ValueError:
        raise ValueError(f"bad grid {text!r}") from None
    if len(parts) == 2:
        dims = tuple(parts)
    elif len(parts) == 3:
        h, w, d = parts
        dims = (d, h, w)
    else:
        raise ValueError(f"grid needs 2 or 3 extents, got {text!r}")
    if min(dims) < 3:
        raise ValueError(f"every grid extent must be >= 3, got {text!r}")
    return dims


def _point(args):
    kind, dims, iters, cluster, fpgas, ips, seed, params, host_link = args
    return run_point(kind, dims, iters, cluster, fpgas, ips, seed, params=params, host_link=host_link)


def sweep(kind, dims, iterations: int, cluster: ClusterDesc, axis: str | None, values=(),
          fpgas: int | None = None, ips_per_fpga: int | None = None, seed: int = 0,
          params: SimParams | None = None, host_link: HostLink | None = None, jobs: int = 1) -> list:
    """Run every point of a sweep; results come back in sweep order."""
    points = []
    for v in (values if axis else [None]):
        f, i, n = fpgas, ips_per_fpga, iterations
        if axis == "fpgas":
            f = v
        elif axis == "ips":
            i = v
        elif axis == "iterations":
            n = v
        points.append((KernelKind(kind), tuple(dims), n, cluster, f, i, seed, params, host_link))
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_point, points))
    else:
        results = [_point(p) for p in points]
    return with_speedup(results, axis)


def with_speedup(results, axis) -> list:
    """Speedup against the single-FPGA point when there is one, else the first point."""
    if not results:
        return results
    base = next((r for r in results if r.record.fpgas == 1), results[0])
    out = []
    for r in results:
        sp = base.record.elapsed_s / r.record.elapsed_s if r.record.elapsed_s > 0 else 1.0
        out.append(replace(r, record=replace(r.record, speedup=sp)))
    return out
