"""Command line front end: ``run``, ``validate`` and ``oracle``.

Exit codes: 0 success, 1 validation failure, 2 simulation failure,
3 equivalence failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .cluster import (ConfigError, HostLink, fpga_usage, load_config_file, ring_cluster,
                      validate_resources)
from .experiments import (VALIDATION_ERRORS, EquivalenceError, parse_grid, parse_sweep, sweep)
from .fabric.frames import FrameError
from .fabric.sim import SimParams, SimulationError
from .gridio import load_grid, save_grid
from .metrics import emit_csv, emit_svg
from .placement import conf_to_text
from .stencil import KernelKind, StencilKernel, run_iterations

EXIT_OK, EXIT_INVALID, EXIT_SIM, EXIT_EQUIV = 0, 1, 2, 3

ENV_CONFIG = "FPGA_FABRIC_CONFIG"

# IPs per board each kernel gets when no config file is given.
DEFAULT_IPS_PER_FPGA = {
    KernelKind.LAPLACE2D: 4,
    KernelKind.LAPLACE3D: 2,
    KernelKind.DIFFUSION2D: 1,
    KernelKind.DIFFUSION3D: 1,
    KernelKind.JACOBI9PT2D: 1,
}


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _cluster(args, kind):
    path = args.config or os.environ.get(ENV_CONFIG)
    if path:
        return load_config_file(path)
    return ring_cluster(6, DEFAULT_IPS_PER_FPGA[kind], kind.value)


def cmd_run(args) -> int:
    try:
        kind = KernelKind(args.kernel)
        dims = parse_grid(args.grid)
        if args.iters < 0:
            raise ValueError("--iters must be >= 0")
        cluster = _cluster(args, kind)
        axis, values = parse_sweep(args.sweep) if args.sweep else (None, [])
        host_link = HostLink.preset({"gen1": 1, "gen2": 2, "gen3": 3}[args.pcie]) if args.pcie else None
        if args.clock_hz:
            cluster = replace(cluster, clock_hz=int(args.clock_hz))
        params = SimParams(burst_beats=args.burst_beats, max_payload=args.max_payload,
                           laplace3d_verbatim=not args.laplace3d_symmetric,
                           trace=bool(args.dump_trace))
    except (ConfigError, ValueError, KeyError) as exc:
        _err(str(exc))
        return EXIT_INVALID

    try:
        results = sweep(kind, dims, args.iters, cluster, axis, values, fpgas=args.fpgas,
                        ips_per_fpga=args.ips, seed=args.seed, params=params,
                        host_link=host_link, jobs=args.jobs)
    except EquivalenceError as exc:
        _err(f"equivalence check failed: {exc}")
        return EXIT_EQUIV
    except (SimulationError, FrameError) as exc:
        _err(f"simulation failed: {exc}")
        return EXIT_SIM
    except VALIDATION_ERRORS as exc:
        _err(str(exc))
        return EXIT_INVALID

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = [r.record for r in results]
    (out / "results.csv").write_text(emit_csv(records))
    x_axis = axis or "fpgas"
    (out / "speedup.svg").write_text(emit_svg(records, "speedup", x_axis))
    (out / "gflops.svg").write_text(emit_svg(records, "gflops", x_axis))
    last = results[-1]
    if args.dump_graph and last.plan:
        (out / "graph.json").write_text(last.plan.graph.to_json())
    if args.dump_plan and last.plan:
        doc = {
            "placement": last.plan.placement.to_dict(),
            "routes": last.plan.routes.to_dict()["routes"],
            "host_transfers": last.plan.routes.host_transfers(),
        }
        (out / "plan.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        (out / "conf.txt").write_text(conf_to_text(last.plan.writes))
    if args.dump_trace and last.sim:
        (out / "trace.csv").write_text(last.sim.trace_csv())
    if args.save_output:
        save_grid(args.save_output, last.output)

    for r in records:
        print(f"{r.kernel.value} fpgas={r.fpgas} ips={r.ips_per_fpga} iters={r.iterations} "
              f"elapsed={r.elapsed_s:.6g}s gflops={r.gflops:.4g} speedup={r.speedup:.3f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    path = args.config or os.environ.get(ENV_CONFIG)
    if not path:
        _err("no config given (pass a path or set FPGA_FABRIC_CONFIG)")
        return EXIT_INVALID
    try:
        cluster = load_config_file(path)
    except (ConfigError, OSError) as exc:
        _err(str(exc))
        return EXIT_INVALID
    ring = "ring OK" if cluster.topology.value == "ring" else "custom topology OK"
    print(f"{len(cluster.fpgas)} FPGAs, {cluster.n_ips} IPs, {ring}")
    print(f"{'fpga':>4} {'ips':>4} {'LUTs':>8} {'%':>6} {'BRAMs':>6} {'%':>6} {'DSPs':>6} {'%':>6}")
    for f in cluster.fpgas:
        used = fpga_usage(f)
        pct = used.percent_of(f.capacity)
        print(f"{f.id:>4} {len(f.ips):>4} {used.luts:>8} {pct['luts']:>6.1f} {used.brams:>6} "
              f"{pct['brams']:>6.1f} {used.dsps:>6} {pct['dsps']:>6.1f}")
    violations = validate_resources(cluster)
    for v in violations:
        print(f"over budget: {v}")
    return EXIT_INVALID if violations else EXIT_OK


def cmd_oracle(args) -> int:
    try:
        kind = KernelKind(args.kernel)
        if args.iters < 0:
            raise ValueError("--iters must be >= 0")
        grid = load_grid(args.input)
        kernel = StencilKernel.default(kind, verbatim=not args.laplace3d_symmetric)
        out = run_iterations(kernel, grid, args.iters)
        save_grid(args.output, out)
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INVALID
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ompfpga", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in KernelKind]

    r = sub.add_parser("run", help="plan and simulate a pipelined stencil program")
    r.add_argument("--kernel", choices=kinds, default="laplace2d")
    r.add_argument("--grid", default="256x64", help="h x w, or h x w x d")
    r.add_argument("--iters", type=int, default=24)
    r.add_argument("--config", help=f"cluster JSON (default: ${ENV_CONFIG}, else a 6-board ring)")
    r.add_argument("--sweep", help="fpgas=1..6 | ips=1..4 | iterations=30,60")
    r.add_argument("--fpgas", type=int, help="use only the first N boards")
    r.add_argument("--ips", type=int, help="use only the first N IP slots of every board")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default="out")
    r.add_argument("--pcie", choices=["gen1", "gen2", "gen3"])
    r.add_argument("--clock-hz", type=float)
    r.add_argument("--burst-beats", type=int, default=64)
    r.add_argument("--max-payload", type=int, default=1500)
    r.add_argument("--laplace3d-symmetric", action="store_true",
                   help="use the 1/6 six-neighbour Laplace-3D instead of the literal form")
    r.add_argument("--dump-graph", action="store_true")
    r.add_argument("--dump-plan", action="store_true")
    r.add_argument("--dump-trace", action="store_true")
    r.add_argument("--save-output", help="write the final grid of the last point here")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a cluster config and its resource budget")
    v.add_argument("config", nargs="?")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="run the software stencil on a grid file")
    o.add_argument("--kernel", choices=kinds, required=True)
    o.add_argument("--input", required=True)
    o.add_argument("--iters", type=int, required=True)
    o.add_argument("--output", required=True)
    o.add_argument("--laplace3d-symmetric", action="store_true")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)

