"""
Four Laplace tasks on two boards
================================

"""

# a 4-step pipeline over one buffer, two boards with two IPs each
import numpy as np
from ompfpga.cluster import ring_cluster
from ompfpga.experiments import build_program, plan_program
from ompfpga.fabric import simulate
from ompfpga.placement import conf_to_text
from ompfpga.stencil import StencilKernel, run_iterations

cluster = ring_cluster(2, 2)
graph = build_program("laplace2d", (64, 64), 4)
print(graph.to_json()[:300], "...")

# placement fills board 0 then board 1
plan = plan_program(graph, cluster)
for task, a in sorted(plan.placement.assignments.items()):
    print("task", task, "-> fpga", a.fpga, "slot", a.slot, "wave", a.wave)

# the middle edge leaves board 0 over the ring
for (src, dst), route in sorted(plan.routes.routes.items()):
    print(src, "->", dst, route.hop_kinds())

# the register writes the host would issue
print(conf_to_text(plan.writes))

# an impulse spreads by one cell per step
grid = np.zeros((64, 64), np.float32)
grid[32, 32] = 4.0
res = simulate(graph, plan.placement, plan.routes, plan.writes, {"V": grid}, cluster)
out = res.buffers["V"]
print(out[28:37, 28:37])
print("matches software:", np.array_equal(out, run_iterations(StencilKernel.default("laplace2d"), grid, 4)))
print(res.summary_json())
