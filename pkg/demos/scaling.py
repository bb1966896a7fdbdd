"""
Speedup and GFLOPS sweeps
=========================

"""

# the desk-sized grid, 240 steps, 4 IPs per board
from ompfpga.cluster import ring_cluster
from ompfpga.experiments import sweep
from ompfpga.metrics import emit_csv, emit_svg

grid = (1024, 128)

# 10 Gb/s links: the ring, not the IPs, sets the pace
slow = sweep("laplace2d", grid, 240, ring_cluster(6, 4), "fpgas", range(1, 7))
print([round(r.record.speedup, 2) for r in slow])

# same sweep with 100 Gb/s links
fast = sweep("laplace2d", grid, 240, ring_cluster(6, 4, link_bps=100e9), "fpgas", range(1, 7))
print([round(r.record.speedup, 2) for r in fast])

# more IPs per board at a fixed step count
ips = sweep("laplace2d", grid, 240, ring_cluster(6, 4), "ips", [1, 2, 3, 4])
print([round(r.record.gflops, 1) for r in ips])

# one IP per board across step counts stays flat
flat = sweep("laplace2d", grid, 30, ring_cluster(6, 4), "iterations", [30, 60, 120, 240], ips_per_fpga=1)
print([round(r.record.gflops, 2) for r in flat])

print(emit_csv([r.record for r in slow]))
with open("speedup.svg", "w") as f:
    f.write(emit_svg([r.record for r in fast], "speedup"))
