"""Task-parallel stencil pipelines on a simulated multi-FPGA cluster."""

from .stencil import KernelKind, StencilKernel, apply_stencil, run_iterations
from .taskgraph import TaskGraph, TaskRegion, chain_pipeline, validate_acyclic
from .variants import VariantRegistry
from .cluster import ClusterDesc, load_config, load_config_file, ring_cluster, validate_cluster
from .placement import gen_conf_writes, infer_routes, map_tasks

__version__ = "0.1.0"

__all__ = [
    "KernelKind", "StencilKernel", "apply_stencil", "run_iterations",
    "TaskGraph", "TaskRegion", "chain_pipeline", "validate_acyclic",
    "VariantRegistry",
    "ClusterDesc", "load_config", "load_config_file", "ring_cluster", "validate_cluster",
    "gen_conf_writes", "infer_routes", "map_tasks",
]
