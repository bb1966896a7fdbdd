"""OpenMP-style task regions with depend/map clauses.

Tasks created inside a :class:`TaskRegion` are recorded, never dispatched.
The whole graph is frozen at the synchronization point by
:meth:`TaskRegion.finalize_at_sync`, which is what lets the offloading layer
see producer/consumer pairs before any data moves.

Dependence edges follow the OpenMP 4.5 list-item rules:

* ``in x``  depends on the last task that wrote ``x`` (RAW);
* ``out x`` depends on every reader of ``x`` since its last write (WAR), or on
  the last writer when there were no such readers (WAW).

``inout`` is expressed by listing the same symbol in both ``deps_in`` and
``deps_out``.
"""

from __future__ import annotations

import enum
import graphlib
import json
from dataclasses import dataclass, field


class TaskGraphError(RuntimeError):
    pass


class CycleError(TaskGraphError):
    pass


class Cause(str, enum.Enum):
    RAW = "RAW"
    WAW = "WAW"
    WAR = "WAR"
    # Ordering imposed by a blocking (non-nowait) target.
    SYNC = "SYNC"


_CAUSE_RANK = {Cause.RAW: 0, Cause.WAW: 1, Cause.WAR: 2, Cause.SYNC: 3}


class MapDir(str, enum.Enum):
    TO = "to"
    FROM = "from"
    TOFROM = "tofrom"

    @property
    def copies_in(self) -> bool:
        return self in (MapDir.TO, MapDir.TOFROM)

    @property
    def copies_out(self) -> bool:
        return self in (MapDir.FROM, MapDir.TOFROM)


@dataclass(frozen=True)
class DepVar:
    """A depend-clause list item, e.g. ``deps[3]``. Matched by symbol only."""

    symbol: str

    def __str__(self):
        return self.symbol


@dataclass(frozen=True)
class MapEntry:
    buffer: str
    direction: MapDir
    length: int


@dataclass(frozen=True)
class TaskArgs:
    buffer: str
    dims: tuple
    coeffs: tuple = ()


@dataclass(frozen=True)
class TaskNode:
    id: int
    kernel_ref: str
    args: TaskArgs
    deps_in: tuple
    deps_out: tuple
    maps: tuple
    nowait: bool = True


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    cause: Cause


@dataclass(frozen=True)
class TaskGraph:
    nodes: tuple
    edges: tuple
    buffers: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.nodes)

    def predecessors(self, tid: int) -> list:
        return [e.src for e in self.edges if e.dst == tid]

    def has_edge(self, src: int, dst: int) -> bool:
        return any(e.src == src and e.dst == dst for e in self.edges)

    def to_dict(self) -> dict:
        return {
            "buffers": {name: size for name, size in sorted(self.buffers.items())},
            "nodes": [
                {
                    "id": n.id,
                    "kernel": n.kernel_ref,
                    "args": {
                        "buffer": n.args.buffer,
                        "dims": list(n.args.dims),
                        "coeffs": [float(c) for c in n.args.coeffs],
                    },
                    "deps_in": [d.symbol for d in n.deps_in],
                    "deps_out": [d.symbol for d in n.deps_out],
                    "maps": [
                        {"buffer": m.buffer, "direction": m.direction.value, "length": m.length}
                        for m in n.maps
                    ],
                    "nowait": n.nowait,
                }
                for n in self.nodes
            ],
            "edges": [{"src": e.src, "dst": e.dst, "cause": e.cause.value} for e in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "TaskGraph":
        nodes = []
        for n in doc["nodes"]:
            a = n["args"]
            nodes.append(TaskNode(
                id=n["id"],
                kernel_ref=n["kernel"],
                args=TaskArgs(a["buffer"], tuple(a["dims"]), tuple(a["coeffs"])),
                deps_in=tuple(DepVar(s) for s in n["deps_in"]),
                deps_out=tuple(DepVar(s) for s in n["deps_out"]),
                maps=tuple(MapEntry(m["buffer"], MapDir(m["direction"]), m["length"]) for m in n["maps"]),
                nowait=n["nowait"],
            ))
        edges = tuple(Edge(e["src"], e["dst"], Cause(e["cause"])) for e in doc["edges"])
        return cls(tuple(nodes), edges, dict(doc.get("buffers", {})))


class TaskRegion:
    """Graph builder for one ``parallel``/``single`` region (the control thread)."""

    def __init__(self):
        self._nodes: list[TaskNode] = []
        self._edges: dict[tuple, Cause] = {}
        self._buffers: dict[str, int] = {}
        self._last_writer: dict[DepVar, int] = {}
        self._readers: dict[DepVar, list] = {}
        self._barrier: int | None = None
        self._finalized = False

    @property
    def finalized(self) -> bool:
        return self._finalized

    def register_buffer(self, name: str, nbytes: int) -> str:
        if nbytes <= 0:
            raise TaskGraphError(f"buffer {name!r} must have a positive size")
        if name in self._buffers and self._buffers[name] != nbytes:
            raise TaskGraphError(f"buffer {name!r} re-registered with a different size")
        self._buffers[name] = nbytes
        return name

    def _add_edge(self, src: int, dst: int, cause: Cause):
        if src == dst:
            return
        key = (src, dst)
        old = self._edges.get(key)
        if old is None or _CAUSE_RANK[cause] < _CAUSE_RANK[old]:
            self._edges[key] = cause

    def task_create(self, kernel_ref: str, args: TaskArgs, deps_in=(), deps_out=(),
                    maps=(), nowait: bool = True) -> int:
        if self._finalized:
            raise TaskGraphError("cannot create tasks in a finalized region")
        if not kernel_ref:
            raise TaskGraphError("kernel_ref must be non-empty")
        deps_in = tuple(d if isinstance(d, DepVar) else DepVar(str(d)) for d in deps_in)
        deps_out = tuple(d if isinstance(d, DepVar) else DepVar(str(d)) for d in deps_out)
        maps = tuple(maps)
        for m in maps:
            if m.length <= 0:
                raise TaskGraphError(f"map of {m.buffer!r} has non-positive length")
            if m.buffer not in self._buffers:
                raise TaskGraphError(f"map refers to unregistered buffer {m.buffer!r}")
            if m.length > self._buffers[m.buffer]:
                raise TaskGraphError(f"map of {m.buffer!r} exceeds the buffer size")

        tid = len(self._nodes)
        if self._barrier is not None:
            self._add_edge(self._barrier, tid, Cause.SYNC)

        for d in deps_in:
            if d in self._last_writer:
                self._add_edge(self._last_writer[d], tid, Cause.RAW)
            readers = self._readers.setdefault(d, [])
            if tid not in readers:
                readers.append(tid)
        for d in deps_out:
            readers = [r for r in self._readers.get(d, []) if r != tid]
            if readers:
                for r in readers:
                    self._add_edge(r, tid, Cause.WAR)
            elif d in self._last_writer:
                self._add_edge(self._last_writer[d], tid, Cause.WAW)
            self._last_writer[d] = tid
            self._readers[d] = []

        self._nodes.append(TaskNode(tid, kernel_ref, args, deps_in, deps_out, maps, nowait))
        if not nowait:
            # A blocking target waits for everything before it and holds
            # back everything after it.
            for prev in range(tid):
                self._add_edge(prev, tid, Cause.SYNC)
            self._barrier = tid
        return tid

    def finalize_at_sync(self) -> TaskGraph:
        if self._finalized:
            raise TaskGraphError("region already finalized")
        self._finalized = True
        edges = tuple(Edge(s, d, c) for (s, d), c in sorted(self._edges.items()))
        graph = TaskGraph(tuple(self._nodes), edges, dict(self._buffers))
        validate_acyclic(graph)
        return graph


def validate_acyclic(graph: TaskGraph) -> None:
    """Raise :class:`CycleError` unless every edge points forward in creation order."""
    ids = {n.id for n in graph.nodes}
    sorter = graphlib.TopologicalSorter({n.id: set() for n in graph.nodes})
    for e in graph.edges:
        if e.src not in ids or e.dst not in ids:
            raise TaskGraphError(f"edge {e.src}->{e.dst} references an unknown task")
        sorter.add(e.dst, e.src)
    try:
        tuple(sorter.static_order())
    except graphlib.CycleError as exc:
        raise CycleError(f"cycle detected: {exc.args[1]}") from None
    backward = [e for e in graph.edges if e.src >= e.dst]
    if backward:
        e = backward[0]
        raise CycleError(f"edge {e.src}->{e.dst} points backward in creation order")


def chain_pipeline(n: int, kernel_ref: str, dims: tuple, coeffs=(), buffer: str = "V",
                     region: TaskRegion | None = None) -> TaskRegion:
    """Record the canonical pipelined loop: task i reads deps[i], writes deps[i+1],
    and maps the whole grid ``tofrom``."""
    region = region or TaskRegion()
    nbytes = 4
    for d in dims:
        nbytes *= d
    region.register_buffer(buffer, nbytes)
    args = TaskArgs(buffer, tuple(dims), tuple(coeffs))
    for i in range(n):
        region.task_create(
            kernel_ref,
            args,
            deps_in=[DepVar(f"deps[{i}]")],
            deps_out=[DepVar(f"deps[{i + 1}]")],
            maps=[MapEntry(buffer, MapDir.TOFROM, nbytes)],
            nowait=True,
        )
    return region
