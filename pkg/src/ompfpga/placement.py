"""Task placement, stream routing and CONF register programming.

Tasks are placed round-robin, in creation order, over the compatible IP
slots sorted by distance from the host.  Once every compatible slot is taken
the assignment wraps around and starts a new *wave*: the same IPs are reused
after the switch is reprogrammed, with the data waiting in the VFIFO.

Dependences between consecutive users of a grid buffer become direct stream
routes: through the AXI4-Stream switch on the same board, or through the MAC
frame handler and optical links between boards.  Intermediate ``tofrom``
maps never touch the host; only the first task pulls the grid in and the
last one sends it back.

CONF register map (byte offsets, one u32 each)::

    0x9000 + 4*in_port      switch route: out port for that in port
    0x9100 .. 0x9110        MFH: src MAC hi16, src MAC lo32, dst MAC hi16,
                            dst MAC lo32, payload length in bytes
    0x9200 + 0x40*slot      IP dims (3 words, memory order, 0 padded)
    0x9210 + 0x40*slot + 4c IP coefficient c (float32 bits)
"""

from __future__ import annotations

import json
import struct
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .cluster import FIRST_IP_PORT, HOST_PORT, MFH_PORT, SWITCH_PORTS, VFIFO_PORT, ClusterDesc
from .stencil import KernelKind
from .taskgraph import TaskGraph
from .variants import VariantKind, VariantRegistry

CONF_BASE = 0x9000
CONF_END = 0xA000
SWITCH_BASE = CONF_BASE
MFH_BASE = CONF_BASE + 0x100
IP_BASE = CONF_BASE + 0x200
IP_STRIDE = 0x40
IP_COEFF = 0x10
BEAT_BYTES = 32


class PlanError(RuntimeError):
    pass


class ConfRangeError(PlanError):
    pass


def stream_bytes(nbytes: int) -> int:
    """Bytes on the wire for a transfer: whole 256-bit beats."""
    return -(-nbytes // BEAT_BYTES) * BEAT_BYTES


@dataclass(frozen=True)
class Assignment:
    task: int
    fpga: int
    slot: int
    port: int
    wave: int
    kernel: KernelKind


@dataclass(frozen=True)
class Placement:
    assignments: dict
    waves: int

    def __getitem__(self, tid) -> Assignment:
        return self.assignments[tid]

    def wave_tasks(self, wave: int) -> list:
        return sorted(t for t, a in self.assignments.items() if a.wave == wave)

    def to_dict(self) -> dict:
        return {
            "waves": self.waves,
            "assignments": [
                {"task": a.task, "fpga": a.fpga, "slot": a.slot, "port": a.port,
                 "wave": a.wave, "kernel": a.kernel.value}
                for _, a in sorted(self.assignments.items())
            ],
        }


def map_tasks(graph: TaskGraph, cluster: ClusterDesc, registry: VariantRegistry | None = None,
              ctx=frozenset({"vc709"})) -> Placement:
    registry = registry or VariantRegistry.from_catalog(cluster.catalog)
    slots = cluster.slots()
    counters: dict[KernelKind, int] = {}
    assignments = {}
    for node in graph.nodes:
        entry = registry.resolve(node.kernel_ref, ctx)
        if entry.kind is not VariantKind.IP_VARIANT:
            raise PlanError(f"task {node.id} ({node.kernel_ref}) resolves to the CPU base; "
                            "only FPGA-target regions can be placed")
        kind = entry.ip_catalog_ref
        compatible = [(f, s) for f, s in slots if s.kernel is kind]
        if not compatible:
            raise PlanError(f"no IP slot in the cluster runs {kind.value} (task {node.id})")
        n = counters.get(kind, 0)
        counters[kind] = n + 1
        fpga, slot = compatible[n % len(compatible)]
        assignments[node.id] = Assignment(node.id, fpga, slot.slot_id, slot.switch_port,
                                          n // len(compatible), kind)
    waves = 1 + max((a.wave for a in assignments.values()), default=-1)
    return Placement(assignments, waves)


# Hops -----------------------------------------------------------------------

@dataclass(frozen=True)
class HostDMA:
    fpga: int
    direction: str  # "h2d" | "d2h"
    kind: str = field(default="HostDMA", init=False)


@dataclass(frozen=True)
class VFIFO:
    fpga: int
    channel: str  # "host" | "temporal"
    kind: str = field(default="VFIFO", init=False)


@dataclass(frozen=True)
class SwitchPort:
    fpga: int
    in_port: int
    out_port: int
    wave: int
    kind: str = field(default="SwitchPort", init=False)


@dataclass(frozen=True)
class MFH:
    fpga: int
    op: str  # "encap" | "decap"
    wave: int
    src_mac: str = ""
    dst_mac: str = ""
    length: int = 0
    kind: str = field(default="MFH", init=False)


@dataclass(frozen=True)
class NetLink:
    src: int
    dst: int
    link: int
    kind: str = field(default="NetLink", init=False)


@dataclass(frozen=True)
class Route:
    kind: str  # "ingress" | "edge" | "egress"
    buffer: str
    src: int | None  # task id, None for the host
    dst: int | None
    nbytes: int
    hops: tuple

    def hop_kinds(self) -> list:
        return [h.kind for h in self.hops]


@dataclass
class RouteTable:
    routes: dict = field(default_factory=dict)   # (src, dst) -> Route
    ingress: dict = field(default_factory=dict)  # buffer -> Route
    egress: dict = field(default_factory=dict)   # buffer -> Route

    def all_routes(self) -> list:
        return list(self.ingress.values()) + [self.routes[k] for k in sorted(self.routes)] + list(self.egress.values())

    def host_transfers(self) -> int:
        return sum(1 for r in self.all_routes() for h in r.hops if h.kind == "HostDMA")

    def to_dict(self) -> dict:
        return {"routes": [
            {"kind": r.kind, "buffer": r.buffer, "src": r.src, "dst": r.dst, "nbytes": r.nbytes,
             "hops": [asdict(h) for h in r.hops]}
            for r in self.all_routes()
        ]}


def net_path(cluster: ClusterDesc, src: int, dst: int) -> list:
    """Shortest link path as ``[(link index, from, to), ...]``.

    Links are full duplex; among equal-length paths the one using links in
    their declared direction (the ring's forward direction) wins.
    """
    if src == dst:
        return []
    adj: dict[int, list] = {f.id: [] for f in cluster.fpgas}
    for i, l in enumerate(cluster.links):
        adj[l.a].append((0, l.b, i))
        adj[l.b].append((1, l.a, i))
    for v in adj.values():
        v.sort()
    prev = {src: None}
    q = deque([src])
    while q:
        u = q.popleft()
        for _, v, i in adj[u]:
            if v not in prev:
                prev[v] = (u, i)
                q.append(v)
    if dst not in prev:
        raise PlanError(f"no network path from FPGA {src} to FPGA {dst}")
    path = []
    v = dst
    while prev[v] is not None:
        u, i = prev[v]
        path.append((i, u, v))
        v = u
    return path[::-1]


def _port_toward(cluster: ClusterDesc, link_idx: int, fpga: int) -> int:
    l = cluster.links[link_idx]
    return l.port_a if l.a == fpga else l.port_b


def _crossing(cluster, src, dst, wave, nbytes) -> list:
    path = net_path(cluster, src, dst)
    first, last = path[0], path[-1]
    src_mac = cluster.mac(src, _port_toward(cluster, first[0], src))
    dst_mac = cluster.mac(dst, _port_toward(cluster, last[0], dst))
    hops = [MFH(src, "encap", wave, src_mac, dst_mac, stream_bytes(nbytes))]
    hops += [NetLink(u, v, i) for i, u, v in path]
    hops.append(MFH(dst, "decap", wave))
    return hops


def _stream(cluster, src_fpga, src_port, dst_fpga, dst_port, wave, nbytes) -> list:
    """Switch hops (plus a frame crossing when the boards differ) for one session."""
    if src_fpga == dst_fpga:
        return [SwitchPort(src_fpga, src_port, dst_port, wave)]
    return ([SwitchPort(src_fpga, src_port, MFH_PORT, wave)]
            + _crossing(cluster, src_fpga, dst_fpga, wave, nbytes)
            + [SwitchPort(dst_fpga, MFH_PORT, dst_port, wave)])


def data_chains(graph: TaskGraph) -> dict:
    """buffer -> ids of the tasks streaming that grid, in creation order."""
    chains: dict[str, list] = {}
    for n in graph.nodes:
        chains.setdefault(n.args.buffer, []).append(n.id)
    return chains


def _map_of(node, buffer):
    for m in node.maps:
        if m.buffer == buffer:
            return m
    return None


def infer_routes(graph: TaskGraph, placement: Placement, cluster: ClusterDesc) -> RouteTable:
    table = RouteTable()
    host = cluster.fpgas[0].id
    for buffer, chain in data_chains(graph).items():
        first, last = graph.nodes[chain[0]], graph.nodes[chain[-1]]
        nbytes = graph.buffers.get(buffer)
        if nbytes is None:
            m = _map_of(first, buffer)
            nbytes = m.length if m else 4 * _prod(first.args.dims)

        m_in = _map_of(first, buffer)
        if m_in is None or not m_in.direction.copies_in:
            raise PlanError(f"task {first.id} streams {buffer!r} but never receives it from the host")
        a = placement[first.id]
        hops = [HostDMA(host, "h2d"), VFIFO(host, "host")]
        hops += _stream(cluster, host, HOST_PORT, a.fpga, a.port, a.wave, nbytes)
        table.ingress[buffer] = Route("ingress", buffer, None, first.id, nbytes, tuple(hops))

        for p, c in zip(chain, chain[1:]):
            if not graph.has_edge(p, c):
                raise PlanError(f"tasks {p} and {c} both stream {buffer!r} without a dependence between them")
            ap, ac = placement[p], placement[c]
            if ac.wave == ap.wave:
                hops = _stream(cluster, ap.fpga, ap.port, ac.fpga, ac.port, ap.wave, nbytes)
            elif ac.wave > ap.wave:
                hops = _stream(cluster, ap.fpga, ap.port, ac.fpga, VFIFO_PORT, ap.wave, nbytes)
                hops += [VFIFO(ac.fpga, "temporal"), SwitchPort(ac.fpga, VFIFO_PORT, ac.port, ac.wave)]
            else:
                raise PlanError(f"task {c} is placed in an earlier wave than its producer {p}")
            table.routes[(p, c)] = Route("edge", buffer, p, c, nbytes, tuple(hops))

        m_out = _map_of(last, buffer)
        if m_out is not None and m_out.direction.copies_out:
            a = placement[last.id]
            hops = _stream(cluster, a.fpga, a.port, host, HOST_PORT, a.wave, nbytes)
            hops += [VFIFO(host, "host"), HostDMA(host, "d2h")]
            table.egress[buffer] = Route("egress", buffer, last.id, None, nbytes, tuple(hops))
    return table


def _prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


# CONF writes ----------------------------------------------------------------

@dataclass(frozen=True)
class ConfWrite:
    wave: int
    fpga: int
    offset: int
    value: int
    meaning: str  # switch_route | mfh_src_mac | mfh_dst_mac | mfh_len | ip_coeff | ip_dims


def mac_words(mac: str) -> tuple:
    raw = bytes.fromhex(mac.replace(":", ""))
    return int.from_bytes(raw[:2], "big"), int.from_bytes(raw[2:], "big")


def words_mac(hi: int, lo: int) -> str:
    raw = hi.to_bytes(2, "big") + lo.to_bytes(4, "big")
    return ":".join(f"{b:02x}" for b in raw)


def f32_bits(x) -> int:
    return struct.unpack("<I", struct.pack("<f", float(x)))[0]


def bits_f32(v: int):
    return np.float32(struct.unpack("<f", struct.pack("<I", v))[0])


def ip_offset(slot: int) -> int:
    return IP_BASE + IP_STRIDE * slot


def meaning_of(offset: int) -> str:
    if not CONF_BASE <= offset < CONF_END or offset % 4:
        raise ConfRangeError(f"offset {offset:#x} outside the CONF range")
    if offset < MFH_BASE:
        return "switch_route"
    if offset < IP_BASE:
        rel = offset - MFH_BASE
        return {0x0: "mfh_src_mac", 0x4: "mfh_src_mac", 0x8: "mfh_dst_mac",
                0xC: "mfh_dst_mac", 0x10: "mfh_len"}.get(rel) or _bad(offset)
    rel = (offset - IP_BASE) % IP_STRIDE
    return "ip_dims" if rel < IP_COEFF else "ip_coeff"


def _bad(offset):
    raise ConfRangeError(f"offset {offset:#x} is not a defined register")


def gen_conf_writes(graph: TaskGraph, placement: Placement, routes: RouteTable) -> list:
    """Ordered CONF writes for every session (wave); replaying them on a
    fresh fabric reproduces ``routes``."""
    regs: dict[tuple, tuple] = {}

    def put(wave, fpga, offset, value, meaning):
        if not CONF_BASE <= offset < CONF_END:
            raise ConfRangeError(f"register {offset:#x} for FPGA {fpga} overflows the CONF range")
        key = (wave, fpga, offset)
        if key in regs and regs[key][0] != value:
            raise PlanError(f"conflicting {meaning} programming on FPGA {fpga} in wave {wave} "
                            f"at {offset:#x}: {regs[key][0]:#x} vs {value:#x}")
        regs[key] = (value, meaning)

    for r in routes.all_routes():
        for h in r.hops:
            if h.kind == "SwitchPort":
                if not 0 <= h.in_port < SWITCH_PORTS or not 0 <= h.out_port < SWITCH_PORTS:
                    raise ConfRangeError(f"switch port out of range in {h}")
                put(h.wave, h.fpga, SWITCH_BASE + 4 * h.in_port, h.out_port, "switch_route")
            elif h.kind == "MFH" and h.op == "encap":
                shi, slo = mac_words(h.src_mac)
                dhi, dlo = mac_words(h.dst_mac)
                put(h.wave, h.fpga, MFH_BASE + 0x0, shi, "mfh_src_mac")
                put(h.wave, h.fpga, MFH_BASE + 0x4, slo, "mfh_src_mac")
                put(h.wave, h.fpga, MFH_BASE + 0x8, dhi, "mfh_dst_mac")
                put(h.wave, h.fpga, MFH_BASE + 0xC, dlo, "mfh_dst_mac")
                put(h.wave, h.fpga, MFH_BASE + 0x10, h.length, "mfh_len")

    for node in graph.nodes:
        a = placement[node.id]
        base = ip_offset(a.slot)
        dims = list(node.args.dims) + [0] * (3 - len(node.args.dims))
        for i, d in enumerate(dims):
            put(a.wave, a.fpga, base + 4 * i, int(d), "ip_dims")
        for i, c in enumerate(node.args.coeffs):
            put(a.wave, a.fpga, base + IP_COEFF + 4 * i, f32_bits(c), "ip_coeff")

    return [ConfWrite(w, f, off, v, m) for (w, f, off), (v, m) in sorted(regs.items())]


def conf_to_text(writes) -> str:
    lines = []
    current = None
    for w in writes:
        if (w.wave, w.fpga) != current:
            current = (w.wave, w.fpga)
            lines.append(f"# wave {w.wave} fpga {w.fpga}")
        lines.append(f"{w.offset:08x} {w.value:08x}")
    return "\n".join(lines) + ("\n" if lines else "")


def conf_from_text(text: str) -> list:
    out = []
    wave = fpga = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) != 4 or parts[0] != "wave" or parts[2] != "fpga":
                raise PlanError(f"line {lineno}: bad section header {line!r}")
            wave, fpga = int(parts[1]), int(parts[3])
            continue
        if wave is None:
            raise PlanError(f"line {lineno}: register write before any section header")
        off, val = (int(x, 16) for x in line.split())
        out.append(ConfWrite(wave, fpga, off, val, meaning_of(off)))
    return out


def plan_to_json(placement: Placement, routes: RouteTable, writes=()) -> str:
    doc = {"placement": placement.to_dict(), "routes": routes.to_dict()["routes"],
           "conf_writes": len(writes), "host_transfers": routes.host_transfers()}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def ip_port_slot(cluster: ClusterDesc, fpga: int) -> dict:
    return {s.switch_port: s for s in cluster.fpgas[fpga].ips if s.switch_port >= FIRST_IP_PORT}
