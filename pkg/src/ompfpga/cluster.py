"""Cluster description (``conf.json``): boards, IP slots, addresses, links.

Switch ports 0-2 of every board are wired to the infrastructure (host DMA
channel of the VFIFO, temporal VFIFO channel, MAC frame handler); IP slots
use ports 3 and up.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field, replace

import jsonschema

from .catalog import DEFAULT_CAPACITY, IP_CATALOG, CatalogEntry, Resources
from .stencil import KernelKind


class ConfigError(ValueError):
    pass


HOST_PORT = 0
VFIFO_PORT = 1
MFH_PORT = 2
FIRST_IP_PORT = 3
SWITCH_PORTS = 16
NET_PORTS = 4
DEFAULT_CLOCK_HZ = 200_000_000
DEFAULT_LINK_BPS = 10e9
DEFAULT_LINK_LATENCY_S = 500e-9

# Effective bytes/s per lane.
PCIE_LANE_BYTES = {1: 0.2e9, 2: 0.4e9, 3: 0.985e9}


class Topology(str, enum.Enum):
    RING = "ring"
    CUSTOM = "custom"


@dataclass(frozen=True)
class HostLink:
    gen: int = 3
    lanes: int = 8
    bytes_per_sec: float = 7.88e9

    @classmethod
    def preset(cls, gen: int, lanes: int = 8) -> "HostLink":
        if gen not in PCIE_LANE_BYTES:
            raise ConfigError(f"unknown PCIe generation {gen}")
        return cls(gen, lanes, PCIE_LANE_BYTES[gen] * lanes)


@dataclass(frozen=True)
class IpSlot:
    slot_id: int
    kernel: KernelKind
    switch_port: int
    cost: Resources


@dataclass(frozen=True)
class FpgaDesc:
    id: int
    bitstream: str
    macs: tuple
    ips: tuple
    capacity: Resources = DEFAULT_CAPACITY


@dataclass(frozen=True)
class Link:
    a: int
    port_a: int
    b: int
    port_b: int
    bandwidth_bps: float = DEFAULT_LINK_BPS
    latency_s: float = DEFAULT_LINK_LATENCY_S


@dataclass(frozen=True)
class ClusterDesc:
    fpgas: tuple
    links: tuple = ()
    host_link: HostLink = HostLink()
    topology: Topology = Topology.RING
    clock_hz: int = DEFAULT_CLOCK_HZ
    catalog: dict = field(default_factory=lambda: dict(IP_CATALOG))

    @property
    def n_ips(self) -> int:
        return sum(len(f.ips) for f in self.fpgas)

    def slots(self):
        """All (fpga_id, slot) pairs sorted by distance from the host."""
        return [(f.id, s) for f in self.fpgas for s in sorted(f.ips, key=lambda s: s.slot_id)]

    def mac(self, fpga: int, port: int) -> str:
        return self.fpgas[fpga].macs[port]

    def to_dict(self) -> dict:
        return {
            "clock_hz": self.clock_hz,
            "topology": self.topology.value,
            "host_link": {"gen": self.host_link.gen, "lanes": self.host_link.lanes,
                          "bytes_per_sec": self.host_link.bytes_per_sec},
            "fpgas": [
                {
                    "id": f.id,
                    "bitstream": f.bitstream,
                    "macs": list(f.macs),
                    "ips": [{"kernel": s.kernel.value, "port": s.switch_port, "cost": s.cost.to_dict()}
                            for s in f.ips],
                    "capacity": f.capacity.to_dict(),
                }
                for f in self.fpgas
            ],
            "links": [
                {"a": l.a, "port_a": l.port_a, "b": l.b, "port_b": l.port_b,
                 "bandwidth_bps": l.bandwidth_bps, "latency_s": l.latency_s}
                for l in self.links
            ],
            "ip_catalog": {
                k.value: {"cost": e.cost.to_dict(), "base": e.base_name, "variant": e.variant_name}
                for k, e in sorted(self.catalog.items(), key=lambda kv: kv[0].value)
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def restrict(self, fpgas: int | None = None, ips_per_fpga: int | None = None,
                 host_link: HostLink | None = None, clock_hz: int | None = None) -> "ClusterDesc":
        """Sub-cluster of the first ``fpgas`` boards and first ``ips_per_fpga`` slots each.

        Ring links are re-closed over the kept boards using the bandwidth and
        latency of the original first link.
        """
        n = len(self.fpgas) if fpgas is None else fpgas
        if not 1 <= n <= len(self.fpgas):
            raise ConfigError(f"cannot take {n} of {len(self.fpgas)} FPGAs")
        kept = []
        for f in self.fpgas[:n]:
            ips = tuple(sorted(f.ips, key=lambda s: s.slot_id))
            if ips_per_fpga is not None:
                if ips_per_fpga > len(ips):
                    raise ConfigError(f"FPGA {f.id} has only {len(ips)} IP slots")
                ips = ips[:ips_per_fpga]
            kept.append(replace(f, ips=ips))
        if self.topology is Topology.RING:
            proto = self.links[0] if self.links else Link(0, 0, 0, 1)
            links = ring_links(n, proto.bandwidth_bps, proto.latency_s)
        else:
            links = tuple(l for l in self.links if l.a < n and l.b < n)
        out = replace(self, fpgas=tuple(kept), links=links,
                      host_link=host_link or self.host_link,
                      clock_hz=clock_hz or self.clock_hz)
        validate_cluster(out)
        return out


def ring_links(n: int, bandwidth_bps: float = DEFAULT_LINK_BPS,
               latency_s: float = DEFAULT_LINK_LATENCY_S) -> tuple:
    """Port 0 of board k feeds port 1 of board k+1 (mod n); none for one board."""
    if n < 2:
        return ()
    return tuple(Link(k, 0, (k + 1) % n, 1, bandwidth_bps, latency_s) for k in range(n))


def make_mac(fpga: int, port: int) -> str:
    return f"02:0a:00:00:{fpga:02x}:{port:02x}"


def ring_cluster(n_fpgas: int, ips_per_fpga, kernel="laplace2d", *,
                 link_bps: float = DEFAULT_LINK_BPS, link_latency_s: float = DEFAULT_LINK_LATENCY_S,
                 host_link: HostLink | None = None, clock_hz: int = DEFAULT_CLOCK_HZ,
                 capacity: Resources = DEFAULT_CAPACITY) -> ClusterDesc:
    """Homogeneous ring; ``ips_per_fpga`` may be an int or a per-board list of kernels."""
    fpgas = []
    for k in range(n_fpgas):
        if isinstance(ips_per_fpga, int):
            kinds = [KernelKind(kernel)] * ips_per_fpga
        else:
            kinds = [KernelKind(x) for x in ips_per_fpga[k]]
        ips = tuple(IpSlot(i, kind, FIRST_IP_PORT + i, IP_CATALOG[kind].cost) for i, kind in enumerate(kinds))
        fpgas.append(FpgaDesc(k, f"bitstreams/fpga{k}.bit", tuple(make_mac(k, p) for p in range(NET_PORTS)),
                              ips, capacity))
    cluster = ClusterDesc(tuple(fpgas), ring_links(n_fpgas, link_bps, link_latency_s),
                          host_link or HostLink(), Topology.RING, clock_hz)
    validate_cluster(cluster)
    return cluster


_RES = {
    "type": "object",
    "required": ["luts", "brams", "dsps"],
    "additionalProperties": False,
    "properties": {k: {"type": "integer", "minimum": 0} for k in ("luts", "brams", "dsps")},
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["fpgas"],
    "additionalProperties": False,
    "properties": {
        "clock_hz": {"type": "number", "exclusiveMinimum": 0},
        "topology": {"enum": [t.value for t in Topology]},
        "host_link": {
            "type": "object",
            "required": ["gen"],
            "additionalProperties": False,
            "properties": {
                "gen": {"type": "integer"},
                "lanes": {"type": "integer", "minimum": 1},
                "bytes_per_sec": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "fpgas": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "bitstream", "macs", "ips"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "bitstream": {"type": "string"},
                    "macs": {"type": "array", "maxItems": NET_PORTS, "items": {"type": "string"}},
                    "ips": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["kernel", "port"],
                            "additionalProperties": False,
                            "properties": {
                                "kernel": {"type": "string"},
                                "port": {"type": "integer"},
                                "cost": _RES,
                            },
                        },
                    },
                    "capacity": _RES,
                },
            },
        },
        "links": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["a", "port_a", "b", "port_b"],
                "additionalProperties": False,
                "properties": {
                    "a": {"type": "integer"},
                    "port_a": {"type": "integer"},
                    "b": {"type": "integer"},
                    "port_b": {"type": "integer"},
                    "bandwidth_bps": {"type": "number"},
                    "latency_s": {"type": "number", "minimum": 0},
                },
            },
        },
        "ip_catalog": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "cost": _RES,
                    "base": {"type": "string"},
                    "variant": {"type": "string"},
                },
            },
        },
    },
}

_MAC_RE = re.compile(r"^[0-9a-fA-F]{2}(:[0-9a-fA-F]{2}){5}$")


def _kernel(name: str) -> KernelKind:
    try:
        return KernelKind(name)
    except ValueError:
        raise ConfigError(f"unknown kernel kind {name!r}") from None


def _res(d) -> Resources:
    return Resources(d["luts"], d["brams"], d["dsps"])


def load_config(text: str) -> ClusterDesc:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None

    catalog = dict(IP_CATALOG)
    for name, entry in doc.get("ip_catalog", {}).items():
        kind = _kernel(name)
        base = catalog[kind]
        catalog[kind] = CatalogEntry(
            kind,
            _res(entry["cost"]) if "cost" in entry else base.cost,
            entry.get("base", base.base_name),
            entry.get("variant", base.variant_name),
        )

    fpgas = []
    for f in doc["fpgas"]:
        ips = []
        for i, ip in enumerate(f["ips"]):
            kind = _kernel(ip["kernel"])
            cost = _res(ip["cost"]) if "cost" in ip else catalog[kind].cost
            if cost != catalog[kind].cost:
                raise ConfigError(f"FPGA {f['id']} IP {i}: cost does not match the IP catalog for {kind.value}")
            ips.append(IpSlot(i, kind, ip["port"], cost))
        capacity = _res(f["capacity"]) if "capacity" in f else DEFAULT_CAPACITY
        fpgas.append(FpgaDesc(f["id"], f["bitstream"], tuple(m.lower() for m in f["macs"]), tuple(ips), capacity))

    host = doc.get("host_link")
    if host is None:
        host_link = HostLink()
    elif "bytes_per_sec" in host:
        host_link = HostLink(host["gen"], host.get("lanes", 8), float(host["bytes_per_sec"]))
    else:
        host_link = HostLink.preset(host["gen"], host.get("lanes", 8))

    links = tuple(
        Link(l["a"], l["port_a"], l["b"], l["port_b"],
             float(l.get("bandwidth_bps", DEFAULT_LINK_BPS)), float(l.get("latency_s", DEFAULT_LINK_LATENCY_S)))
        for l in doc.get("links", [])
    )
    cluster = ClusterDesc(
        tuple(fpgas), links, host_link, Topology(doc.get("topology", "ring")),
        int(doc.get("clock_hz", DEFAULT_CLOCK_HZ)), catalog,
    )
    validate_cluster(cluster)
    return cluster


def load_config_file(path) -> ClusterDesc:
    with open(path) as f:
        return load_config(f.read())


def validate_cluster(c: ClusterDesc) -> None:
    """Structural checks; resource budgets are reported by :func:`validate_resources`."""
    if not c.fpgas:
        raise ConfigError("a cluster needs at least one FPGA")
    if c.clock_hz <= 0:
        raise ConfigError("clock_hz must be positive")
    if c.host_link.bytes_per_sec <= 0:
        raise ConfigError("host link bandwidth must be positive")
    n = len(c.fpgas)
    if [f.id for f in c.fpgas] != list(range(n)):
        raise ConfigError("FPGA ids must be 0..F-1 in ring order from the host")
    seen_macs = {}
    for f in c.fpgas:
        if not f.bitstream:
            raise ConfigError(f"FPGA {f.id}: empty bitstream path")
        if not f.ips:
            raise ConfigError(f"FPGA {f.id}: needs at least one IP slot")
        if len(f.ips) > SWITCH_PORTS - FIRST_IP_PORT:
            raise ConfigError(f"FPGA {f.id}: {len(f.ips)} IPs exceed the switch port budget")
        if min(f.capacity.luts, f.capacity.brams, f.capacity.dsps) <= 0:
            raise ConfigError(f"FPGA {f.id}: capacity must be positive")
        ports = set()
        for s in f.ips:
            if s.kernel not in c.catalog:
                raise ConfigError(f"FPGA {f.id}: unknown kernel kind {s.kernel}")
            if not FIRST_IP_PORT <= s.switch_port < SWITCH_PORTS:
                raise ConfigError(f"FPGA {f.id}: IP switch port {s.switch_port} outside {FIRST_IP_PORT}..{SWITCH_PORTS - 1}")
            if s.switch_port in ports:
                raise ConfigError(f"FPGA {f.id}: duplicate switch port {s.switch_port}")
            ports.add(s.switch_port)
        for m in f.macs:
            if not _MAC_RE.match(m):
                raise ConfigError(f"FPGA {f.id}: malformed MAC address {m!r}")
            if m in seen_macs:
                raise ConfigError(f"duplicate MAC {m} on FPGA {seen_macs[m]} and FPGA {f.id}")
            seen_macs[m] = f.id

    used = set()
    for l in c.links:
        for fpga, port in ((l.a, l.port_a), (l.b, l.port_b)):
            if not 0 <= fpga < n:
                raise ConfigError(f"link endpoint references unknown FPGA {fpga}")
            if not 0 <= port < NET_PORTS:
                raise ConfigError(f"link endpoint on FPGA {fpga} uses invalid NET port {port}")
            if port >= len(c.fpgas[fpga].macs):
                raise ConfigError(f"FPGA {fpga} NET port {port} has no MAC address")
            if (fpga, port) in used:
                raise ConfigError(f"NET port {port} of FPGA {fpga} is used by two links")
            used.add((fpga, port))
        if l.a == l.b:
            raise ConfigError(f"link on FPGA {l.a} loops back to itself")
        if l.bandwidth_bps <= 0:
            raise ConfigError("link bandwidth must be positive")

    if c.topology is Topology.RING and n > 1:
        for k in range(n):
            nxt = (k + 1) % n
            if not any(l.a == k and l.b == nxt for l in c.links):
                raise ConfigError(f"broken ring: no link from FPGA {k} to FPGA {nxt}")


@dataclass(frozen=True)
class Violation:
    fpga: int
    resource: str
    used: int
    capacity: int

    @property
    def percent(self) -> float:
        return 100.0 * self.used / self.capacity

    def __str__(self):
        return f"FPGA {self.fpga}: {self.resource} {self.used} > {self.capacity} ({self.percent:.1f}%)"


def fpga_usage(f: FpgaDesc) -> Resources:
    total = Resources(0, 0, 0)
    for s in f.ips:
        total = total + s.cost
    return total


def validate_resources(c: ClusterDesc) -> list:
    """Per-board resource budget check; returns the list of violations."""
    out = []
    for f in c.fpgas:
        used = fpga_usage(f)
        for name in ("luts", "brams", "dsps"):
            u, cap = getattr(used, name), getattr(f.capacity, name)
            if u > cap:
                out.append(Violation(f.id, name, u, cap))
    return out
