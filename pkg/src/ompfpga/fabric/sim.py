"""Discrete-event model of the multi-board datapath.

Data moves as bursts of 256-bit beats.  Each burst carries the times at which
its first and last beat are available, and every component is a server that
forwards beats cut-through at its own rate::

    first_out = max(first_in + latency, free) + beat_time
    last_out  = max(first_out + (beats - 1) * beat_time, last_in + latency + beat_time)

so a chain of IPs overlaps naturally: a downstream IP starts on the first
beats of its input, not on the full grid.  Ethernet frames are the exception
and move store-and-forward.

All routing decisions are taken from the CONF registers programmed for the
current session (wave).  Sessions are separated by a barrier: every stream of
wave ``w`` lands before the CONF writes of wave ``w + 1`` are issued, and data
crossing the barrier waits in the VFIFO.

Events are ordered by time, then component id, then insertion order.
"""

from __future__ import annotations

import bisect
import csv
import heapq
import io
import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..cluster import FIRST_IP_PORT, HOST_PORT, MFH_PORT, VFIFO_PORT, ClusterDesc
from ..placement import (IP_BASE, IP_COEFF, IP_STRIDE, MFH_BASE, SWITCH_BASE, ConfWrite,
                         bits_f32, net_path, words_mac)
from ..stencil import StencilKernel, as_grid
from .frames import DEFAULT_MAX_PAYLOAD, MAC_HEADER_BYTES, FrameError, MacFrame
from .ippipeline import BEAT_BYTES, CELLS_PER_BEAT, LineBufferIP, pad_cells


class SimulationError(RuntimeError):
    pass


class RoutingError(SimulationError):
    pass


class DeadlockError(SimulationError):
    pass


@dataclass(frozen=True)
class SimParams:
    clock_hz: float | None = None          # None: take the cluster's clock
    burst_beats: int = 64
    max_payload: int = DEFAULT_MAX_PAYLOAD
    hop_latency_cycles: int = 4            # switch and MFH, per hop
    vfifo_bytes_per_sec: float = 6.4e9     # per VFIFO channel
    dma_latency_s: float = 1e-6
    conf_write_s: float = 0.5e-6
    laplace3d_verbatim: bool = True
    net_forwarding: bool = True
    trace: bool = True


@dataclass
class SimResult:
    buffers: dict
    elapsed: float
    compute_time: float
    busy: dict
    frames: int
    link_bytes: dict
    host_transfers: int
    waves: int
    trace: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "elapsed_s": self.elapsed,
            "compute_s": self.compute_time,
            "frames": self.frames,
            "host_transfers": self.host_transfers,
            "waves": self.waves,
            "link_bytes": dict(sorted(self.link_bytes.items())),
            "busy_s": dict(sorted(self.busy.items())),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_s", "component", "event", "bytes"])
        for t, comp, ev, nbytes in self.trace:
            w.writerow([repr(float(t)), comp, ev, nbytes])
        return buf.getvalue()


@dataclass
class Burst:
    stream: str
    cells: np.ndarray
    t_first: float
    t_last: float
    last: bool
    first: bool = False

    @property
    def nbeats(self) -> int:
        return self.cells.size // CELLS_PER_BEAT

    @property
    def nbytes(self) -> int:
        return self.cells.size * 4


@dataclass
class FrameToken:
    frame: MacFrame
    stream: str
    last: bool
    first: bool


class Server:
    """A resource moving bytes at a fixed rate after a fixed latency."""

    def __init__(self, name: str, rate: float, latency: float = 0.0):
        if rate <= 0:
            raise SimulationError(f"{name}: rate must be positive")
        self.name = name
        self.rate = rate
        self.latency = latency
        self.beat_time = BEAT_BYTES / rate
        self.free = 0.0
        self.busy = 0.0

    def cut(self, t_first: float, t_last: float, nbeats: int) -> tuple:
        start = max(t_first + self.latency, self.free)
        o_first = start + self.beat_time
        o_last = max(o_first + (nbeats - 1) * self.beat_time, t_last + self.latency + self.beat_time)
        self.free = o_last
        self.busy += nbeats * self.beat_time
        return o_first, o_last

    def store(self, t_ready: float, nbytes: int) -> float:
        start = max(t_ready, self.free)
        self.free = start + nbytes / self.rate
        self.busy += nbytes / self.rate
        return self.free + self.latency


class Component:
    def __init__(self, sim: "Simulator", name: str):
        self.sim = sim
        self.name = name
        self.uid = sim.register(self)


class HostDMA(Component):
    def __init__(self, sim, fpga, rate, latency):
        super().__init__(sim, f"host_dma{fpga}")
        self.fpga = fpga
        self.h2d = Server(self.name + ".h2d", rate, latency)
        self.d2h = Server(self.name + ".d2h", rate, latency)
        self.sinks: dict[str, list] = {}

    def start_ingress(self, buffer: str, grid: np.ndarray, t0: float):
        flat = pad_cells(grid.ravel())
        step = self.sim.params.burst_beats * CELLS_PER_BEAT
        n = flat.size
        self.sim.record(t0, self.name, f"h2d_start:{buffer}", grid.nbytes)
        for i, s in enumerate(range(0, n, step)):
            cells = flat[s:s + step]
            o_first, o_last = self.h2d.cut(t0, t0, cells.size // CELLS_PER_BEAT)
            b = Burst(f"host:{buffer}", cells, o_first, o_last, s + step >= n, i == 0)
            if b.last:
                self.sim.record(o_last, self.name, f"h2d_end:{buffer}", grid.nbytes)
                self.sim.host_transfers += 1
            self.sim.schedule(o_first, self.sim.fpga(self.fpga).vfifo, ("host_in", b))

    def handle(self, t, item):
        _, b = item
        o_first, o_last = self.d2h.cut(b.t_first, b.t_last, b.nbeats)
        chunks = self.sinks.setdefault(b.stream, [])
        chunks.append(b.cells)
        if b.first:
            self.sim.record(o_first, self.name, f"d2h_start:{b.stream}", 0)
        if b.last:
            nbytes = sum(c.size for c in chunks) * 4
            self.sim.record(o_last, self.name, f"d2h_end:{b.stream}", nbytes)
            self.sim.host_transfers += 1
            self.sim.egress_done(b.stream, np.concatenate(chunks), o_last)
        self.sim.touch(o_last)


class Vfifo(Component):
    """DDR-backed FIFO.  The host channels stream through in each direction;
    the temporal channel holds data across a session barrier.  Every channel
    moves at most ``vfifo_bytes_per_sec``."""

    def __init__(self, sim, fpga, rate):
        super().__init__(sim, f"vfifo{fpga}")
        self.fpga = fpga
        self.chan = {c: Server(f"{self.name}.{c}", rate) for c in ("h2d", "d2h", "temporal")}
        self.held: list[Burst] = []

    def _pass(self, chan: str, b: Burst) -> Burst:
        t1, t2 = self.chan[chan].cut(b.t_first, b.t_last, b.nbeats)
        return Burst(b.stream, b.cells, t1, t2, b.last, b.first)

    def handle(self, t, item):
        kind, b = item
        if kind == "host_in":
            out = self._pass("h2d", b)
            self.sim.schedule(out.t_first, self.sim.fpga(self.fpga).switch, (HOST_PORT, out))
        elif kind == "host_out":
            out = self._pass("d2h", b)
            self.sim.schedule(out.t_first, self.sim.host_dma, ("d2h", out))
        elif kind == "store":
            stored = self._pass("temporal", b)
            self.held.append(stored)
            if b.first:
                self.sim.record(stored.t_first, self.name, f"store_start:{b.stream}", 0)
            self.sim.touch(stored.t_last)
        else:
            raise SimulationError(f"{self.name}: unknown request {kind}")

    def release(self, t0: float):
        held, self.held = self.held, []
        srv = self.chan["temporal"]
        for b in held:
            t1, t2 = srv.cut(max(t0, b.t_last), max(t0, b.t_last), b.nbeats)
            out = Burst(b.stream, b.cells, t1, t2, b.last, b.first)
            self.sim.schedule(t1, self.sim.fpga(self.fpga).switch, (VFIFO_PORT, out))


class Switch(Component):
    def __init__(self, sim, fpga, rate, latency):
        super().__init__(sim, f"switch{fpga}")
        self.fpga = fpga
        self.rate = rate
        self.latency = latency
        self.ports: dict[int, Server] = {}

    def handle(self, t, item):
        in_port, b = item
        regs = self.sim.regs[self.fpga]
        out_port = regs.get(SWITCH_BASE + 4 * in_port)
        if out_port is None:
            raise RoutingError(f"{self.name}: in-port {in_port} has no route in wave {self.sim.wave} "
                               f"(stream {b.stream})")
        srv = self.ports.get(out_port)
        if srv is None:
            srv = self.ports[out_port] = Server(f"{self.name}.out{out_port}", self.rate, self.latency)
        o_first, o_last = srv.cut(b.t_first, b.t_last, b.nbeats)
        out = Burst(b.stream, b.cells, o_first, o_last, b.last, b.first)
        node = self.sim.fpga(self.fpga)
        if out_port == HOST_PORT:
            self.sim.schedule(o_first, node.vfifo, ("host_out", out))
        elif out_port == VFIFO_PORT:
            self.sim.schedule(o_first, node.vfifo, ("store", out))
        elif out_port == MFH_PORT:
            self.sim.schedule(o_first, node.mfh, ("encap", out))
        else:
            ip = node.ips.get(out_port)
            if ip is None:
                raise RoutingError(f"{self.name}: out-port {out_port} has no IP attached")
            self.sim.schedule(o_first, ip, out)


class IpCore(Component):
    def __init__(self, sim, fpga, slot, clock_hz):
        super().__init__(sim, f"ip{fpga}.{slot.slot_id}")
        self.fpga = fpga
        self.slot = slot
        self.cycle = 1.0 / clock_hz
        self.free = 0.0
        self.busy = 0.0
        self.model: LineBufferIP | None = None
        self.starts: list[int] = []
        self.times: list[tuple] = []
        self.out_beats = 0
        self.seq = 0
        self.stream = ""

    def _kernel(self) -> tuple:
        regs = self.sim.regs[self.fpga]
        base = IP_BASE + IP_STRIDE * self.slot.slot_id
        dims = [regs.get(base + 4 * i, 0) for i in range(3)]
        dims = tuple(d for d in dims if d)
        if not dims:
            raise SimulationError(f"{self.name}: grid dims were never programmed")
        kind = self.slot.kernel
        ncoef = len(StencilKernel.default(kind).coeffs)
        coeffs = []
        for i in range(ncoef):
            v = regs.get(base + IP_COEFF + 4 * i)
            if v is None:
                raise SimulationError(f"{self.name}: coefficient {i} was never programmed")
            coeffs.append(bits_f32(v))
        return StencilKernel(kind, tuple(coeffs), self.sim.params.laplace3d_verbatim), dims

    def _arrival(self, beat: int) -> float:
        i = bisect.bisect_right(self.starts, beat) - 1
        start, nb, t_first, t_last = self.times[i]
        if nb <= 1:
            return t_last
        return t_first + (t_last - t_first) * (beat - start) / (nb - 1)

    def handle(self, t, b: Burst):
        if self.model is None or self.model.done:
            kernel, dims = self._kernel()
            self.model = LineBufferIP(kernel, dims)
            self.starts, self.times, self.out_beats = [], [], 0
            self.seq += 1
            self.stream = f"{self.name}#{self.seq}"
            self.sim.record(b.t_first, self.name, f"start:{b.stream}", 0)
            self.sim.compute_window(b.t_first)
        m = self.model
        self.starts.append(self.model.received // CELLS_PER_BEAT)
        self.times.append((self.starts[-1], b.nbeats, b.t_first, b.t_last))
        out = m.push(b.cells)
        if not out.size:
            return
        out = pad_cells(out) if m.done else out
        o0 = self.out_beats
        k = out.size // CELLS_PER_BEAT
        o1 = o0 + k
        need_first = min(o0 + m.fill_cycles - 1, m.beats - 1)
        need_last = min(o1 - 1 + m.fill_cycles - 1, m.beats - 1)
        o_first = max(self._arrival(need_first), self.free) + self.cycle
        o_last = max(o_first + (k - 1) * self.cycle, self._arrival(need_last) + self.cycle)
        self.free = o_last
        self.busy += k * self.cycle
        self.out_beats = o1
        done = m.done
        if done:
            self.sim.record(o_last, self.name, f"end:{self.stream}", m.n * 4)
            self.sim.compute_window(o_last)
        nxt = Burst(self.stream, out, o_first, o_last, done, o0 == 0)
        self.sim.schedule(o_first, self.sim.fpga(self.fpga).switch, (self.slot.switch_port, nxt))


class Mfh(Component):
    """MAC frame handler: frames outgoing streams, reassembles incoming ones."""

    def __init__(self, sim, fpga, rate, latency):
        super().__init__(sim, f"mfh{fpga}")
        self.fpga = fpga
        self.tx = Server(self.name + ".tx", rate, latency)
        self.latency = latency
        self.rx_latency = latency
        self.pending = bytearray()
        self.sent = 0
        self.frame_first = True
        self.rx: dict[str, bytearray] = defaultdict(bytearray)
        self.rx_first: dict[str, bool] = {}

    def _registers(self):
        regs = self.sim.regs[self.fpga]
        try:
            src = words_mac(regs[MFH_BASE + 0x0], regs[MFH_BASE + 0x4])
            dst = words_mac(regs[MFH_BASE + 0x8], regs[MFH_BASE + 0xC])
            length = regs[MFH_BASE + 0x10]
        except KeyError:
            raise RoutingError(f"{self.name}: frame handler used before being programmed") from None
        return src, dst, length

    def handle(self, t, item):
        kind, payload = item
        if kind == "encap":
            self._encap(payload)
        else:
            self._decap(t, payload)

    def _encap(self, b: Burst):
        src, dst, length = self._registers()
        o_first, o_last = self.tx.cut(b.t_first, b.t_last, b.nbeats)
        start = len(self.pending)
        self.pending += b.cells.astype("<f4").tobytes()
        mp = self.sim.params.max_payload
        nb = b.nbeats

        def ready(offset):
            beat = (offset - 1) // BEAT_BYTES
            if nb <= 1:
                return o_last
            return o_first + (o_last - o_first) * min(beat, nb - 1) / (nb - 1)

        consumed = 0
        while len(self.pending) - consumed >= mp or (b.last and len(self.pending) > consumed):
            size = min(mp, len(self.pending) - consumed)
            chunk = bytes(self.pending[consumed:consumed + size])
            consumed += size
            self.sent += size
            last = b.last and consumed == len(self.pending)
            if last and self.sent != length:
                raise FrameError(f"{self.name}: stream of {self.sent} bytes but length register says {length}")
            frame = MacFrame(dst, src, size, chunk)
            t_ready = ready(consumed - start)
            tok = FrameToken(frame, b.stream, last, self.frame_first)
            self.frame_first = False
            self.sim.net(self.fpga).send(tok, t_ready)
            if last:
                self.sent = 0
                self.frame_first = True
        del self.pending[:consumed]

    def _decap(self, t, tok: FrameToken):
        f = tok.frame
        if f.type_length != len(f.payload) or not f.payload:
            raise FrameError(f"{self.name}: bad frame length")
        t_avail = t + self.rx_latency
        buf = self.rx[tok.stream]
        buf += f.payload
        step = self.sim.params.burst_beats * BEAT_BYTES
        first = self.rx_first.get(tok.stream, True)
        while len(buf) >= step or (tok.last and buf):
            take = min(step, len(buf))
            take -= take % BEAT_BYTES if not tok.last or take < len(buf) else 0
            if take == 0:
                break
            cells = np.frombuffer(bytes(buf[:take]), dtype="<f4").astype(np.float32)
            del buf[:take]
            last = tok.last and not buf
            b = Burst(tok.stream, cells, t_avail, t_avail, last, first)
            first = False
            self.sim.schedule(t_avail, self.sim.fpga(self.fpga).switch, (MFH_PORT, b))
        self.rx_first[tok.stream] = first
        if tok.last:
            if buf:
                raise FrameError(f"{self.name}: {len(buf)} trailing bytes are not a whole beat")
            del self.rx[tok.stream]
            del self.rx_first[tok.stream]


class Net(Component):
    """Network subsystem of one board: four NET ports with MAC addresses."""

    def __init__(self, sim, fpga, macs):
        super().__init__(sim, f"net{fpga}")
        self.fpga = fpga
        self.macs = set(macs)

    def send(self, tok: FrameToken, t_ready: float):
        dst_fpga = self.sim.mac_owner.get(tok.frame.dst_mac)
        if dst_fpga is None:
            raise RoutingError(f"{self.name}: no board owns MAC {tok.frame.dst_mac}")
        link_idx, _, nxt = net_path(self.sim.cluster, self.fpga, dst_fpga)[0]
        t_arr = self.sim.link_server(link_idx, self.fpga).store(t_ready, tok.frame.wire_bytes)
        self.sim.frames += 1
        key = f"F{self.fpga}->F{nxt}"
        self.sim.link_bytes[key] = self.sim.link_bytes.get(key, 0) + tok.frame.wire_bytes
        self.sim.schedule(t_arr, self.sim.net(nxt), tok)

    def handle(self, t, tok: FrameToken):
        if tok.frame.dst_mac in self.macs:
            self.sim.schedule(t, self.sim.fpga(self.fpga).mfh, ("decap", tok))
        elif self.sim.params.net_forwarding:
            self.send(tok, t)
        else:
            raise FrameError(f"{self.name}: misrouted frame for {tok.frame.dst_mac}")


@dataclass
class _Board:
    switch: Switch
    vfifo: Vfifo
    mfh: Mfh
    net: Net
    ips: dict


class Simulator:
    def __init__(self, cluster: ClusterDesc, params: SimParams | None = None):
        self.cluster = cluster
        self.params = params or SimParams()
        clock = self.params.clock_hz or cluster.clock_hz
        self.clock_hz = clock
        beat_rate = BEAT_BYTES * clock
        hop = self.params.hop_latency_cycles / clock
        self._components: list[Component] = []
        self._queue: list = []
        self._seq = itertools.count()
        self.horizon = 0.0
        self.trace: list = []
        self.frames = 0
        self.link_bytes: dict = {}
        self.host_transfers = 0
        self.wave = 0
        self.regs = {f.id: {} for f in cluster.fpgas}
        self.mac_owner = {m: f.id for f in cluster.fpgas for m in f.macs}
        self._links: dict[tuple, Server] = {}
        self._compute = [math.inf, -math.inf]
        self.outputs: dict[str, tuple] = {}

        host_fpga = cluster.fpgas[0].id
        self.host_dma = HostDMA(self, host_fpga, cluster.host_link.bytes_per_sec, self.params.dma_latency_s)
        self.boards = {}
        for f in cluster.fpgas:
            ips = {s.switch_port: IpCore(self, f.id, s, clock) for s in f.ips}
            self.boards[f.id] = _Board(
                Switch(self, f.id, beat_rate, hop),
                Vfifo(self, f.id, self.params.vfifo_bytes_per_sec),
                Mfh(self, f.id, beat_rate, hop),
                Net(self, f.id, f.macs),
                ips,
            )

    # plumbing used by components
    def register(self, comp) -> int:
        self._components.append(comp)
        return len(self._components) - 1

    def fpga(self, fid) -> _Board:
        return self.boards[fid]

    def net(self, fid) -> Net:
        return self.boards[fid].net

    def link_server(self, idx: int, from_fpga: int) -> Server:
        key = (idx, from_fpga)
        srv = self._links.get(key)
        if srv is None:
            l = self.cluster.links[idx]
            srv = Server(f"link{idx}.{from_fpga}", l.bandwidth_bps / 8.0, l.latency_s)
            self._links[key] = srv
        return srv

    def schedule(self, t: float, comp: Component, item):
        heapq.heappush(self._queue, (t, comp.uid, next(self._seq), comp, item))
        self.touch(t)

    def touch(self, t: float):
        if t > self.horizon:
            self.horizon = t

    def record(self, t, component, event, nbytes):
        if self.params.trace:
            self.trace.append((t, component, event, nbytes))

    def compute_window(self, t):
        self._compute[0] = min(self._compute[0], t)
        self._compute[1] = max(self._compute[1], t)

    def egress_done(self, stream, cells, t):
        self.outputs[stream] = (cells, t)

    def program(self, writes) -> int:
        """Apply ``writes``; return how many actually change a register
        (the driver skips rewriting a value the register already holds)."""
        changed = 0
        for w in writes:
            regs = self.regs[w.fpga]
            if regs.get(w.offset) != w.value:
                regs[w.offset] = w.value
                changed += 1
        return changed

    def _drain(self):
        q = self._queue
        while q:
            t, _, _, comp, item = heapq.heappop(q)
            comp.handle(t, item)

    def _stalled(self) -> list:
        out = []
        for fid, b in self.boards.items():
            for ip in b.ips.values():
                if ip.model is not None and not ip.model.done:
                    out.append(f"{ip.name} holds {ip.model.received}/{ip.model.n} cells")
            if b.mfh.rx:
                out.append(f"{b.mfh.name} holds a partial frame stream")
            if b.mfh.pending:
                out.append(f"{b.mfh.name} holds {len(b.mfh.pending)} unframed bytes")
            if b.vfifo.held:
                out.append(f"{b.vfifo.name} holds {len(b.vfifo.held)} bursts nobody reads")
        return out

    def run(self, waves: int, writes, ingress: dict, egress: dict) -> float:
        """Run every session. ``ingress`` maps buffer -> grid; ``egress`` maps
        buffer -> grid shape. Returns the end time."""
        by_wave = defaultdict(list)
        for w in writes:
            by_wave[w.wave].append(w)
        t = 0.0
        for wave in range(waves):
            self.wave = wave
            t += self.program(by_wave.get(wave, [])) * self.params.conf_write_s
            self.touch(t)
            self.record(t, "conf", f"wave_start:{wave}", 0)
            if wave == 0:
                for buffer, grid in ingress.items():
                    self.host_dma.start_ingress(buffer, grid, t)
            for b in self.boards.values():
                b.vfifo.release(t)
            self._drain()
            t = max(t, self.horizon)
        stalled = self._stalled()
        if stalled:
            raise DeadlockError("no event progress with data pending: " + "; ".join(stalled))
        if len(self.outputs) < len(egress):
            raise DeadlockError(f"only {len(self.outputs)} of {len(egress)} results reached the host")
        return t

    def busy(self) -> dict:
        out = {}
        out[self.host_dma.h2d.name] = self.host_dma.h2d.busy
        out[self.host_dma.d2h.name] = self.host_dma.d2h.busy
        for b in self.boards.values():
            for srv in b.vfifo.chan.values():
                out[srv.name] = srv.busy
            out[b.mfh.tx.name] = b.mfh.tx.busy
            for srv in b.switch.ports.values():
                out[srv.name] = srv.busy
            for ip in b.ips.values():
                out[ip.name] = ip.busy
        for srv in self._links.values():
            out[srv.name] = srv.busy
        return out


def simulate(graph, placement, routes, conf_writes, host_buffers: dict, cluster: ClusterDesc,
             clock_hz: float | None = None, params: SimParams | None = None) -> SimResult:
    """Run the planned task graph on the simulated fabric.

    ``host_buffers`` maps buffer names to grids.  Only ``conf_writes`` steer
    the data; ``routes`` is used to know which buffers enter and leave.
    """
    params = params or SimParams()
    if clock_hz is not None:
        params = SimParams(**{**params.__dict__, "clock_hz": clock_hz})
    for (p, c), r in routes.routes.items():
        if placement[c].wave > placement[p].wave + 1:
            raise SimulationError(f"edge {p}->{c} skips a wave; the VFIFO releases data one wave later")
    sim = Simulator(cluster, params)
    ingress = {}
    for buffer in routes.ingress:
        if buffer not in host_buffers:
            raise SimulationError(f"no host data for buffer {buffer!r}")
        grid = as_grid(host_buffers[buffer])
        first = routes.ingress[buffer].dst
        if tuple(graph.nodes[first].args.dims) != grid.shape:
            raise SimulationError(f"buffer {buffer!r} has shape {grid.shape}, task {first} expects "
                                  f"{tuple(graph.nodes[first].args.dims)}")
        ingress[buffer] = grid
    egress = {b: tuple(graph.nodes[r.src].args.dims) for b, r in routes.egress.items()}
    writes = sorted(conf_writes, key=lambda w: w.wave) if not isinstance(conf_writes, list) else conf_writes
    end = sim.run(placement.waves, writes, ingress, egress)

    # Results land in host memory under the producing IP's stream name;
    # match them back to buffers through the egress routes.
    final = {b: as_grid(host_buffers[b]).copy() for b in host_buffers}
    elapsed = end
    stream_of = {}
    for buffer, r in routes.egress.items():
        a = placement[r.src]
        ip = sim.boards[a.fpga].ips[a.port]
        stream_of[buffer] = ip.name
    for buffer, shape in egress.items():
        prefix = stream_of[buffer] + "#"
        hits = [(t, s, cells) for s, (cells, t) in sim.outputs.items() if s.startswith(prefix)]
        if not hits:
            raise DeadlockError(f"result for {buffer!r} never reached the host")
        t, _, cells = max(hits, key=lambda h: h[0])
        n = math.prod(shape)
        final[buffer] = cells[:n].reshape(shape).copy()
    if sim.outputs:
        elapsed = max(t for _, t in sim.outputs.values())
    lo, hi = sim._compute
    compute = hi - lo if hi >= lo else 0.0
    return SimResult(final, elapsed, compute, sim.busy(), sim.frames, dict(sim.link_bytes),
                     sim.host_transfers, placement.waves, sim.trace)
