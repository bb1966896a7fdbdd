"""MAC frame handler (MFH) framing and link timing."""

from __future__ import annotations

import math
from dataclasses import dataclass

MAC_HEADER_BYTES = 14  # dst(6) + src(6) + type/length(2)
DEFAULT_MAX_PAYLOAD = 1500
JUMBO_MAX_PAYLOAD = 9000


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class MacFrame:
    dst_mac: str
    src_mac: str
    type_length: int
    payload: bytes

    def __post_init__(self):
        if len(self.payload) != self.type_length:
            raise FrameError(f"type/length {self.type_length} != payload length {len(self.payload)}")

    @property
    def wire_bytes(self) -> int:
        return MAC_HEADER_BYTES + self.type_length

    def to_bytes(self) -> bytes:
        return (bytes.fromhex(self.dst_mac.replace(":", "")) + bytes.fromhex(self.src_mac.replace(":", ""))
                + self.type_length.to_bytes(2, "big") + self.payload)


def frame_sizes(nbytes: int, max_payload: int = DEFAULT_MAX_PAYLOAD) -> list:
    """Payload sizes of the frames carrying ``nbytes``: full frames, then the rest."""
    full, rest = divmod(nbytes, max_payload)
    return [max_payload] * full + ([rest] if rest else [])


def mfh_encap(payload: bytes, src_mac: str, dst_mac: str, max_payload: int = DEFAULT_MAX_PAYLOAD) -> list:
    if max_payload < 32:
        raise FrameError("max_payload must hold at least one 32-byte beat")
    if max_payload > 0xFFFF:
        raise FrameError("max_payload does not fit the type/length field")
    if not payload:
        raise FrameError("cannot frame an empty payload")
    payload = bytes(payload)
    frames = []
    for start in range(0, len(payload), max_payload):
        chunk = payload[start:start + max_payload]
        frames.append(MacFrame(dst_mac, src_mac, len(chunk), chunk))
    return frames


def mfh_decap(frames, local_macs=None, forwarding: bool = True) -> bytes:
    """Reassemble a transfer.  ``local_macs`` (when given) are the receiving
    board's addresses; a frame for another board is an error unless
    ``forwarding`` is on, in which case the caller is expected to forward it
    rather than decapsulate it."""
    frames = list(frames)
    if not frames:
        raise FrameError("no frames to decapsulate")
    pair = (frames[0].src_mac, frames[0].dst_mac)
    out = bytearray()
    for i, f in enumerate(frames):
        if f.type_length == 0 or not f.payload:
            raise FrameError(f"frame {i} has an empty payload")
        if len(f.payload) != f.type_length:
            raise FrameError(f"frame {i}: length mismatch")
        if (f.src_mac, f.dst_mac) != pair:
            raise FrameError(f"frame {i} belongs to a different MAC pair {f.src_mac}->{f.dst_mac}")
        if local_macs is not None and f.dst_mac not in local_macs:
            if not forwarding:
                raise FrameError(f"misrouted frame for {f.dst_mac}")
            raise FrameError(f"frame for {f.dst_mac} must be forwarded, not decapsulated here")
        out += f.payload
    return bytes(out)


@dataclass(frozen=True)
class LinkParams:
    bandwidth: float           # bytes/s
    overhead_bytes: int = 0    # per frame
    latency: float = 0.0       # s
    max_payload: int = DEFAULT_MAX_PAYLOAD

    @classmethod
    def from_bits(cls, bits_per_s: float, **kw) -> "LinkParams":
        return cls(bits_per_s / 8.0, **kw)


def transfer_time(nbytes: int, link: LinkParams) -> float:
    if nbytes <= 0:
        raise FrameError("transfer must carry at least one byte")
    if link.bandwidth <= 0:
        raise FrameError("link bandwidth must be positive")
    frames = math.ceil(nbytes / link.max_payload) if link.overhead_bytes else 0
    return link.latency + (nbytes + frames * link.overhead_bytes) / link.bandwidth
