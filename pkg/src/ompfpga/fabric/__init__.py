"""Simulated FPGA fabric: stream IPs, frame handling and the event-driven datapath."""

from .frames import MacFrame, FrameError, LinkParams, mfh_decap, mfh_encap, transfer_time
from .ippipeline import LineBufferIP, StreamBeat, grid_to_beats, beats_to_grid, ip_process_stream
from .sim import DeadlockError, RoutingError, SimParams, SimResult, SimulationError, simulate

__all__ = [
    "MacFrame", "FrameError", "LinkParams", "mfh_decap", "mfh_encap", "transfer_time",
    "LineBufferIP", "StreamBeat", "grid_to_beats", "beats_to_grid", "ip_process_stream",
    "DeadlockError", "RoutingError", "SimParams", "SimResult", "SimulationError", "simulate",
]
