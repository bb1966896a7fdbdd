"""
Bursts on the wire
==================

"""

import numpy as np
from ompfpga.fabric.frames import LinkParams, frame_sizes, mfh_decap, mfh_encap, transfer_time

src, dst = "02:0a:00:00:00:00", "02:0a:00:00:01:01"

# a 64-beat burst is 2048 bytes: two frames
payload = np.arange(512, dtype=np.float32).tobytes()
frames = mfh_encap(payload, src, dst)
print([f.type_length for f in frames])
print(frames[0].to_bytes()[:16].hex())
print(mfh_decap(frames) == payload)

# jumbo frames carry it in one
print(frame_sizes(len(payload), 9000))

# wire time on a 10 Gb/s link with the 14-byte header
link = LinkParams.from_bits(10e9, overhead_bytes=14)
print(sum(transfer_time(f.type_length, link) for f in frames))
