# coding: utf-8

# # Where the time goes
#
# A holographic frame has to reach the edge, be processed, and (if it was
# split) be stitched back together on one server.  This script builds a
# tiny three-server scenario by hand and prices a few allocations.

import numpy as np

from holosched.model import (
    Allocation, ComputeOp, DataClass, InterServerLinks, MecServer, Scenario,
    Schedule, TeleportedUser, report, user_latency,
)

# One data class: an 80 Mb frame that needs decoding (1 unit) and
# reconstruction (2 units).  Capacities are in units per second.

ops = [ComputeOp(0, "decode"), ComputeOp(1, "reconstruct")]
frame = DataClass(0, 8e7, {0: 1.0, 1: 2.0}, "frame")
servers = [
    MecServer(0, {(0, 0): 4.0, (0, 1): 5.0}),
    MecServer(1, {(0, 0): 2.0, (0, 1): 4.0}),
    MecServer(2, {(0, 0): 1.0, (0, 1): 2.0}),
]
user = TeleportedUser(0, 0, (0, 1), {0: 2e9, 1: 1e9, 2: 4e9})
links = InterServerLinks({(0, 1): 5e9, (0, 2): 8e9, (1, 2): 1e10})
sc = Scenario(servers, [user], links, [frame], ops, split_overhead=0.05)

# Unsplit service times, fastest server first

for m in sc.server_ids:
    print(f"server {m}: {sc.service_time(user, m):.3f} s of compute")

# Everything on the fastest server: no integration step at all

whole = user_latency(sc, Allocation(0, {0: 1.0}, 0))
print(whole, f"total {whole.total_s:.4f} s")

# An even three-way split pays 5% overhead per extra piece and a merge
# step, but the slowest third now dominates the compute time.

even = user_latency(sc, Allocation(0, {0: 1 / 3, 1: 1 / 3, 2: 1 / 3}, 2))
print(even, f"total {even.total_s:.4f} s")

# Sweeping the share sent to server 0 (rest to server 1) shows the
# crossover where splitting starts to help.

for x in np.linspace(0.5, 1.0, 6):
    lat = user_latency(sc, Allocation(0, {0: x, 1: 1 - x}, 0))
    print(f"x0 = {x:.1f}: {lat.total_s * 1e3:7.1f} ms")

# report() prices a whole schedule and keeps the worst user

rep = report(sc, Schedule([Allocation(0, {0: 0.7, 1: 0.3}, 0)]))
print(f"worst user: {rep.max_latency_s * 1e3:.1f} ms, splits {rep.split_counts}")
