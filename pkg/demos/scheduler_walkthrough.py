# coding: utf-8

# # Two-stage scheduling against the baselines
#
# Stage 1 solves a linear program for the smallest achievable worst-user
# latency.  Stage 2 looks for the fewest servers per user that still reach
# it.  The baselines do something simpler.

from holosched import oracles, scheduler
from holosched.config import load_default
from holosched.model import report
from holosched.sim import sample

cfg = load_default()
sc = sample(cfg.template, 0)
for s in sc.servers:
    print(f"server {s.id}: queue {s.queue_len}, unsplit time "
          f"{sc.service_time(sc.users[0], s.id):.3f} s")

# Stage 1 alone

s1 = scheduler.solve_lp1(sc)
print(f"stage 1 bound l* = {s1.l_max * 1e3:.1f} ms")

# Both stages

res = scheduler.schedule_proposed_detail(sc)
for a in res.schedule.allocations:
    shares = ", ".join(f"{m}: {x:.3f}" for m, x in sorted(a.fractions.items()) if x > 0)
    print(f"user {a.user} -> {{{shares}}}, merged on {a.integrator}")
print(f"achieved l_max = {res.l_max * 1e3:.1f} ms")

# The baselines on the same draw

policies = {
    "jsq": scheduler.schedule_jsq(sc),
    "split": scheduler.schedule_split_evenly(sc),
    "local": scheduler.schedule_local(sc, cfg.local_capacity),
}
for name, sched in policies.items():
    print(f"{name:>6}: l_max {report(sc, sched).max_latency_s * 1e3:.1f} ms")

# A brute-force grid over the split simplex lands just above the LP value,
# because the grid cannot hit the exact optimum.

for res_ in (0.02, 0.005):
    print(f"grid {res_}: {oracles.grid_min_max_latency(sc, res_) * 1e3:.1f} ms")
