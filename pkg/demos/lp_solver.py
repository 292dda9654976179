# coding: utf-8

# # A small simplex solver
#
# The scheduler only ever needs small dense programs, so the package ships
# its own two-phase simplex with Bland's rule.  Here it is on a textbook
# problem, on a degenerate one, and against brute-force vertex enumeration.

import numpy as np

from holosched import lp
from holosched.oracles import random_lp, vertex_enumeration

# max 2x + 3y  s.t.  x + y <= 100,  6x + 3y <= 360,  x + 2y <= 120

prog = lp.LinearProgram([-2.0, -3.0], [
    ([1, 1], "<=", 100),
    ([6, 3], "<=", 360),
    ([1, 2], "<=", 120),
])
sol = lp.solve(prog)
print(sol.status, sol.x, -sol.objective_value)

# Beale's program cycles forever under the largest-coefficient rule.
# Bland's rule gets through it.

beale = lp.LinearProgram([-0.75, 150.0, -0.02, 6.0], [
    ([0.25, -60.0, -0.04, 9.0], "<=", 0.0),
    ([0.5, -90.0, -0.02, 3.0], "<=", 0.0),
    ([0.0, 0.0, 1.0, 0.0], "<=", 1.0),
])
sol = lp.solve(beale)
print("beale:", sol.objective_value, "after", sol.iterations, "pivots")

# Infeasible and unbounded programs come back with a status, not an exception

print(lp.solve(lp.LinearProgram([1.0], [([1.0], "<=", 1.0), ([1.0], ">=", 2.0)])).status)
print(lp.solve(lp.LinearProgram([-1.0, 0.0], [([1.0, -1.0], "<=", 1.0)])).status)

# Cross-check on random bounded programs

devs = []
for seed in range(50):
    p = random_lp(np.random.default_rng(seed))
    ref, _ = vertex_enumeration(p)
    devs.append(abs(lp.solve(p).objective_value - ref))
print(f"max deviation from vertex enumeration over 50 programs: {max(devs):.2e}")
