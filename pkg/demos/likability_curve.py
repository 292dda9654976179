# coding: utf-8

# # Latency, resemblance and the uncanny valley
#
# Latency becomes a resemblance score in (0, 1]; resemblance becomes
# likability through a curve with a single valley.  Faster is not always
# better liked: a hologram that is almost, but not quite, real scores
# worse than an obviously delayed one.

import numpy as np

from holosched.metrics import DEFAULT_CURVE, LikabilityCurve, MetricsError, resemblance, score

r = np.linspace(0, 1, 11)
for ri, yi in zip(r, DEFAULT_CURVE(r)):
    print(f"r = {ri:.1f}  likability {yi:+.3f}")

# With a 3 s reference latency, the range 0.3 s to 1 s sits on the
# rising side past the valley, so lower latency scores better there.

for lat in (0.1, 0.3, 0.6, 0.9, 1.5, 3.0):
    print(f"{lat * 1e3:6.0f} ms  r {resemblance(lat, 3.0):.3f}  score {score(lat, l_ref_s=3.0):+.3f}")

# Curves without exactly one valley are refused

try:
    LikabilityCurve(((0, 0), (0.5, 0.5), (0.8, 0.9), (1, 1)))
except MetricsError as exc:
    print("rejected:", exc)
