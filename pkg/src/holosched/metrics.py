"""Latency statistics and the uncanny-valley likability score.

Latency maps to a resemblance in (0, 1] through ``1 / (1 + L / l_ref)``.
Resemblance maps to likability through a monotone piecewise-cubic curve
shaped like Mori's uncanny valley: likability rises, dips into a valley at
high-but-imperfect resemblance, then climbs to 1 at full resemblance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

DEFAULT_L_REF_S = 0.5
DEFAULT_KNOTS: Tuple[Tuple[float, float], ...] = (
    (0.0, 0.0),
    (0.35, 0.45),
    (0.60, 0.20),
    (0.75, -0.30),
    (0.87, 0.10),
    (1.0, 1.0),
)


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class LikabilityCurve:
    knots: Tuple[Tuple[float, float], ...] = DEFAULT_KNOTS

    def __post_init__(self):
        knots = tuple((float(r), float(y)) for r, y in self.knots)
        object.__setattr__(self, "knots", knots)
        for problem in curve_problems(knots):
            raise MetricsError(problem)
        r, y = zip(*knots)
        object.__setattr__(self, "_interp", PchipInterpolator(r, y, extrapolate=False))

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        if np.any((r_arr < 0) | (r_arr > 1)) or np.any(np.isnan(r_arr)):
            raise MetricsError(f"resemblance must lie in [0, 1], got {r}")
        out = self._interp(r_arr)
        return float(out) if out.ndim == 0 else out


def curve_problems(knots: Sequence[Tuple[float, float]]) -> list:
    """Reasons a knot list cannot define a valley curve; empty when valid."""
    if len(knots) < 4:
        return [f"curve needs at least 4 knots, got {len(knots)}"]
    r = [k[0] for k in knots]
    y = [k[1] for k in knots]
    problems = []
    if r[0] != 0.0 or r[-1] != 1.0:
        problems.append("curve knots must start at resemblance 0 and end at 1")
    if any(b <= a for a, b in zip(r, r[1:])):
        problems.append("curve knot resemblances must be strictly increasing")
    if any(not -1.0 <= v <= 1.0 for v in y):
        problems.append("curve knot likabilities must lie in [-1, 1]")
    minima = sum(1 for i in range(1, len(y) - 1) if y[i] < y[i - 1] and y[i] < y[i + 1])
    if minima != 1:
        problems.append(f"curve must have exactly one interior valley, found {minima}")
    return problems


DEFAULT_CURVE = LikabilityCurve()


def resemblance(total_latency_s, l_ref_s: float = DEFAULT_L_REF_S):
    if not l_ref_s > 0:
        raise MetricsError(f"l_ref_s must be > 0, got {l_ref_s}")
    lat = np.asarray(total_latency_s, dtype=float)
    if np.any(lat < 0) or np.any(np.isnan(lat)):
        raise MetricsError("latency must be >= 0")
    r = 1.0 / (1.0 + lat / l_ref_s)
    return float(r) if r.ndim == 0 else r


def likability(r, curve: LikabilityCurve = DEFAULT_CURVE):
    return curve(r)


def score(total_latency_s, curve: LikabilityCurve = DEFAULT_CURVE,
          l_ref_s: float = DEFAULT_L_REF_S):
    """Likability of a latency (seconds)."""
    return curve(resemblance(total_latency_s, l_ref_s))


@dataclass(frozen=True)
class PolicyResult:
    policy: str
    mean_latency_ms: float
    std_latency_ms: float
    mean_likability: float
    std_likability: float
    n_runs: int


def aggregate(reports: Iterable, curve: LikabilityCurve = DEFAULT_CURVE,
              l_ref_s: float = DEFAULT_L_REF_S, policy: str = "") -> PolicyResult:
    """Pool per-user totals over all runs; population standard deviations."""
    reports = list(reports)
    if not reports:
        raise MetricsError("aggregate needs at least one report")
    totals = np.array([t for rep in reports for t in rep.totals()])
    scores = np.asarray(score(totals, curve, l_ref_s))
    return PolicyResult(
        policy=policy,
        mean_latency_ms=float(totals.mean() * 1e3),
        std_latency_ms=float(totals.std() * 1e3),
        mean_likability=float(scores.mean()),
        std_likability=float(scores.std()),
        n_runs=len(reports),
    )


def relative_change(value: float, reference: float) -> Optional[float]:
    """(value - reference) / |reference|, or None when the reference is 0."""
    if reference == 0:
        return None
    return (value - reference) / abs(reference)
