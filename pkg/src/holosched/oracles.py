"""Brute-force cross-checks for the LP solver and the proposed scheduler.

Nothing here calls into ``lp.solve`` or the scheduler's LP blocks:

* ``vertex_enumeration`` finds an LP optimum by solving every square system
  of active constraints and keeping the best feasible point.
* ``grid_min_max_latency`` evaluates the latency model directly (vectorized
  numpy, its own code) on a simplex grid of fractions.
* ``min_total_splits`` enumerates joint split patterns and checks each with
  scipy's HiGHS solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from . import lp as lpmod
from .model import Scenario


# --- LP ------------------------------------------------------------------------

def random_lp(rng: np.random.Generator, max_vars: int = 6, max_rows: int = 8) -> lpmod.LinearProgram:
    """A random LP that is feasible by construction and bounded by its box."""
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    hi = rng.uniform(2.0, 10.0, size=n)
    x0 = rng.uniform(0.0, 1.0, size=n) * hi
    prog = lpmod.LinearProgram(objective=rng.normal(size=n))
    n_eq = 0
    for _ in range(m):
        a = rng.normal(size=n)
        a[rng.random(n) < 0.25] = 0.0
        kind = rng.random()
        if kind < 0.15 and n_eq < n - 1:
            prog.add(a, lpmod.EQ, float(a @ x0))
            n_eq += 1
        elif kind < 0.6:
            prog.add(a, lpmod.LE, float(a @ x0 + rng.uniform(0.0, 2.0)))
        else:
            prog.add(a, lpmod.GE, float(a @ x0 - rng.uniform(0.0, 2.0)))
    prog.bounds = [(0.0, float(h)) for h in hi]
    return prog


def vertex_enumeration(prog: lpmod.LinearProgram, tol: float = 1e-7) -> Tuple[float, np.ndarray]:
    """Best basic feasible point; requires a bounded feasible region."""
    n = prog.n_vars
    rows, rhs, is_eq = [], [], []
    for con in prog.constraints:
        rows.append(con.coeffs)
        rhs.append(con.rhs)
        is_eq.append(con.relation == lpmod.EQ)
    for j, (lo, hi) in enumerate(prog.bounds):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append(e)
        rhs.append(lo)
        is_eq.append(False)
        if np.isfinite(hi):
            rows.append(e)
            rhs.append(hi)
            is_eq.append(False)
    A = np.asarray(rows, dtype=float)
    b = np.asarray(rhs, dtype=float)
    eq = [i for i, e in enumerate(is_eq) if e]
    ineq = [i for i, e in enumerate(is_eq) if not e]
    need = n - len(eq)
    if need < 0:
        raise ValueError("more equalities than variables")
    combos = [tuple(eq) + c for c in itertools.combinations(ineq, need)]
    if not combos:
        raise ValueError("no candidate vertices")
    idx = np.array(combos)
    mats = A[idx]
    vecs = b[idx]
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-12
    pts = np.linalg.solve(mats[ok], vecs[ok][..., None])[..., 0]
    feasible = _violations(prog, pts) <= tol
    if not feasible.any():
        raise ValueError("no feasible vertex")
    pts = pts[feasible]
    vals = pts @ np.asarray(prog.objective, dtype=float)
    k = int(np.argmin(vals))
    return float(vals[k]), pts[k]


def _violations(prog: lpmod.LinearProgram, pts: np.ndarray) -> np.ndarray:
    """Row-scaled worst violation of each point, as LinearProgram.max_violation."""
    worst = np.zeros(len(pts))
    for row in prog.constraints:
        a = np.asarray(row.coeffs, dtype=float)
        r = (pts @ a - row.rhs) / max(np.max(np.abs(a)), 1e-300)
        if row.relation == lpmod.LE:
            worst = np.maximum(worst, r)
        elif row.relation == lpmod.GE:
            worst = np.maximum(worst, -r)
        else:
            worst = np.maximum(worst, np.abs(r))
    lo = np.array([b[0] for b in prog.bounds])
    hi = np.array([b[1] for b in prog.bounds])
    worst = np.maximum(worst, np.max(lo - pts, axis=1))
    return np.maximum(worst, np.max(pts - hi, axis=1))


# --- scheduler -----------------------------------------------------------------

def simplex_grid(n_servers: int, resolution: float) -> np.ndarray:
    """All fraction vectors with entries on multiples of ``resolution``."""
    steps = int(round(1.0 / resolution))
    pts = [c for c in itertools.product(range(steps + 1), repeat=n_servers - 1) if sum(c) <= steps]
    out = np.array([list(c) + [steps - sum(c)] for c in pts], dtype=float)
    return out / steps


def _user_arrays(scenario: Scenario, n: int):
    user = next(u for u in scenario.users if u.id == n)
    dc = next(k for k in scenario.classes if k.id == user.class_id)
    servers = [s.id for s in scenario.servers]
    s = dc.size_bits
    comm = np.array([s / user.uplink_bw[m] for m in servers])
    work = np.array([
        sum(dc.base_workload[c] / srv.capacity[(dc.id, c)] for c in user.ops)
        for srv in scenario.servers
    ])
    inter = np.zeros((len(servers), len(servers)))
    for i, a in enumerate(servers):
        for j, b in enumerate(servers):
            if i != j:
                bw = scenario.links.bw.get((a, b), scenario.links.bw.get((b, a)))
                inter[i, j] = s / bw
    return comm, work, inter


def grid_latencies(scenario: Scenario, n: int, grid: np.ndarray) -> np.ndarray:
    """Latency of user ``n`` at every grid point, best integrator per point."""
    comm, work, inter = _user_arrays(scenario, n)
    active = grid > 1e-6
    t = active.sum(axis=1)
    inflation = 1.0 + scenario.split_overhead * (t - 1)
    comm_s = grid @ comm
    comp_s = (grid * work).max(axis=1) * inflation
    # integ[p, I] = sum_{m != I} x_m * s / b[m, I]; inter has a zero diagonal
    integ = grid @ inter
    integ = np.where(active, integ, np.inf).min(axis=1)
    integ = np.where(t >= 2, integ, 0.0)
    return comm_s + comp_s + integ


def grid_min_max_latency(scenario: Scenario, resolution: float = 0.02) -> float:
    """Minimum over grid fractions of the largest user latency.

    Users' latencies depend only on their own fractions, so the joint
    minimum of the maximum is the maximum of per-user minima.
    """
    grid = simplex_grid(len(scenario.servers), resolution)
    return max(float(grid_latencies(scenario, u.id, grid).min()) for u in scenario.users)


@dataclass(frozen=True)
class SplitOracleResult:
    min_total_splits: int
    feasible_combination: Tuple[Tuple[int, ...], ...]


def _pattern_feasible(scenario: Scenario, n: int, pattern: Sequence[int], cap: float,
                      floor: float) -> bool:
    """HiGHS feasibility of latency <= cap with support exactly ``pattern``."""
    comm, work, inter = _user_arrays(scenario, n)
    servers = [s.id for s in scenario.servers]
    idx = [servers.index(m) for m in pattern]
    k = len(idx)
    inflation = 1.0 + scenario.split_overhead * (k - 1)
    integrators = idx if k > 1 else [None]
    for I in integrators:
        # variables: x (k), z
        c = np.zeros(k + 1)
        A_ub, b_ub = [], []
        for j, i in enumerate(idx):
            row = np.zeros(k + 1)
            row[j] = work[i] * inflation
            row[k] = -1.0
            A_ub.append(row)
            b_ub.append(0.0)
        row = np.zeros(k + 1)
        for j, i in enumerate(idx):
            row[j] = comm[i] + (inter[i, I] if I is not None else 0.0)
        row[k] = 1.0
        A_ub.append(row)
        b_ub.append(cap)
        A_eq = [np.r_[np.ones(k), 0.0]]
        lo = 1.0 if k == 1 else floor
        res = linprog(c, A_ub=np.array(A_ub), b_ub=b_ub, A_eq=np.array(A_eq), b_eq=[1.0],
                      bounds=[(lo, 1.0)] * k + [(0, None)], method="highs")
        if res.status == 0:
            return True
    return False


def min_total_splits(scenario: Scenario, cap: float, floor: float = 1e-5,
                     max_servers: int = 3) -> SplitOracleResult:
    """Smallest total split count of any joint pattern meeting ``cap``.

    Combinations are enumerated jointly over all users in increasing total
    size; the first feasible one is returned.
    """
    servers = sorted(s.id for s in scenario.servers)
    if len(servers) > max_servers:
        raise ValueError(f"pattern oracle limited to {max_servers} servers")
    patterns = [p for size in range(1, len(servers) + 1)
                for p in itertools.combinations(servers, size)]
    users = sorted(u.id for u in scenario.users)
    cache: Dict[Tuple[int, Tuple[int, ...]], bool] = {}
    combos = sorted(itertools.product(patterns, repeat=len(users)),
                    key=lambda combo: sum(len(p) for p in combo))
    for combo in combos:
        ok = True
        for n, p in zip(users, combo):
            key = (n, p)
            if key not in cache:
                cache[key] = _pattern_feasible(scenario, n, p, cap, floor)
            if not cache[key]:
                ok = False
                break
        if ok:
            return SplitOracleResult(sum(len(p) for p in combo), combo)
    raise ValueError("no pattern combination meets the cap")
