"""Dense two-phase primal simplex for small linear programs.

Problems are stated as::

    minimize    c @ x
    subject to  a_i @ x  (<=, =, >=)  b_i
                lo <= x <= hi

Rows are equilibrated to unit max-abs before solving because scheduling
programs mix bit counts with Gb/s bandwidths.  Pivoting uses Bland's rule
throughout, so the solver cannot cycle and is deterministic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-10
OPT_TOL = 1e-9

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = {LE: LE, "<": LE, "≤": LE, EQ: EQ, "=": EQ, GE: GE, ">": GE, "≥": GE}


class LpError(ValueError):
    pass


class DimensionError(LpError):
    pass


class DegeneratePivotError(LpError):
    """Simplex failed to terminate or lost feasibility numerically."""


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    coeffs: Tuple[float, ...]
    relation: str
    rhs: float


@dataclass
class LinearProgram:
    objective: Sequence[float]
    constraints: List[Constraint] = field(default_factory=list)
    bounds: Optional[List[Tuple[float, float]]] = None

    def __post_init__(self):
        self.objective = tuple(float(v) for v in self.objective)
        if self.bounds is None:
            self.bounds = [(0.0, math.inf)] * len(self.objective)
        else:
            self.bounds = [(float(lo), float(hi)) for lo, hi in self.bounds]
        self.constraints = [self._coerce(c) for c in self.constraints]

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def _coerce(self, row) -> Constraint:
        if not isinstance(row, Constraint):
            row = Constraint(*row)
        rel = _RELATIONS.get(row.relation)
        if rel is None:
            raise LpError(f"unknown relation {row.relation!r}")
        return Constraint(tuple(float(v) for v in row.coeffs), rel, float(row.rhs))

    def add(self, coeffs: Sequence[float], relation: str, rhs: float) -> None:
        self.constraints.append(self._coerce(Constraint(tuple(coeffs), relation, rhs)))

    def validate(self) -> None:
        n = self.n_vars
        if n == 0:
            raise DimensionError("objective has no variables")
        for i, row in enumerate(self.constraints):
            if len(row.coeffs) != n:
                raise DimensionError(f"row {i} has {len(row.coeffs)} coefficients, expected {n}")
        if len(self.bounds) != n:
            raise DimensionError(f"{len(self.bounds)} bounds for {n} variables")
        for j, (lo, hi) in enumerate(self.bounds):
            if not math.isfinite(lo):
                raise LpError(f"variable {j}: lower bound must be finite")
            if lo > hi:
                raise LpError(f"variable {j}: lower bound {lo} exceeds upper bound {hi}")

    def max_violation(self, x: Sequence[float]) -> float:
        """Largest constraint or bound violation, rows measured after equilibration."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        for row in self.constraints:
            a = np.asarray(row.coeffs)
            scale = max(np.max(np.abs(a)), 1e-300) if a.size else 1.0
            r = (a @ x - row.rhs) / scale
            if row.relation == LE:
                worst = max(worst, r)
            elif row.relation == GE:
                worst = max(worst, -r)
            else:
                worst = max(worst, abs(r))
        for xj, (lo, hi) in zip(x, self.bounds):
            worst = max(worst, lo - xj, xj - hi)
        return float(worst)


@dataclass(frozen=True)
class LpSolution:
    status: Status
    x: Optional[np.ndarray]
    objective_value: float
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _Tableau:
    def __init__(self, rows: np.ndarray, rhs: np.ndarray, basis: List[int]):
        self.a = np.hstack([rows, rhs[:, None]])
        self.basis = basis
        self.iterations = 0

    def pivot(self, r: int, j: int) -> None:
        a = self.a
        a[r] /= a[r, j]
        col = a[:, j].copy()
        col[r] = 0.0
        a -= np.outer(col, a[r])
        self.basis[r] = j
        self.iterations += 1

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        cb = cost[self.basis]
        return cost - cb @ self.a[:, :-1]

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_iter: int) -> Status:
        """Bland's rule primal simplex on the current basis."""
        a = self.a
        while True:
            if self.iterations > max_iter:
                raise DegeneratePivotError(f"no convergence after {max_iter} pivots")
            d = self.reduced_costs(cost)
            candidates = np.flatnonzero((d < -OPT_TOL) & allowed)
            if candidates.size == 0:
                return Status.OPTIMAL
            j = int(candidates[0])
            col = a[:, j]
            ok = np.flatnonzero(col > PIVOT_TOL)
            if ok.size == 0:
                return Status.UNBOUNDED
            ratios = a[ok, -1] / col[ok]
            best = ratios.min()
            tied = ok[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(min(tied, key=lambda i: self.basis[i]))
            self.pivot(r, j)


def solve(lp: LinearProgram, max_iter: int = 5000) -> LpSolution:
    lp.validate()
    n = lp.n_vars
    c = np.asarray(lp.objective, dtype=float)
    lo = np.array([b[0] for b in lp.bounds])
    hi = np.array([b[1] for b in lp.bounds])

    rows, rels, rhs = [], [], []
    for con in lp.constraints:
        a = np.asarray(con.coeffs, dtype=float)
        rows.append(a)
        rels.append(con.relation)
        rhs.append(con.rhs - a @ lo)
    for j in np.flatnonzero(np.isfinite(hi)):
        a = np.zeros(n)
        a[j] = 1.0
        rows.append(a)
        rels.append(LE)
        rhs.append(hi[j] - lo[j])

    # equilibrate, drop empty rows, flip to nonnegative rhs
    A, R, B = [], [], []
    for a, rel, b in zip(rows, rels, rhs):
        scale = np.max(np.abs(a)) if a.size else 0.0
        if scale <= PIVOT_TOL:
            bad = (rel == LE and b < -FEAS_TOL) or (rel == GE and b > FEAS_TOL) or (rel == EQ and abs(b) > FEAS_TOL)
            if bad:
                return LpSolution(Status.INFEASIBLE, None, math.nan)
            continue
        a, b = a / scale, b / scale
        if b < 0:
            a, b = -a, -b
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        A.append(a)
        R.append(rel)
        B.append(b)

    m = len(A)
    if m == 0:
        # only bounds: each variable sits at whichever bound the cost prefers
        x = lo.copy()
        for j in range(n):
            if c[j] < 0:
                if not np.isfinite(hi[j]):
                    return LpSolution(Status.UNBOUNDED, None, -math.inf)
                x[j] = hi[j]
        return LpSolution(Status.OPTIMAL, x, float(c @ x))

    n_slack = sum(r != EQ for r in R)
    n_art = sum(r != LE for r in R)
    width = n + n_slack + n_art
    T = np.zeros((m, width))
    basis = []
    s_col, a_col = n, n + n_slack
    for i, (a, rel) in enumerate(zip(A, R)):
        T[i, :n] = a
        if rel == LE:
            T[i, s_col] = 1.0
            basis.append(s_col)
            s_col += 1
        elif rel == GE:
            T[i, s_col] = -1.0
            s_col += 1
            T[i, a_col] = 1.0
            basis.append(a_col)
            a_col += 1
        else:
            T[i, a_col] = 1.0
            basis.append(a_col)
            a_col += 1
    tab = _Tableau(T, np.array(B), basis)
    first_art = n + n_slack

    if n_art:
        cost1 = np.zeros(width)
        cost1[first_art:] = 1.0
        tab.run(cost1, np.ones(width, dtype=bool), max_iter)
        infeas = float(cost1[tab.basis] @ tab.a[:, -1])
        if infeas > FEAS_TOL:
            return LpSolution(Status.INFEASIBLE, None, math.nan, tab.iterations)
        # drive zero-level artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(m):
            if tab.basis[r] < first_art:
                keep.append(r)
                continue
            row = tab.a[r, :first_art]
            nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if nz.size:
                tab.pivot(r, int(nz[0]))
                keep.append(r)
        tab.a = tab.a[keep]
        tab.basis = [tab.basis[r] for r in keep]

    cost2 = np.zeros(width)
    cost2[:n] = c
    allowed = np.ones(width, dtype=bool)
    allowed[first_art:] = False
    status = tab.run(cost2, allowed, max_iter)
    if status is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, None, -math.inf, tab.iterations)

    y = np.zeros(width)
    y[tab.basis] = tab.a[:, -1]
    x = lo + np.maximum(y[:n], 0.0)
    x = np.minimum(x, hi)
    if lp.max_violation(x) > FEAS_TOL:
        raise DegeneratePivotError(
            f"solution violates constraints by {lp.max_violation(x):.3g} after Bland pivoting")
    return LpSolution(Status.OPTIMAL, x, float(c @ x), tab.iterations)
