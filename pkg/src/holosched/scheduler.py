"""Scheduling policies mapping a Scenario to a Schedule.

The proposed policy runs two linear programs.  Stage 1 minimizes the
largest per-user latency with every server active (worst-case split
overhead).  Stage 2 searches split patterns in order of increasing total
split count and keeps, for every user, the smallest pattern that stays
within the Stage-1 latency cap.

A user's latency depends only on that user's own fractions, so the joint
programs decompose into per-user blocks that share nothing but the cap.
Blocks are solved individually; the joint Stage-1 program is assembled
once so that its optimum can be reported as LP1's value.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import lp as lpmod
from .model import (
    Allocation,
    ModelError,
    OpKey,
    Scenario,
    Schedule,
    TeleportedUser,
    best_integrator,
    report,
)

log = logging.getLogger(__name__)

SLACK = 1e-6
# fractions inside a pattern stay above SPLIT_EPS so the split count is exact
PATTERN_FLOOR = 1e-5
MAX_ENUM_SERVERS = 8


class SchedulerError(RuntimeError):
    pass


class PolicyKind(enum.Enum):
    PROPOSED = "proposed"
    LOCAL = "local"
    JSQ = "jsq"
    SPLIT = "split"


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", PolicyKind(self.kind))
        needs = self.kind is PolicyKind.LOCAL
        has = "local_capacity" in self.params
        if needs and not has:
            raise ValueError("local computation policy needs params['local_capacity']")
        if has and not needs:
            raise ValueError(f"{self.kind.value} policy takes no local_capacity")

    @property
    def name(self) -> str:
        return self.kind.value


POLICY_LABELS = {
    PolicyKind.PROPOSED: "Proposed",
    PolicyKind.LOCAL: "Local Computation",
    PolicyKind.JSQ: "Join Shortest Queue",
    PolicyKind.SPLIT: "Always Split Evenly",
}


# --- per-user LP blocks --------------------------------------------------------

@dataclass(frozen=True)
class _UserTerms:
    servers: Tuple[int, ...]
    comm: np.ndarray   # seconds per unit fraction, uplink
    work: np.ndarray   # seconds per unit fraction, unsplit computation
    size_bits: float


def _terms(scenario: Scenario, user: TeleportedUser) -> _UserTerms:
    servers = tuple(scenario.server_ids)
    s = scenario.data_class(user.class_id).size_bits
    comm = np.array([s / user.uplink_bw[m] for m in servers])
    work = np.array([scenario.service_time(user, m, 1) for m in servers])
    return _UserTerms(servers, comm, work, s)


@dataclass(frozen=True)
class BlockResult:
    support: Tuple[int, ...]
    integrator: int
    latency_s: float
    fractions: Dict[int, float]


def _block_program(scenario: Scenario, terms: _UserTerms, support: Sequence[int],
                   integrator: int, n_splits: int) -> lpmod.LinearProgram:
    """Variables: x_m for m in support, then z (computation), then l (latency)."""
    k = len(support)
    idx = [terms.servers.index(m) for m in support]
    inflation = 1.0 + scenario.split_overhead * (n_splits - 1)
    lp = lpmod.LinearProgram(objective=[0.0] * k + [0.0, 1.0])
    lp.add([1.0] * k + [0.0, 0.0], lpmod.EQ, 1.0)
    for j, i in enumerate(idx):
        row = [0.0] * (k + 2)
        row[j] = terms.work[i] * inflation
        row[k] = -1.0
        lp.add(row, lpmod.LE, 0.0)
    lat = [0.0] * (k + 2)
    for j, (m, i) in enumerate(zip(support, idx)):
        lat[j] = terms.comm[i]
        if k > 1 and m != integrator:
            lat[j] += terms.size_bits / scenario.links.get(m, integrator)
    lat[k] = 1.0
    lat[k + 1] = -1.0
    lp.add(lat, lpmod.LE, 0.0)
    floor = 1.0 if k == 1 else PATTERN_FLOOR
    lp.bounds = [(floor, 1.0)] * k + [(0.0, float("inf"))] * 2
    return lp


def solve_block(scenario: Scenario, user: TeleportedUser, support: Sequence[int],
                integrator: int, n_splits: Optional[int] = None,
                terms: Optional[_UserTerms] = None) -> BlockResult:
    """Minimum latency for one user with fractions restricted to ``support``."""
    terms = terms or _terms(scenario, user)
    n_splits = len(support) if n_splits is None else n_splits
    sol = lpmod.solve(_block_program(scenario, terms, support, integrator, n_splits))
    if not sol.optimal:
        raise SchedulerError(f"user {user.id}: block LP on {tuple(support)} is {sol.status.value}")
    x = sol.x[: len(support)]
    x = x / x.sum()
    return BlockResult(tuple(support), integrator, float(sol.x[-1]),
                       {m: float(v) for m, v in zip(support, x)})


# --- Stage 1 -------------------------------------------------------------------

@dataclass(frozen=True)
class Stage1Result:
    l_max: float
    blocks: Dict[int, BlockResult]  # user -> best full-support block
    joint: lpmod.LpSolution


def build_lp1(scenario: Scenario, integrators: Mapping[int, int]) -> lpmod.LinearProgram:
    """Joint min-max program over all users with every server active.

    Variable layout: for each user (in scenario order) the fractions x_{n,m}
    and a computation variable z_n, then one shared l_max at the end.
    """
    servers = scenario.server_ids
    M, N = len(servers), len(scenario.users)
    width = N * (M + 1) + 1
    inflation = 1.0 + scenario.split_overhead * (M - 1)
    obj = [0.0] * width
    obj[-1] = 1.0
    prog = lpmod.LinearProgram(objective=obj)
    bounds = []
    for b, user in enumerate(scenario.users):
        terms = _terms(scenario, user)
        base = b * (M + 1)
        row = [0.0] * width
        for j in range(M):
            row[base + j] = 1.0
        prog.add(row, lpmod.EQ, 1.0)
        for j in range(M):
            row = [0.0] * width
            row[base + j] = terms.work[j] * inflation
            row[base + M] = -1.0
            prog.add(row, lpmod.LE, 0.0)
        row = [0.0] * width
        for j, m in enumerate(servers):
            row[base + j] = terms.comm[j]
            if M > 1 and m != integrators[user.id]:
                row[base + j] += terms.size_bits / scenario.links.get(m, integrators[user.id])
        row[base + M] = 1.0
        row[-1] = -1.0
        prog.add(row, lpmod.LE, 0.0)
        floor = 1.0 if M == 1 else PATTERN_FLOOR
        bounds += [(floor, 1.0)] * M + [(0.0, float("inf"))]
    bounds.append((0.0, float("inf")))
    prog.bounds = bounds
    return prog


def solve_lp1(scenario: Scenario) -> Stage1Result:
    servers = scenario.server_ids
    blocks = {}
    for user in scenario.users:
        terms = _terms(scenario, user)
        options = [solve_block(scenario, user, servers, i, terms=terms) for i in servers]
        blocks[user.id] = min(options, key=lambda b: (b.latency_s, b.integrator))
    prog = build_lp1(scenario, {n: b.integrator for n, b in blocks.items()})
    joint = lpmod.solve(prog)
    if not joint.optimal:
        raise SchedulerError(f"stage 1 LP is {joint.status.value}; scenario data is inconsistent")
    return Stage1Result(joint.objective_value, blocks, joint)


# --- Stage 2 -------------------------------------------------------------------

def split_patterns(servers: Sequence[int]) -> List[Tuple[int, ...]]:
    """Nonempty server subsets ordered by size, then lexicographically."""
    out = []
    for size in range(1, len(servers) + 1):
        out.extend(itertools.combinations(sorted(servers), size))
    return out


def _best_in_pattern(scenario, user, pattern, terms) -> BlockResult:
    options = [solve_block(scenario, user, pattern, i, terms=terms) for i in pattern]
    return min(options, key=lambda b: (b.latency_s, b.integrator))


def _stage2_user(scenario: Scenario, user: TeleportedUser, cap: float,
                 fallback: BlockResult) -> BlockResult:
    terms = _terms(scenario, user)
    servers = scenario.server_ids
    if len(servers) > MAX_ENUM_SERVERS:
        return _greedy_reduce(scenario, user, cap, fallback, terms)
    found: Optional[BlockResult] = None
    for pattern in split_patterns(servers):
        if found is not None and len(pattern) > len(found.support):
            break
        cand = _best_in_pattern(scenario, user, pattern, terms)
        if cand.latency_s <= cap and (found is None or cand.latency_s < found.latency_s):
            found = cand
    if found is None:
        log.warning("user %d: no split pattern meets the stage-1 cap %.6g s; "
                    "keeping the stage-1 allocation", user.id, cap)
        return fallback
    return found


def _greedy_reduce(scenario, user, cap, start: BlockResult, terms) -> BlockResult:
    log.warning("user %d: %d servers is too many to enumerate split patterns; "
                "reducing the stage-1 support greedily", user.id, len(terms.servers))
    current = start
    while len(current.support) > 1:
        order = sorted(current.support, key=lambda m: (current.fractions[m], m))
        for drop in order:
            pattern = tuple(m for m in current.support if m != drop)
            cand = _best_in_pattern(scenario, user, pattern, terms)
            if cand.latency_s <= cap:
                current = cand
                break
        else:
            break
    return current


@dataclass(frozen=True)
class ProposedResult:
    schedule: Schedule
    l_max: float          # achieved max latency of the schedule
    stage1_l_max: float   # LP1 optimum
    blocks: Dict[int, BlockResult]


def schedule_proposed_detail(scenario: Scenario) -> ProposedResult:
    stage1 = solve_lp1(scenario)
    cap = stage1.l_max * (1.0 + SLACK)
    chosen = {u.id: _stage2_user(scenario, u, cap, stage1.blocks[u.id]) for u in scenario.users}
    allocs = []
    for user in scenario.users:
        block = chosen[user.id]
        fractions = {m: block.fractions.get(m, 0.0) for m in scenario.server_ids}
        integrator = best_integrator(scenario, user, fractions)
        allocs.append(Allocation(user.id, fractions, integrator))
    schedule = Schedule(tuple(allocs))
    achieved = report(scenario, schedule).max_latency_s
    return ProposedResult(schedule, achieved, stage1.l_max, chosen)


def schedule_proposed(scenario: Scenario) -> Tuple[Schedule, float]:
    res = schedule_proposed_detail(scenario)
    return res.schedule, res.l_max


# --- baselines -----------------------------------------------------------------

def schedule_local(scenario: Scenario, local_capacity: Mapping[OpKey, float]) -> Schedule:
    """Compute everything on the user's machine; upload only the result."""
    for key, p in local_capacity.items():
        if not p > 0:
            raise ModelError(f"local capacity {key} must be > 0, got {p}")
    allocs = []
    for user in scenario.users:
        target = max(scenario.server_ids, key=lambda m: (user.uplink_bw[m], -m))
        allocs.append(Allocation(user.id, {target: 1.0}, target,
                                 local_capacity=dict(local_capacity)))
    return Schedule(tuple(allocs))


def schedule_jsq(scenario: Scenario) -> Schedule:
    """Whole tasks to the shortest queue, users in id order.

    A job waits ``queue_len`` times the unsplit service time of its own
    class on the chosen server.
    """
    queues = {s.id: s.queue_len for s in scenario.servers}
    allocs = []
    for user in sorted(scenario.users, key=lambda u: u.id):
        m = min(queues, key=lambda s: (queues[s], s))
        wait = queues[m] * scenario.service_time(user, m, 1)
        queues[m] += 1
        allocs.append(Allocation(user.id, {m: 1.0}, m, wait_s=wait))
    return Schedule(tuple(allocs))


def schedule_split_evenly(scenario: Scenario) -> Schedule:
    servers = scenario.server_ids
    share = 1.0 / len(servers)
    allocs = []
    for user in scenario.users:
        fractions = {m: share for m in servers}
        allocs.append(Allocation(user.id, fractions, best_integrator(scenario, user, fractions)))
    return Schedule(tuple(allocs))


def run_policy(policy: Policy, scenario: Scenario) -> Schedule:
    if policy.kind is PolicyKind.PROPOSED:
        return schedule_proposed(scenario)[0]
    if policy.kind is PolicyKind.LOCAL:
        return schedule_local(scenario, policy.params["local_capacity"])
    if policy.kind is PolicyKind.JSQ:
        return schedule_jsq(scenario)
    return schedule_split_evenly(scenario)
