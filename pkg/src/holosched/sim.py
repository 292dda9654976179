"""Seeded scenario generation and paired batch evaluation of policies."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .metrics import DEFAULT_CURVE, DEFAULT_L_REF_S, LikabilityCurve, PolicyResult, aggregate
from .model import (
    ComputeOp,
    DataClass,
    InterServerLinks,
    InvariantError,
    LatencyReport,
    MecServer,
    ModelError,
    Scenario,
    TeleportedUser,
    report,
)
from .scheduler import Policy, run_policy

log = logging.getLogger(__name__)

Range = Tuple[float, float]


@dataclass(frozen=True)
class ScenarioTemplate:
    """Ranges from which per-run scenarios are drawn uniformly.

    ``capacity_range`` is keyed by (class, op, server); ``queue_range`` by
    server and holds inclusive integer bounds.
    """

    n_servers: int
    n_users: int
    bw_uplink_range: Range
    bw_interserver_range: Range
    capacity_range: Mapping[Tuple[int, int, int], Range]
    classes: Sequence[DataClass]
    ops: Sequence[ComputeOp]
    user_classes: Optional[Sequence[int]] = None
    queue_range: Mapping[int, Tuple[int, int]] = field(default_factory=dict)
    split_overhead: float = 0.05
    n_runs: int = 100
    rng_seed: int = 42

    def violations(self) -> List[str]:
        out = []
        if self.n_servers < 1:
            out.append(f"servers: need at least 1 server, got {self.n_servers}")
        if self.n_users < 1:
            out.append(f"users: need at least 1 user, got {self.n_users}")
        if self.n_runs < 1:
            out.append(f"runs: need at least 1 run, got {self.n_runs}")
        if not self.split_overhead >= 0:
            out.append(f"split_overhead: must be >= 0, got {self.split_overhead}")
        for name, rng in (("bandwidth.uplink_bps", self.bw_uplink_range),
                          ("bandwidth.interserver_bps", self.bw_interserver_range)):
            out += _range_problems(name, rng)
        op_ids = {c.id for c in self.ops}
        class_ids = {k.id for k in self.classes}
        for k in self.classes:
            if not k.size_bits > 0:
                out.append(f"classes[{k.id}].size_bits: must be > 0, got {k.size_bits}")
            for c, a in k.base_workload.items():
                if c not in op_ids:
                    out.append(f"classes[{k.id}].workload: unknown op {c}")
                elif not a > 0:
                    out.append(f"classes[{k.id}].workload.{_op_name(self, c)}: must be > 0, got {a}")
        for i, k in enumerate(self.user_class_ids()):
            if k not in class_ids:
                out.append(f"user_classes[{i}]: unknown class {k}")
        for (k, c, m), rng in sorted(self.capacity_range.items()):
            out += _range_problems(f"servers[{m}].capacity[class={k}, op={_op_name(self, c)}]", rng)
            if m >= self.n_servers or m < 0:
                out.append(f"servers[{m}]: capacity given for undeclared server")
        for k in self.classes:
            for c in k.base_workload:
                for m in range(self.n_servers):
                    if (k.id, c, m) not in self.capacity_range:
                        out.append(f"servers[{m}].capacity: missing entry for "
                                   f"(class={k.id}, op={_op_name(self, c)}, server={m})")
        for m, (lo, hi) in sorted(self.queue_range.items()):
            if lo < 0 or hi < lo:
                out.append(f"servers[{m}].queue_len: need 0 <= lo <= hi, got [{lo}, {hi}]")
        return out

    def user_class_ids(self) -> List[int]:
        if self.user_classes is not None:
            return list(self.user_classes)
        first = min(k.id for k in self.classes) if self.classes else 0
        return [first] * self.n_users


def _op_name(template: ScenarioTemplate, c: int) -> str:
    for op in template.ops:
        if op.id == c:
            return op.name
    return str(c)


def _range_problems(name: str, rng: Range) -> List[str]:
    lo, hi = rng
    out = []
    if not lo > 0:
        out.append(f"{name}: lower bound must be > 0, got {lo}")
    if hi < lo:
        out.append(f"{name}: lower bound {lo} exceeds upper bound {hi}")
    return out


def sample(template: ScenarioTemplate, run_index: int) -> Scenario:
    """Draw run ``run_index``; a pure function of (rng_seed, run_index)."""
    problems = template.violations()
    if problems:
        raise InvariantError("invalid template: " + "; ".join(problems))
    rng = np.random.default_rng([template.rng_seed, run_index])
    servers_ids = list(range(template.n_servers))

    def draw(r: Range) -> float:
        return float(rng.uniform(r[0], r[1])) if r[1] > r[0] else float(r[0])

    users = []
    for n, k in enumerate(template.user_class_ids()):
        bw = {m: draw(template.bw_uplink_range) for m in servers_ids}
        dc = next(c for c in template.classes if c.id == k)
        users.append(TeleportedUser(n, k, tuple(sorted(dc.base_workload)), bw))
    links = {}
    for i, a in enumerate(servers_ids):
        for b in servers_ids[i + 1:]:
            links[(a, b)] = draw(template.bw_interserver_range)
    capacity: Dict[int, Dict[Tuple[int, int], float]] = {m: {} for m in servers_ids}
    for (k, c, m) in sorted(template.capacity_range):
        capacity[m][(k, c)] = draw(template.capacity_range[(k, c, m)])
    servers = []
    for m in servers_ids:
        lo, hi = template.queue_range.get(m, (0, 0))
        q = int(rng.integers(lo, hi + 1)) if hi > lo else int(lo)
        servers.append(MecServer(m, capacity[m], q))
    return Scenario(
        servers=servers,
        users=users,
        links=InterServerLinks(links),
        classes=template.classes,
        ops=template.ops,
        split_overhead=template.split_overhead,
        rng_seed=template.rng_seed,
    )


@dataclass
class BatchResult:
    policies: List[str]
    reports: Dict[str, List[LatencyReport]]
    results: Dict[str, PolicyResult]
    scenario_digests: List[str]


class BatchError(RuntimeError):
    def __init__(self, run_index: int, policy: str, cause: Exception):
        self.run_index = run_index
        self.policy = policy
        super().__init__(f"run {run_index}, policy {policy}: {cause}")


def _evaluate_run(args):
    template, policies, run_index = args
    scenario = sample(template, run_index)
    out = {}
    for policy in policies:
        try:
            out[policy.name] = report(scenario, run_policy(policy, scenario))
        except (ModelError, RuntimeError, ValueError) as exc:
            raise BatchError(run_index, policy.name, exc) from exc
    return scenario.digest(), out


def run_batch(template: ScenarioTemplate, policies: Sequence[Policy],
              curve: LikabilityCurve = DEFAULT_CURVE, l_ref_s: float = DEFAULT_L_REF_S,
              max_workers: Optional[int] = None) -> BatchResult:
    """Evaluate every policy on the same scenario draw for each run."""
    if not policies:
        raise ValueError("run_batch needs at least one policy")
    names = [p.name for p in policies]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate policies: {names}")
    jobs = [(template, list(policies), i) for i in range(template.n_runs)]
    if max_workers and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            runs = list(pool.map(_evaluate_run, jobs))
    else:
        runs = [_evaluate_run(job) for job in jobs]
    reports = {name: [r[1][name] for r in runs] for name in names}
    results = {name: aggregate(reports[name], curve, l_ref_s, policy=name) for name in names}
    return BatchResult(names, reports, results, [r[0] for r in runs])


def with_overrides(template: ScenarioTemplate, **changes) -> ScenarioTemplate:
    return replace(template, **changes)
