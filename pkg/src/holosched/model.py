"""Domain types and the per-user latency model.

A teleported user's frame is split into shards that are uploaded to MEC
servers, processed in parallel, and merged on one integration server.
Latency for user ``n`` with class ``k`` and fractions ``x_m``::

    comm  = sum_m  x_m * s_k / b[m, n]
    comp  = max_m  sum_c x_m * A[k, c] * (1 + delta * (t - 1)) / p[k, c, m]
    integ = sum_{m != I}  x_m * s_k / b[m, I]            (t >= 2 only)

where the sums run over active servers (``x_m > SPLIT_EPS``), ``t`` is the
number of active servers and ``I`` is the integrator.  Units are bits,
bits/second, operation-units and operation-units/second; latencies are
seconds.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

SPLIT_EPS = 1e-6
FRACTION_SUM_TOL = 1e-9

OpKey = Tuple[int, int]  # (class id, op id)


class ModelError(ValueError):
    """Base class for invalid scenario or allocation data."""


class DanglingReferenceError(ModelError):
    """An id refers to a server, user, class or op that does not exist."""

    def __init__(self, kind: str, ref, context: str = ""):
        self.kind = kind
        self.ref = ref
        self.context = context
        msg = f"dangling reference: unknown {kind} {ref!r}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class InvariantError(ModelError):
    """A value violates a domain invariant."""


@dataclass(frozen=True)
class DataClass:
    """A class of holographic payload (e.g. one point-cloud frame)."""

    id: int
    size_bits: float
    base_workload: Mapping[int, float]  # op id -> operation-units when unsplit
    name: str = ""

    def __post_init__(self):
        if not self.size_bits > 0:
            raise InvariantError(f"class {self.id}: size_bits must be > 0, got {self.size_bits}")
        for c, a in self.base_workload.items():
            if not a > 0:
                raise InvariantError(f"class {self.id}: workload for op {c} must be > 0, got {a}")


@dataclass(frozen=True)
class ComputeOp:
    id: int
    name: str


@dataclass(frozen=True)
class MecServer:
    id: int
    capacity: Mapping[OpKey, float]  # (k, c) -> operation-units per second
    queue_len: int = 0

    def __post_init__(self):
        for key, p in self.capacity.items():
            if not p > 0:
                raise InvariantError(f"server {self.id}: capacity {key} must be > 0, got {p}")
        if self.queue_len < 0:
            raise InvariantError(f"server {self.id}: queue_len must be >= 0")


@dataclass(frozen=True)
class TeleportedUser:
    id: int
    class_id: int
    ops: Tuple[int, ...]
    uplink_bw: Mapping[int, float]  # server id -> bits/second

    def __post_init__(self):
        for m, b in self.uplink_bw.items():
            if not b > 0:
                raise InvariantError(f"user {self.id}: uplink bandwidth to server {m} must be > 0")


@dataclass(frozen=True)
class InterServerLinks:
    """Symmetric server-to-server bandwidths in bits/second."""

    bw: Mapping[Tuple[int, int], float]

    def __post_init__(self):
        for (a, b), v in self.bw.items():
            if a == b:
                raise InvariantError(f"inter-server link ({a}, {b}) joins a server to itself")
            if not v > 0:
                raise InvariantError(f"inter-server link ({a}, {b}) must have bandwidth > 0")
            back = self.bw.get((b, a))
            if back is not None and back != v:
                raise InvariantError(f"inter-server link ({a}, {b}) is not symmetric: {v} vs {back}")

    def get(self, m1: int, m2: int) -> float:
        if (m1, m2) in self.bw:
            return self.bw[(m1, m2)]
        if (m2, m1) in self.bw:
            return self.bw[(m2, m1)]
        raise DanglingReferenceError("link", (m1, m2))


@dataclass(frozen=True)
class Scenario:
    """A complete problem instance."""

    servers: Sequence[MecServer]
    users: Sequence[TeleportedUser]
    links: InterServerLinks
    classes: Sequence[DataClass]
    ops: Sequence[ComputeOp]
    split_overhead: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "servers", tuple(self.servers))
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "ops", tuple(self.ops))
        if not self.servers:
            raise InvariantError("scenario needs at least one server")
        if not self.users:
            raise InvariantError("scenario needs at least one user")
        if not self.split_overhead >= 0:
            raise InvariantError("split_overhead must be >= 0")
        for kind, items in (("server", self.servers), ("user", self.users),
                            ("class", self.classes), ("op", self.ops)):
            ids = [it.id for it in items]
            if len(set(ids)) != len(ids):
                raise InvariantError(f"duplicate {kind} ids: {ids}")
        self._check_references()

    def _check_references(self):
        server_ids = {m.id for m in self.servers}
        op_ids = {c.id for c in self.ops}
        classes = {k.id: k for k in self.classes}
        for k in self.classes:
            for c in k.base_workload:
                if c not in op_ids:
                    raise DanglingReferenceError("op", c, f"class {k.id} workload")
        for u in self.users:
            if u.class_id not in classes:
                raise DanglingReferenceError("class", u.class_id, f"user {u.id}")
            missing = server_ids - set(u.uplink_bw)
            if missing:
                raise DanglingReferenceError("server", min(missing), f"user {u.id} has no uplink")
            for m in u.uplink_bw:
                if m not in server_ids:
                    raise DanglingReferenceError("server", m, f"user {u.id} uplink")
            for c in u.ops:
                if c not in op_ids:
                    raise DanglingReferenceError("op", c, f"user {u.id}")
                if c not in classes[u.class_id].base_workload:
                    raise DanglingReferenceError("op", c, f"class {u.class_id} has no workload for it")
                for m in self.servers:
                    if (u.class_id, c) not in m.capacity:
                        raise DanglingReferenceError(
                            "capacity", (u.class_id, c, m.id), f"needed by user {u.id}")
        for a, b in self.links.bw:
            for m in (a, b):
                if m not in server_ids:
                    raise DanglingReferenceError("server", m, "inter-server link")
        ordered = sorted(server_ids)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1:]:
                self.links.get(a, b)

    def server(self, m: int) -> MecServer:
        for s in self.servers:
            if s.id == m:
                return s
        raise DanglingReferenceError("server", m)

    def user(self, n: int) -> TeleportedUser:
        for u in self.users:
            if u.id == n:
                return u
        raise DanglingReferenceError("user", n)

    def data_class(self, k: int) -> DataClass:
        for dc in self.classes:
            if dc.id == k:
                return dc
        raise DanglingReferenceError("class", k)

    @property
    def server_ids(self) -> List[int]:
        return [s.id for s in self.servers]

    def service_time(self, user: TeleportedUser, m: int, n_splits: int = 1) -> float:
        """Seconds for server ``m`` to process the user's whole task."""
        dc = self.data_class(user.class_id)
        server = self.server(m)
        inflation = 1.0 + self.split_overhead * (n_splits - 1)
        total = 0.0
        for c in user.ops:
            p = server.capacity.get((dc.id, c))
            if p is None:
                raise DanglingReferenceError("capacity", (dc.id, c, m))
            total += dc.base_workload[c] * inflation / p
        return total

    def digest(self) -> str:
        """Stable content hash; equal scenarios hash equal."""
        return hashlib.sha256(json.dumps(_plain(self), sort_keys=True).encode()).hexdigest()


def _plain(obj):
    if isinstance(obj, Scenario):
        return {
            "servers": [_plain(s) for s in obj.servers],
            "users": [_plain(u) for u in obj.users],
            "links": sorted([list(k), v] for k, v in obj.links.bw.items()),
            "classes": [_plain(k) for k in obj.classes],
            "ops": [[c.id, c.name] for c in obj.ops],
            "split_overhead": obj.split_overhead,
            "rng_seed": obj.rng_seed,
        }
    if isinstance(obj, MecServer):
        return [obj.id, obj.queue_len, sorted([list(k), v] for k, v in obj.capacity.items())]
    if isinstance(obj, TeleportedUser):
        return [obj.id, obj.class_id, list(obj.ops), sorted(obj.uplink_bw.items())]
    if isinstance(obj, DataClass):
        return [obj.id, obj.size_bits, sorted(obj.base_workload.items())]
    raise TypeError(type(obj))


@dataclass(frozen=True)
class Allocation:
    """How one user's task is divided across servers.

    Fractions below ``SPLIT_EPS`` are dropped and the rest renormalized.
    ``wait_s`` is queueing delay added to computation (JSQ baseline only).
    When ``local_capacity`` is set, the task is computed on the user's own
    machine at that capacity and only the finished result is uploaded to
    ``integrator``.
    """

    user: int
    fractions: Mapping[int, float]
    integrator: int
    wait_s: float = 0.0
    local_capacity: Optional[Mapping[OpKey, float]] = None

    def __post_init__(self):
        fr = dict(self.fractions)
        for m, x in fr.items():
            if not (-FRACTION_SUM_TOL <= x <= 1 + FRACTION_SUM_TOL) or math.isnan(x):
                raise InvariantError(f"user {self.user}: fraction for server {m} is {x}, outside [0, 1]")
        total = sum(fr.values())
        if abs(total - 1.0) > FRACTION_SUM_TOL:
            raise InvariantError(f"user {self.user}: fractions sum to {total!r}, expected 1")
        kept = {m: x for m, x in fr.items() if x > SPLIT_EPS}
        norm = sum(kept.values())
        cleaned = {m: (kept[m] / norm if m in kept else 0.0) for m in sorted(fr)}
        if self.integrator not in cleaned:
            cleaned[self.integrator] = 0.0
        object.__setattr__(self, "fractions", cleaned)
        if self.wait_s < 0:
            raise InvariantError(f"user {self.user}: wait_s must be >= 0")

    @property
    def active(self) -> List[int]:
        return [m for m, x in self.fractions.items() if x > SPLIT_EPS]

    @property
    def n_splits(self) -> int:
        return len(self.active)


@dataclass(frozen=True)
class Schedule:
    allocations: Tuple[Allocation, ...]

    def __post_init__(self):
        object.__setattr__(self, "allocations", tuple(self.allocations))
        seen = [a.user for a in self.allocations]
        if len(set(seen)) != len(seen):
            raise InvariantError(f"schedule has more than one allocation for a user: {seen}")

    def for_user(self, n: int) -> Allocation:
        for a in self.allocations:
            if a.user == n:
                return a
        raise DanglingReferenceError("user", n, "no allocation in schedule")


@dataclass(frozen=True)
class UserLatency:
    comm_s: float
    comp_s: float
    integ_s: float
    splits: int

    @property
    def total_s(self) -> float:
        return self.comm_s + self.comp_s + self.integ_s


@dataclass(frozen=True)
class LatencyReport:
    per_user: Dict[int, UserLatency]
    max_latency_s: float
    split_counts: Dict[int, int] = field(default_factory=dict)

    def totals(self) -> List[float]:
        return [self.per_user[n].total_s for n in sorted(self.per_user)]


def integration_time(scenario: Scenario, user: TeleportedUser,
                     fractions: Mapping[int, float], integrator: int) -> float:
    active = [m for m, x in fractions.items() if x > SPLIT_EPS]
    if len(active) < 2:
        return 0.0
    s = scenario.data_class(user.class_id).size_bits
    return sum(fractions[m] * s / scenario.links.get(m, integrator)
               for m in active if m != integrator)


def best_integrator(scenario: Scenario, user: TeleportedUser,
                    fractions: Mapping[int, float]) -> int:
    """Active server with the cheapest shard merge; ties go to the lowest id."""
    active = sorted(m for m, x in fractions.items() if x > SPLIT_EPS)
    return min(active, key=lambda m: (integration_time(scenario, user, fractions, m), m))


def user_latency(scenario: Scenario, alloc: Allocation) -> UserLatency:
    user = scenario.user(alloc.user)
    dc = scenario.data_class(user.class_id)
    server_ids = set(scenario.server_ids)
    for m in alloc.fractions:
        if m not in server_ids:
            raise DanglingReferenceError("server", m, f"allocation for user {user.id}")
    if alloc.integrator not in server_ids:
        raise DanglingReferenceError("server", alloc.integrator, "integrator")

    if alloc.local_capacity is not None:
        comp = alloc.wait_s
        for c in user.ops:
            p = alloc.local_capacity.get((dc.id, c))
            if p is None:
                raise DanglingReferenceError("local capacity", (dc.id, c))
            comp += dc.base_workload[c] / p
        comm = dc.size_bits / user.uplink_bw[alloc.integrator]
        return UserLatency(comm_s=comm, comp_s=comp, integ_s=0.0, splits=1)

    active = alloc.active
    t = len(active)
    comm = sum(alloc.fractions[m] * dc.size_bits / user.uplink_bw[m] for m in active)
    comp = max(alloc.fractions[m] * scenario.service_time(user, m, t) for m in active)
    integ = integration_time(scenario, user, alloc.fractions, alloc.integrator)
    return UserLatency(comm_s=comm, comp_s=comp + alloc.wait_s, integ_s=integ, splits=t)


def report(scenario: Scenario, schedule: Schedule) -> LatencyReport:
    per_user = {}
    for u in scenario.users:
        per_user[u.id] = user_latency(scenario, schedule.for_user(u.id))
    extra = {a.user for a in schedule.allocations} - set(per_user)
    if extra:
        raise DanglingReferenceError("user", min(extra), "allocation for unknown user")
    return LatencyReport(
        per_user=per_user,
        max_latency_s=max(r.total_s for r in per_user.values()),
        split_counts={n: r.splits for n, r in per_user.items()},
    )
