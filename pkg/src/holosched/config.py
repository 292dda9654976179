"""Experiment files: a YAML template (JSON also accepted).

Ops and classes are referred to by name; ids are list positions.  Layout::

    seed: 42
    runs: 100
    users: 2
    split_overhead: 0.05
    bandwidth:
      uplink_bps: [1.0e+9, 4.0e+9]
      interserver_bps: [5.0e+9, 1.0e+10]
    ops: [decode, reconstruct, render]
    classes:
      - name: frame
        size_bits: 96.67e+6
        workload: {decode: 1.0, reconstruct: 2.0, render: 1.5}
    servers:
      - queue_len: [0, 1]
        capacity:
          frame: {decode: [8, 12], reconstruct: [4, 6], render: [5, 7]}
    local:
      capacity:
        frame: {decode: 5, reconstruct: 2.5, render: 3}
    metrics:
      l_ref_s: 0.5
      knots: [[0, 0], [0.35, 0.45], [0.6, 0.2], [0.75, -0.3], [0.87, 0.1], [1, 1]]

``user_classes`` (list of class names, one per user) is optional; by
default every user sends the first class.  ``local`` and ``metrics`` are
optional too.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .metrics import DEFAULT_KNOTS, DEFAULT_L_REF_S, LikabilityCurve, curve_problems
from .model import ComputeOp, DataClass, OpKey
from .sim import ScenarioTemplate


class ConfigError(ValueError):
    """The file cannot be read as an experiment template."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


@dataclass
class ExperimentConfig:
    template: ScenarioTemplate
    local_capacity: Dict[OpKey, float]
    knots: Tuple[Tuple[float, float], ...] = DEFAULT_KNOTS
    l_ref_s: float = DEFAULT_L_REF_S
    problems: List[str] = field(default_factory=list)

    def violations(self) -> List[str]:
        out = list(self.problems) + self.template.violations()
        out += [f"metrics.knots: {p}" for p in curve_problems(self.knots)]
        if not self.l_ref_s > 0:
            out.append(f"metrics.l_ref_s: must be > 0, got {self.l_ref_s}")
        return out

    @property
    def curve(self) -> LikabilityCurve:
        return LikabilityCurve(self.knots)


def default_template_path() -> Path:
    return Path(str(resources.files("holosched") / "data" / "default.scenario"))


def _num(value: Any, path: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a number, got {value!r}") from None


def _int(value: Any, path: str) -> int:
    v = _num(value, path)
    if v != int(v):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return int(v)


def _pair(value: Any, path: str, conv=_num) -> tuple:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return conv(value, path), conv(value, path)
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{path}: expected [low, high], got {value!r}")
    return conv(value[0], f"{path}[0]"), conv(value[1], f"{path}[1]")


def _mapping(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(value).__name__}")
    return value


def _require(doc: dict, key: str, path: str = ""):
    if key not in doc:
        raise ConfigError(f"{path + '.' if path else ''}{key}: missing required field")
    return doc[key]


def parse_text(text: str, source: str = "<string>") -> ExperimentConfig:
    stripped = text.lstrip()
    try:
        if stripped.startswith("{"):
            doc = json.loads(text)
        else:
            doc = yaml.safe_load(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{where}: {problem}") from None
    return from_dict(_mapping(doc, "<document>"))


def load(path) -> ExperimentConfig:
    path = Path(path)
    return parse_text(path.read_text(encoding="utf-8"), str(path))


def from_dict(doc: Dict[str, Any]) -> ExperimentConfig:
    problems: List[str] = []

    op_names = _require(doc, "ops")
    if not isinstance(op_names, list) or not op_names:
        raise ConfigError("ops: expected a nonempty list of operation names")
    ops = [ComputeOp(i, str(name)) for i, name in enumerate(op_names)]
    op_id = {op.name: op.id for op in ops}
    if len(op_id) != len(ops):
        raise ConfigError("ops: operation names must be unique")

    classes = []
    class_id = {}
    raw_classes = _require(doc, "classes")
    if not isinstance(raw_classes, list) or not raw_classes:
        raise ConfigError("classes: expected a nonempty list")
    for i, raw in enumerate(raw_classes):
        path = f"classes[{i}]"
        raw = _mapping(raw, path)
        name = str(raw.get("name", i))
        size = _num(_require(raw, "size_bits", path), f"{path}.size_bits")
        if not size > 0:
            problems.append(f"{path}.size_bits: must be > 0, got {size}")
            size = 1.0
        workload = {}
        for op, amount in _mapping(_require(raw, "workload", path), f"{path}.workload").items():
            wpath = f"{path}.workload.{op}"
            if op not in op_id:
                raise ConfigError(f"{wpath}: unknown op {op!r}")
            amount = _num(amount, wpath)
            if not amount > 0:
                problems.append(f"{wpath}: must be > 0, got {amount}")
                amount = 1.0
            workload[op_id[op]] = amount
        class_id[name] = i
        classes.append(DataClass(i, size, workload, name))

    n_users = _int(_require(doc, "users"), "users")
    user_classes = None
    if "user_classes" in doc:
        names = doc["user_classes"]
        if not isinstance(names, list) or len(names) != n_users:
            raise ConfigError(f"user_classes: expected a list of {n_users} class names")
        user_classes = []
        for i, name in enumerate(names):
            if str(name) not in class_id:
                raise ConfigError(f"user_classes[{i}]: unknown class {name!r}")
            user_classes.append(class_id[str(name)])

    bw = _mapping(_require(doc, "bandwidth"), "bandwidth")
    uplink = _pair(_require(bw, "uplink_bps", "bandwidth"), "bandwidth.uplink_bps")
    inter = _pair(_require(bw, "interserver_bps", "bandwidth"), "bandwidth.interserver_bps")

    raw_servers = _require(doc, "servers")
    if not isinstance(raw_servers, list):
        raise ConfigError("servers: expected a list")
    capacity = {}
    queues = {}
    for m, raw in enumerate(raw_servers):
        path = f"servers[{m}]"
        raw = _mapping(raw, path)
        if "queue_len" in raw:
            queues[m] = _pair(raw["queue_len"], f"{path}.queue_len", _int)
        for cname, per_op in _mapping(raw.get("capacity", {}), f"{path}.capacity").items():
            if str(cname) not in class_id:
                raise ConfigError(f"{path}.capacity.{cname}: unknown class")
            for op, rng in _mapping(per_op, f"{path}.capacity.{cname}").items():
                cpath = f"{path}.capacity.{cname}.{op}"
                if op not in op_id:
                    raise ConfigError(f"{cpath}: unknown op {op!r}")
                capacity[(class_id[str(cname)], op_id[op], m)] = _pair(rng, cpath)

    local_capacity = {}
    local = _mapping(doc.get("local", {}), "local")
    for cname, per_op in _mapping(local.get("capacity", {}), "local.capacity").items():
        if str(cname) not in class_id:
            raise ConfigError(f"local.capacity.{cname}: unknown class")
        for op, value in _mapping(per_op, f"local.capacity.{cname}").items():
            lpath = f"local.capacity.{cname}.{op}"
            if op not in op_id:
                raise ConfigError(f"{lpath}: unknown op {op!r}")
            value = _num(value, lpath)
            if not value > 0:
                problems.append(f"{lpath}: must be > 0, got {value}")
            local_capacity[(class_id[str(cname)], op_id[op])] = value
    if local_capacity:
        for k in classes:
            for c in k.base_workload:
                if (k.id, c) not in local_capacity:
                    problems.append(f"local.capacity: missing entry for (class={k.name}, op={ops[c].name})")

    metrics = _mapping(doc.get("metrics", {}), "metrics")
    l_ref = _num(metrics.get("l_ref_s", DEFAULT_L_REF_S), "metrics.l_ref_s")
    knots = DEFAULT_KNOTS
    if "knots" in metrics:
        raw_knots = metrics["knots"]
        if not isinstance(raw_knots, list):
            raise ConfigError("metrics.knots: expected a list of [resemblance, likability] pairs")
        knots = tuple(_pair(k, f"metrics.knots[{i}]") for i, k in enumerate(raw_knots))

    template = ScenarioTemplate(
        n_servers=len(raw_servers),
        n_users=n_users,
        bw_uplink_range=uplink,
        bw_interserver_range=inter,
        capacity_range=capacity,
        classes=tuple(classes),
        ops=tuple(ops),
        user_classes=user_classes,
        queue_range=queues,
        split_overhead=_num(doc.get("split_overhead", 0.05), "split_overhead"),
        n_runs=_int(doc.get("runs", 100), "runs"),
        rng_seed=_int(doc.get("seed", 42), "seed"),
    )
    return ExperimentConfig(template, local_capacity, knots, l_ref, problems)


def load_default() -> ExperimentConfig:
    return load(default_template_path())
