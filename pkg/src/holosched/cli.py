"""Command line: ``run``, ``validate`` and ``oracle``.

Exit codes: 0 success, 1 domain or tolerance failure, 2 usage or parse
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import config as cfgmod
from . import lp as lpmod
from . import oracles, scheduler, sim
from .metrics import relative_change
from .scheduler import POLICY_LABELS, Policy, PolicyKind

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FORMATS = ("csv", "md", "json")
POLICY_ALIASES = {"proposed": "proposed", "jsq": "jsq", "split": "split", "local": "local"}

log = logging.getLogger("holosched")


class UsageError(Exception):
    pass


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_list(raw: str, allowed, what: str) -> List[str]:
    items = [s.strip().lower() for s in raw.split(",") if s.strip()]
    if not items:
        raise UsageError(f"--{what}: need at least one value")
    for it in items:
        if it not in allowed:
            raise UsageError(f"--{what}: unknown value {it!r} (choose from {', '.join(allowed)})")
    if len(set(items)) != len(items):
        raise UsageError(f"--{what}: duplicate values in {raw!r}")
    return items


def _resolve_seed(arg: Optional[int], default: int) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("HOLOSCHED_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"HOLOSCHED_SEED must be an integer, got {env!r}") from None
    return default


def _load_config(path: Optional[str]) -> cfgmod.ExperimentConfig:
    path = Path(path) if path else cfgmod.default_template_path()
    return cfgmod.load(path)


def build_policies(names: Sequence[str], cfg: cfgmod.ExperimentConfig) -> List[Policy]:
    out = []
    for name in names:
        kind = PolicyKind(POLICY_ALIASES[name])
        if kind is PolicyKind.LOCAL:
            if not cfg.local_capacity:
                raise UsageError("local.capacity: required by policy 'local'")
            out.append(Policy(kind, {"local_capacity": cfg.local_capacity}))
        else:
            out.append(Policy(kind))
    return out


# --- output rendering ----------------------------------------------------------

def latency_csv(batch: sim.BatchResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "policy", "user", "comm_ms", "comp_ms", "integ_ms", "total_ms", "splits"])
    for run in range(len(batch.scenario_digests)):
        for name in batch.policies:
            rep = batch.reports[name][run]
            for n in sorted(rep.per_user):
                u = rep.per_user[n]
                w.writerow([run, name, n, f"{u.comm_s * 1e3:.1f}", f"{u.comp_s * 1e3:.1f}",
                            f"{u.integ_s * 1e3:.1f}", f"{u.total_s * 1e3:.1f}", u.splits])
    return buf.getvalue()


def best_baseline(batch: sim.BatchResult) -> Optional[str]:
    baselines = [p for p in batch.policies if p != PolicyKind.PROPOSED.value]
    if not baselines:
        return None
    return min(baselines, key=lambda p: (batch.results[p].mean_latency_ms, p))


def _pct(value: Optional[float]) -> str:
    if value is None:
        return "n/a"
    return f"{value * 100 + 0.0:+.1f}%"


def summary_md(batch: sim.BatchResult, seed: int, template_name: str) -> str:
    best = best_baseline(batch)
    rows = sorted(batch.policies, key=lambda p: (batch.results[p].mean_latency_ms, p))
    lines = [
        "# Average total latency of different methods",
        "",
        "| Method | Average total latency (ms) | Mean likability | "
        "Reduction vs best baseline | Likability change vs best baseline |",
        "|---|---|---|---|---|",
    ]
    for name in rows:
        r = batch.results[name]
        if best is None:
            red = lik = None
        else:
            b = batch.results[best]
            red = -relative_change(r.mean_latency_ms, b.mean_latency_ms)
            lik = relative_change(r.mean_likability, b.mean_likability)
        label = POLICY_LABELS[PolicyKind(name)]
        lines.append(f"| {label} | {r.mean_latency_ms:.1f} ± {r.std_latency_ms:.1f} | "
                     f"{r.mean_likability:+.3f} ± {r.std_likability:.3f} | {_pct(red)} | {_pct(lik)} |")
    lines += [
        "",
        f"Runs: {len(batch.scenario_digests)}. Seed: {seed}. Template: {template_name}.",
        f"Best baseline: {POLICY_LABELS[PolicyKind(best)] if best else 'none'}.",
        "Latency is the per-user total (communication + computation + integration),"
        " pooled over users and runs; ± is the population standard deviation.",
        "",
    ]
    return "\n".join(lines)


def _r(x: float, nd: int = 4) -> float:
    return float(round(x, nd))


def series_json(batch: sim.BatchResult, cfg: cfgmod.ExperimentConfig, seed: int) -> str:
    curve = cfg.curve
    per_run = {}
    for name in batch.policies:
        reps = batch.reports[name]
        totals = [np.array(rep.totals()) for rep in reps]
        scores = [np.asarray(curve(1.0 / (1.0 + t / cfg.l_ref_s))) for t in totals]
        per_run[name] = {
            "mean_latency_ms": [_r(t.mean() * 1e3, 1) for t in totals],
            "max_latency_ms": [_r(t.max() * 1e3, 1) for t in totals],
            "mean_likability": [_r(float(s.mean())) for s in scores],
            "splits": [int(sum(rep.split_counts.values())) for rep in reps],
        }
    rr = np.linspace(0.0, 1.0, 101)
    doc = {
        "seed": seed,
        "runs": len(batch.scenario_digests),
        "policies": batch.policies,
        "l_ref_s": cfg.l_ref_s,
        "summary": {
            name: {
                "mean_latency_ms": _r(r.mean_latency_ms, 1),
                "std_latency_ms": _r(r.std_latency_ms, 1),
                "mean_likability": _r(r.mean_likability),
                "std_likability": _r(r.std_likability),
            }
            for name, r in batch.results.items()
        },
        "per_run": per_run,
        "likability_curve": {
            "resemblance": [_r(v) for v in rr],
            "likability": [_r(float(v)) for v in curve(rr)],
        },
        "scenario_digests": batch.scenario_digests,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


# --- commands ------------------------------------------------------------------

def cmd_run(args) -> int:
    try:
        cfg = _load_config(args.template)
    except OSError as exc:
        print(f"error: cannot read template: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except cfgmod.ConfigError as exc:
        for msg in exc.messages:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    problems = cfg.violations()
    if problems:
        for msg in problems:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    try:
        names = _parse_list(args.policies, POLICY_ALIASES, "policies")
        formats = _parse_list(args.formats, FORMATS, "formats")
        seed = _resolve_seed(args.seed, cfg.template.rng_seed)
        policies = build_policies(names, cfg)
        if args.runs is not None and args.runs < 1:
            raise UsageError("--runs must be >= 1")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    changes = {"rng_seed": seed}
    if args.runs is not None:
        changes["n_runs"] = args.runs
    template = sim.with_overrides(cfg.template, **changes)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_USAGE

    t0 = time.perf_counter()
    try:
        batch = sim.run_batch(template, policies, cfg.curve, cfg.l_ref_s, max_workers=args.workers)
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    elapsed = time.perf_counter() - t0

    template_name = Path(args.template).name if args.template else "default.scenario"
    if "csv" in formats:
        _atomic_write(out / "latency.csv", latency_csv(batch))
    if "md" in formats:
        _atomic_write(out / "summary.md", summary_md(batch, seed, template_name))
    if "json" in formats:
        _atomic_write(out / "series.json", series_json(batch, cfg, seed))

    for name in sorted(batch.policies, key=lambda p: batch.results[p].mean_latency_ms):
        r = batch.results[name]
        print(f"{POLICY_LABELS[PolicyKind(name)]:<22} {r.mean_latency_ms:8.1f} ± {r.std_latency_ms:6.1f} ms"
              f"   likability {r.mean_likability:+.3f}")
    print(f"{template.n_runs} runs in {elapsed:.2f} s -> {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = cfgmod.load(args.template)
    except OSError as exc:
        print(f"error: cannot read {args.template}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except cfgmod.ConfigError as exc:
        for msg in exc.messages:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    problems = cfg.violations()
    for msg in problems:
        print(f"violation: {msg}")
    if problems:
        return EXIT_FAIL
    print(f"{args.template}: ok")
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        cfg = _load_config(args.template)
        if cfg.violations():
            raise UsageError("; ".join(cfg.violations()))
        if cfg.template.n_servers > 3:
            raise UsageError(f"oracle supports at most 3 servers, template has {cfg.template.n_servers}")
        if not 1 <= args.users <= 2:
            raise UsageError("--users must be 1 or 2")
        if not 0 < args.grid <= 0.5:
            raise UsageError("--grid must lie in (0, 0.5]")
    except (OSError, cfgmod.ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    failed = False

    lp_worst, lp_bad = 0.0, []
    for seed in range(args.lp_seeds):
        prog = oracles.random_lp(np.random.default_rng(seed))
        sol = lpmod.solve(prog)
        ref, _ = oracles.vertex_enumeration(prog)
        dev = abs(sol.objective_value - ref) if sol.optimal else float("inf")
        lp_worst = max(lp_worst, dev)
        if dev > args.lp_tol:
            lp_bad.append(seed)
    print(f"lp vertex oracle: {args.lp_seeds} LPs, max |objective deviation| = {lp_worst:.3g}"
          f" (tol {args.lp_tol:g})")
    if lp_bad:
        failed = True
        print(f"  FAIL seeds: {lp_bad}")

    grid_worst, grid_bad, split_bad = 0.0, [], []
    for seed in range(args.seeds):
        users = 1 + seed % args.users
        template = sim.with_overrides(cfg.template, rng_seed=seed, n_users=users, user_classes=None)
        scenario = sim.sample(template, 0)
        res = scheduler.schedule_proposed_detail(scenario)
        g = oracles.grid_min_max_latency(scenario, args.grid)
        dev = abs(res.l_max - g) / g
        grid_worst = max(grid_worst, dev)
        if dev > args.grid_tol:
            grid_bad.append(seed)
        ref = oracles.min_total_splits(scenario, res.stage1_l_max * (1 + scheduler.SLACK))
        mine = sum(len(b.support) for b in res.blocks.values())
        if mine != ref.min_total_splits:
            split_bad.append(seed)
    print(f"grid oracle: {args.seeds} instances at resolution {args.grid:g},"
          f" max relative deviation = {grid_worst:.4%} (tol {args.grid_tol:.2%})")
    if grid_bad:
        failed = True
        print(f"  FAIL seeds: {grid_bad}")
    print(f"split-pattern oracle: {args.seeds} instances, "
          f"{'all minimal' if not split_bad else 'non-minimal on seeds ' + str(split_bad)}")
    if split_bad:
        failed = True
    return EXIT_FAIL if failed else EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holosched", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evaluate policies over a batch of sampled scenarios")
    r.add_argument("--template", help="experiment template (default: packaged default.scenario)")
    r.add_argument("--policies", default="proposed,jsq,split,local")
    r.add_argument("--out", default="results")
    r.add_argument("--seed", type=int, default=None, help="overrides HOLOSCHED_SEED and the template seed")
    r.add_argument("--formats", default="csv,md,json")
    r.add_argument("--runs", type=int, default=None, help="override the template's run count")
    r.add_argument("--workers", type=int, default=None, help="worker processes (default: serial)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a template and list every violation")
    v.add_argument("template")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="cross-check the solver and scheduler by brute force")
    o.add_argument("--template", help="instance template (at most 3 servers)")
    o.add_argument("--seeds", type=int, default=20)
    o.add_argument("--grid", type=float, default=0.02)
    o.add_argument("--grid-tol", type=float, default=0.02)
    o.add_argument("--users", type=int, default=2)
    o.add_argument("--lp-seeds", type=int, default=50)
    o.add_argument("--lp-tol", type=float, default=1e-6)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
