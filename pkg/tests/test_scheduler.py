import logging

import numpy as np
import pytest

from holosched import lp, oracles, scheduler
from holosched.model import Allocation, report, user_latency
from holosched.scheduler import Policy, PolicyKind

from conftest import make_scenario


def random_scenario(rng, n_servers=3, n_users=2, delta=0.05):
    caps = [{0: rng.uniform(0.5, 8.0), 1: rng.uniform(1.0, 16.0)} for _ in range(n_servers)]
    up = [[rng.uniform(1e9, 4e9) for _ in range(n_servers)] for _ in range(n_users)]
    links = {(a, b): rng.uniform(5e9, 1e10) for a in range(n_servers) for b in range(a + 1, n_servers)}
    return make_scenario(caps, up, links, size_bits=9.667e7, delta=delta)


# --- proposed ------------------------------------------------------------------

def test_one_user_one_server():
    sc = make_scenario([{0: 2.0}], [[1e9]], {}, size_bits=1e8, workload={0: 1.0})
    sched, l_max = scheduler.schedule_proposed(sc)
    alloc = sched.for_user(0)
    assert alloc.fractions == {0: 1.0}
    assert alloc.n_splits == 1
    assert l_max == pytest.approx(0.1 + 0.5)


def test_identical_servers_split_three_ways():
    # s = 1e8, uplinks 1e9, inter-server 1e10, A = 3, p = 1, delta = 0:
    # l = 0.1 + 3/3 + (2/3) * 1e8 / 1e10
    sc = make_scenario([{0: 1.0}] * 3, [[1e9] * 3],
                       {(0, 1): 1e10, (0, 2): 1e10, (1, 2): 1e10},
                       size_bits=1e8, workload={0: 3.0}, delta=0.0)
    res = scheduler.schedule_proposed_detail(sc)
    alloc = res.schedule.for_user(0)
    assert alloc.n_splits == 3
    assert [alloc.fractions[m] for m in range(3)] == pytest.approx([1 / 3] * 3, abs=1e-6)
    assert res.l_max == pytest.approx(0.1 + 1.0 + 2 / 3 * 0.01, rel=1e-6)
    assert res.stage1_l_max == pytest.approx(res.l_max, rel=1e-6)


def test_matches_grid_search_on_hand_instance(three_server):
    _, l_max = scheduler.schedule_proposed(three_server)
    coarse = oracles.grid_min_max_latency(three_server, 0.02)
    fine = oracles.grid_min_max_latency(three_server, 0.0025)
    assert l_max <= coarse + 1e-12
    assert l_max == pytest.approx(fine, rel=5e-3)


def test_joint_lp1_equals_worst_user_block(three_server):
    s1 = scheduler.solve_lp1(three_server)
    worst = max(b.latency_s for b in s1.blocks.values())
    assert s1.l_max == pytest.approx(worst, rel=1e-9)
    prog = scheduler.build_lp1(three_server, {n: b.integrator for n, b in s1.blocks.items()})
    assert prog.max_violation(s1.joint.x) <= lp.FEAS_TOL


def test_stage2_respects_cap_and_minimizes_splits():
    rng = np.random.default_rng(11)
    for _ in range(15):
        sc = random_scenario(rng, n_users=int(rng.integers(1, 4)))
        res = scheduler.schedule_proposed_detail(sc)
        cap = res.stage1_l_max * (1 + scheduler.SLACK)
        rep = report(sc, res.schedule)
        assert rep.max_latency_s <= cap + 1e-12
        ref = oracles.min_total_splits(sc, cap)
        assert sum(rep.split_counts.values()) == ref.min_total_splits


def test_split_overhead_discourages_splitting():
    sc0 = make_scenario([{0: 4.0}, {0: 4.0}], [[1e9, 1e9]], {(0, 1): 1e10},
                        size_bits=1e7, workload={0: 1.0}, delta=0.0)
    sc1 = make_scenario([{0: 4.0}, {0: 4.0}], [[1e9, 1e9]], {(0, 1): 1e10},
                        size_bits=1e7, workload={0: 1.0}, delta=1.5)
    assert scheduler.schedule_proposed(sc0)[0].for_user(0).n_splits == 2
    # with 150% overhead per extra split, halving the work no longer pays
    assert scheduler.schedule_proposed(sc1)[0].for_user(0).n_splits == 1


def test_deterministic(three_server):
    a = scheduler.schedule_proposed(three_server)
    b = scheduler.schedule_proposed(three_server)
    assert a == b


def test_fallback_when_no_pattern_meets_cap(three_server, caplog):
    s1 = scheduler.solve_lp1(three_server)
    user = three_server.users[0]
    with caplog.at_level(logging.WARNING, logger="holosched.scheduler"):
        got = scheduler._stage2_user(three_server, user, 1e-9, s1.blocks[0])
    assert got is s1.blocks[0]
    assert "no split pattern" in caplog.text


def test_many_servers_use_greedy_reduction(caplog):
    # eight usable servers and one that is a thousand times slower
    n = scheduler.MAX_ENUM_SERVERS + 1
    caps = [{0: 4.0, 1: 8.0}] * (n - 1) + [{0: 4e-3, 1: 8e-3}]
    links = {(a, b): 1e10 for a in range(n) for b in range(a + 1, n)}
    sc = make_scenario(caps, [[2e9] * n], links)
    with caplog.at_level(logging.WARNING, logger="holosched.scheduler"):
        res = scheduler.schedule_proposed_detail(sc)
    assert "greedily" in caplog.text
    assert res.l_max <= res.stage1_l_max * (1 + scheduler.SLACK) + 1e-12
    alloc = res.schedule.for_user(0)
    assert n - 1 not in alloc.active
    assert alloc.n_splits < n


def test_split_patterns_order():
    pats = scheduler.split_patterns([2, 0, 1])
    assert pats == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]


# --- baselines -----------------------------------------------------------------

def test_local_with_server_capacity_equals_single_server():
    sc = make_scenario([{0: 3.0, 1: 6.0}], [[2e9]], {})
    local = report(sc, scheduler.schedule_local(sc, {(0, 0): 3.0, (0, 1): 6.0}))
    single = user_latency(sc, Allocation(0, {0: 1.0}, 0))
    assert local.max_latency_s == pytest.approx(single.total_s)


def test_local_by_hand(three_server):
    # local: 1/2 + 2/2.5 = 1.3 s; result goes to server 2 (4 Gb/s): 8e7 / 4e9
    sched = scheduler.schedule_local(three_server, {(0, 0): 2.0, (0, 1): 2.5})
    rep = report(three_server, sched)
    assert sched.for_user(0).integrator == 2
    assert rep.per_user[0].comp_s == pytest.approx(1.3)
    assert rep.per_user[0].comm_s == pytest.approx(0.02)
    assert rep.per_user[0].total_s == pytest.approx(1.32)
    assert rep.per_user[0].integ_s == 0.0


def test_local_rejects_bad_capacity(three_server):
    with pytest.raises(ValueError):
        scheduler.schedule_local(three_server, {(0, 0): 0.0, (0, 1): 1.0})


def test_jsq_round_robins_empty_servers():
    sc = make_scenario([{0: 1.0, 1: 1.0}] * 3, [[1e9] * 3] * 3,
                       {(0, 1): 1e10, (0, 2): 1e10, (1, 2): 1e10})
    sched = scheduler.schedule_jsq(sc)
    assert [sched.for_user(n).integrator for n in range(3)] == [0, 1, 2]
    assert all(sched.for_user(n).n_splits == 1 for n in range(3))
    assert all(sched.for_user(n).wait_s == 0.0 for n in range(3))


def test_jsq_single_user_takes_shortest_queue():
    sc = make_scenario([{0: 1.0, 1: 1.0}] * 3, [[1e9] * 3],
                       {(0, 1): 1e10, (0, 2): 1e10, (1, 2): 1e10}, queues=[2, 0, 1])
    alloc = scheduler.schedule_jsq(sc).for_user(0)
    assert alloc.active == [1]
    assert alloc.wait_s == 0.0


def test_jsq_waiting_by_hand():
    sc = make_scenario(
        capacities=[{0: 4.0, 1: 5.0}, {0: 2.0, 1: 4.0}, {0: 1.0, 1: 2.0}],
        uplinks=[[2e9, 1e9, 4e9], [1e9, 3e9, 2e9]],
        links={(0, 1): 5e9, (0, 2): 8e9, (1, 2): 1e10},
        queues=[1, 1, 2],
    )
    rep = report(sc, scheduler.schedule_jsq(sc))
    # user 0 -> server 0 behind one job: 0.04 + 0.65 + 0.65
    assert rep.per_user[0].total_s == pytest.approx(1.34)
    # user 1 -> server 1 (queues now 2, 1, 2) behind one job: 8e7/3e9 + 1.0 + 1.0
    assert rep.per_user[1].total_s == pytest.approx(2.0 + 8e7 / 3e9)


def test_jsq_conserves_jobs():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n_users = int(rng.integers(1, 7))
        sc = random_scenario(rng, n_users=n_users)
        sched = scheduler.schedule_jsq(sc)
        counts = {m: 0 for m in sc.server_ids}
        for a in sched.allocations:
            counts[a.integrator] += 1
        assert sum(counts.values()) == n_users
        assert max(counts.values()) - min(counts.values()) <= 1


def test_split_evenly_single_server():
    sc = make_scenario([{0: 2.0, 1: 2.0}], [[1e9]], {})
    assert scheduler.schedule_split_evenly(sc).for_user(0).fractions == {0: 1.0}


def test_split_evenly_three_servers(three_server):
    sched = scheduler.schedule_split_evenly(three_server)
    for alloc in sched.allocations:
        assert list(alloc.fractions.values()) == pytest.approx([1 / 3] * 3)
        assert alloc.n_splits == 3
        assert alloc.integrator == 2  # cheapest merge, see test_model


def test_proposed_dominates_split_evenly_on_heterogeneous_servers():
    rng = np.random.default_rng(100)
    for _ in range(100):
        sc = random_scenario(rng, n_users=int(rng.integers(1, 4)))
        _, l_max = scheduler.schedule_proposed(sc)
        even = report(sc, scheduler.schedule_split_evenly(sc)).max_latency_s
        assert l_max <= even + 1e-6


def test_policy_params():
    with pytest.raises(ValueError):
        Policy(PolicyKind.LOCAL)
    with pytest.raises(ValueError):
        Policy(PolicyKind.JSQ, {"local_capacity": {(0, 0): 1.0}})
    assert Policy("split").kind is PolicyKind.SPLIT


def test_run_policy_dispatch(three_server):
    cap = {(0, 0): 2.0, (0, 1): 2.5}
    assert scheduler.run_policy(Policy("local", {"local_capacity": cap}), three_server) == \
        scheduler.schedule_local(three_server, cap)
    assert scheduler.run_policy(Policy("jsq"), three_server) == scheduler.schedule_jsq(three_server)
    assert scheduler.run_policy(Policy("split"), three_server) == \
        scheduler.schedule_split_evenly(three_server)
    assert scheduler.run_policy(Policy("proposed"), three_server) == \
        scheduler.schedule_proposed(three_server)[0]
