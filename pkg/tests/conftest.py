import pytest

from holosched import config
from holosched.model import (
    ComputeOp,
    DataClass,
    InterServerLinks,
    MecServer,
    Scenario,
    TeleportedUser,
)

# lines appended by test_acceptance, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_scenario(capacities, uplinks, links, size_bits=8e7, workload=None, delta=0.05,
                  queues=None):
    """Single-class scenario.

    capacities: per server, a dict op id -> capacity
    uplinks: per user, a list of bandwidths indexed by server
    links: dict (m1, m2) -> bandwidth
    """
    workload = workload or {0: 1.0, 1: 2.0}
    ops = [ComputeOp(c, f"op{c}") for c in sorted(workload)]
    dc = DataClass(0, size_bits, workload)
    queues = queues or [0] * len(capacities)
    servers = [MecServer(m, {(0, c): p for c, p in cap.items()}, queues[m])
               for m, cap in enumerate(capacities)]
    users = [TeleportedUser(n, 0, tuple(sorted(workload)), dict(enumerate(bw)))
             for n, bw in enumerate(uplinks)]
    return Scenario(servers, users, InterServerLinks(links), [dc], ops, delta, 0)


@pytest.fixture
def three_server():
    """Hand-specified instance used for spreadsheet-style checks.

    Unsplit service times: server 0 0.65 s, server 1 1.0 s, server 2 2.0 s.
    """
    return make_scenario(
        capacities=[{0: 4.0, 1: 5.0}, {0: 2.0, 1: 4.0}, {0: 1.0, 1: 2.0}],
        uplinks=[[2e9, 1e9, 4e9], [1e9, 3e9, 2e9]],
        links={(0, 1): 5e9, (0, 2): 8e9, (1, 2): 1e10},
    )


@pytest.fixture(scope="session")
def default_config():
    return config.load_default()
