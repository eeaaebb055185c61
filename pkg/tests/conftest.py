import pytest

from vnfop.fixtures import worked_example, internet2, middlebox_catalog
from vnfop.model import Link, ServerSpec, Topology, TrafficRequest, VnfCatalog, VnfType
from vnfop.state import NetworkState
from vnfop.transform import enumerate_vnfs


def line_topology(n=3, bandwidth=1000.0, delay=1.0, servers=None, cores=16.0, energy=(80.5, 2735.0)):
    """Switches a, b, c, ... in a line; ``servers`` lists the switches with a server."""
    names = [chr(ord("a") + i) for i in range(n)]
    links = tuple(Link(u, v, bandwidth, delay) for u, v in zip(names, names[1:]))
    hosts = names if servers is None else servers
    specs = tuple(ServerSpec(f"srv-{s}", s, {"cpu_cores": cores}, {"cpu_cores": energy}) for s in hosts)
    return Topology(tuple(names), links, specs)


def fw_catalog(deploy=10.0, cores=4.0, capacity=900.0, allowed=None):
    return VnfCatalog.of([VnfType("firewall", deploy, {"cpu_cores": cores}, capacity, 0.0, allowed)])


def request(tid, ingress, egress, chain, bw=100.0, budget=1000.0, rate=0.0, batch=0):
    return TrafficRequest(tid, ingress, egress, tuple(chain), bw, budget, rate, batch)


def empty_state(topology, catalog):
    return NetworkState(enumerate_vnfs(topology, catalog))


@pytest.fixture
def example():
    return worked_example()


@pytest.fixture
def example_state(example):
    topo, catalog, _ = example
    return empty_state(topo, catalog)


@pytest.fixture(scope="session")
def backbone():
    return internet2()


@pytest.fixture(scope="session")
def middleboxes():
    return middlebox_catalog()


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
