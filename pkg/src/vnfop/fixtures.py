"""Bundled networks and seeded random instance generators."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import networkx as nx
import numpy as np

from .model import (Link, ServerSpec, Topology, TrafficRequest, VnfCatalog, VnfType, load_catalog,
                    load_topology, load_traffic)

SERVER_ENERGY = {"cpu_cores": (80.5, 2735.0)}
SERVER_CORES = 16.0


def _data(name: str) -> str:
    return resources.files("vnfop").joinpath("data", name).read_text()


def internet2() -> Topology:
    """12-switch, 15-link backbone with one 16-core server per switch."""
    return load_topology(_data("internet2.json"))


def middlebox_catalog() -> VnfCatalog:
    return load_catalog(_data("middlebox_catalog.json"))


def worked_example() -> tuple[Topology, VnfCatalog, list[TrafficRequest]]:
    """Six-switch worked example: firewall -> ids -> proxy from switch 1 to 6."""
    return (load_topology(_data("worked_example.json")), load_catalog(_data("worked_example_catalog.json")),
            load_traffic(_data("worked_example_traffic.csv")))


def random_topology(rng: np.random.Generator, n_switches: int, n_links: int | None = None,
                    n_servers: int | None = None, cores: float = SERVER_CORES,
                    energy=None, bandwidth=(1000.0, 10000.0), delay=(1, 5)) -> Topology:
    """Connected random graph: a random spanning tree plus extra links.

    ``n_servers`` defaults to one server per switch. ``energy`` maps a
    resource kind to ``(idle_w, peak_w)``; when omitted each server gets
    random constants so servers differ in efficiency.
    """
    switches = [f"s{i:02d}" for i in range(n_switches)]
    max_links = n_switches * (n_switches - 1) // 2
    n_links = min(max_links, n_links if n_links is not None else n_switches - 1 + n_switches // 2)
    n_links = max(n_links, n_switches - 1)
    order = rng.permutation(n_switches)
    pairs = set()
    for k in range(1, n_switches):
        a, b = order[k], order[rng.integers(k)]
        pairs.add((min(a, b), max(a, b)))
    while len(pairs) < n_links:
        a, b = rng.choice(n_switches, size=2, replace=False)
        pairs.add((min(a, b), max(a, b)))
    links = tuple(
        Link(switches[a], switches[b], float(rng.choice(bandwidth)), float(rng.integers(delay[0], delay[1] + 1)))
        for a, b in sorted(pairs)
    )
    n_servers = n_switches if n_servers is None else n_servers
    hosts = sorted(rng.choice(n_switches, size=n_servers, replace=n_servers > n_switches))
    servers = []
    for k, h in enumerate(hosts):
        if energy is None:
            idle = float(rng.integers(5, 21))
            spec = {"cpu_cores": (idle, idle + float(rng.integers(40, 181)))}
        else:
            spec = dict(energy)
        servers.append(ServerSpec(f"n{k}", switches[h], {"cpu_cores": cores}, spec))
    return Topology(tuple(switches), links, tuple(servers))


def random_traffic(rng: np.random.Generator, topology: Topology, catalog: VnfCatalog, count: int,
                   chain_len=(1, 3), bandwidth=(50, 400), budget_ms: float | None = None,
                   penalty_rate: float = 1.0, prefix: str = "t", batch: int = 0,
                   distinct: bool = True) -> list[TrafficRequest]:
    """Random requests between distinct switches with random chains.

    With ``distinct`` a chain never repeats a VNF type.

    ``budget_ms`` defaults to twice the topology's delay diameter plus the
    largest possible chain processing delay, so no request can miss it.
    """
    switches = sorted(topology.switches)
    types = list(catalog)
    if budget_ms is None:
        budget_ms = relaxed_budget(topology, catalog, chain_len[1])
    out = []
    for k in range(count):
        if len(switches) > 1:
            a, b = rng.choice(len(switches), size=2, replace=False)
        else:
            a = b = 0
        length = int(rng.integers(chain_len[0], chain_len[1] + 1))
        if distinct:
            picks = rng.choice(len(types), size=min(length, len(types)), replace=False)
        else:
            picks = rng.integers(len(types), size=length)
        chain = tuple(types[int(i)] for i in picks)
        bw = float(rng.integers(bandwidth[0], bandwidth[1] + 1))
        out.append(TrafficRequest(f"{prefix}{k}", switches[a], switches[b], chain, bw, budget_ms,
                                  penalty_rate, batch))
    return out


def relaxed_budget(topology: Topology, catalog: VnfCatalog, max_chain: int) -> float:
    """Twice the delay diameter plus the slowest possible chain, plus one."""
    g = topology.graph
    diameter = max((d for _, row in nx.all_pairs_dijkstra_path_length(g, weight="delay") for d in row.values()),
                   default=0.0)
    slowest = max((catalog[p].proc_delay_ms for p in catalog), default=0.0) * max_chain
    return 2 * diameter + slowest + 1.0


def desk_catalog(rng: np.random.Generator) -> VnfCatalog:
    """Bundled middlebox needs and capacities with random deployment costs."""
    base = middlebox_catalog()
    return VnfCatalog.of(
        VnfType(v.id, float(rng.integers(2, 11)), v.requirements, v.capacity_mbps, v.proc_delay_ms)
        for v in (base[p] for p in base)
    )


@dataclass
class Instance:
    seed: int
    topology: Topology
    catalog: VnfCatalog
    batch: list[TrafficRequest]


def desk_instance(seed: int) -> Instance:
    """Small random instance sized for the exact solver."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 9))
    topo = random_topology(rng, n, n_links=n - 1 + int(rng.integers(1, max(2, n // 2) + 1)),
                           n_servers=int(rng.integers(1, 4)), cores=32.0, bandwidth=(1000.0, 2000.0))
    catalog = desk_catalog(rng)
    batch = random_traffic(rng, topo, catalog, int(rng.integers(1, 5)))
    return Instance(seed, topo, catalog, batch)
