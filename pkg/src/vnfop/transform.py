"""Pseudo-VNF enumeration over the physical servers.

Every server gets, for each VNF type it may host, as many potential
instances ("slots") as its resources allow when packed with that type
alone. Slots of different types on one server may jointly exceed the
server; the packing constraint is enforced by the solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .model import Topology, VnfCatalog


@dataclass(frozen=True)
class PseudoVnf:
    id: str
    vnf_type: str
    server: str
    switch: str
    index: int

    @property
    def sort_key(self) -> tuple[str, str, int]:
        return (self.server, self.vnf_type, self.index)

    @property
    def pseudo_switch(self) -> str:
        return f"ps:{self.id}"


def slot_id(server: str, vnf_type: str, index: int) -> str:
    return f"{server}/{vnf_type}/{index}"


def max_instances(capacity, requirements) -> int:
    """How many copies of one VNF type fit on a server, resource by resource."""
    count = math.inf
    for kind, need in requirements.items():
        if need <= 0:
            continue
        have = capacity.get(kind, 0.0)
        count = min(count, math.floor(have / need + 1e-9))
    if count is math.inf:
        # a type that needs nothing is capped at one instance per server
        return 1
    return int(count)


@dataclass(frozen=True)
class AugmentedNetwork:
    topology: Topology
    catalog: VnfCatalog
    slots: tuple[PseudoVnf, ...]

    @cached_property
    def slot_map(self) -> dict[str, PseudoVnf]:
        return {m.id: m for m in self.slots}

    @cached_property
    def by_server(self) -> dict[str, list[PseudoVnf]]:
        out: dict[str, list[PseudoVnf]] = {s.id: [] for s in self.topology.servers}
        for m in self.slots:
            out[m.server].append(m)
        return out

    @cached_property
    def by_switch_type(self) -> dict[tuple[str, str], list[PseudoVnf]]:
        out: dict[tuple[str, str], list[PseudoVnf]] = {}
        for m in self.slots:
            out.setdefault((m.switch, m.vnf_type), []).append(m)
        return out

    @cached_property
    def by_type(self) -> dict[str, list[PseudoVnf]]:
        out: dict[str, list[PseudoVnf]] = {p: [] for p in self.catalog}
        for m in self.slots:
            out[m.vnf_type].append(m)
        return out

    @property
    def pseudo_switches(self) -> dict[str, str]:
        return {m.id: m.pseudo_switch for m in self.slots}

    def slot(self, sid: str) -> PseudoVnf:
        return self.slot_map[sid]

    def capacity(self, sid: str) -> float:
        return self.catalog[self.slot_map[sid].vnf_type].capacity_mbps

    def switches_for(self, vnf_type: str) -> list[str]:
        return sorted({m.switch for m in self.by_type.get(vnf_type, [])})

    def describe(self) -> dict:
        """Diagnostic document: slot counts per server and type."""
        counts: dict[str, dict[str, int]] = {}
        for m in self.slots:
            counts.setdefault(m.server, {}).setdefault(m.vnf_type, 0)
            counts[m.server][m.vnf_type] += 1
        return {
            "slots": [m.id for m in self.slots],
            "counts": counts,
            "pseudo_switches": self.pseudo_switches,
        }


def enumerate_vnfs(topology: Topology, catalog: VnfCatalog) -> AugmentedNetwork:
    slots = []
    for server in sorted(topology.servers, key=lambda s: s.id):
        for type_id in catalog:
            vnf = catalog[type_id]
            if not vnf.allows(server.id):
                continue
            for i in range(max_instances(server.capacity, vnf.requirements)):
                slots.append(PseudoVnf(slot_id(server.id, type_id, i), type_id, server.id,
                                       server.attached_to, i))
    return AugmentedNetwork(topology, catalog, tuple(slots))


def slots_for(aug: AugmentedNetwork, switch: str, vnf_type: str) -> list[PseudoVnf]:
    return sorted(aug.by_switch_type.get((switch, vnf_type), []), key=lambda m: m.sort_key)
