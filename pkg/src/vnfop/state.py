"""Committed assignment and residual capacities of an operating network."""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import TrafficRequest, link_key
from .transform import AugmentedNetwork

# (traffic id, chain node index 1..l) -> slot id
PlacementMap = dict[tuple[str, int], str]
# (traffic id, edge index 0..l) -> switch sequence, endpoints included
RouteMap = dict[tuple[str, int], tuple[str, ...]]


def path_links(path) -> list[tuple[str, str]]:
    return [link_key(a, b) for a, b in zip(path, path[1:])]


@dataclass
class Assignment:
    """New decisions for a batch: slot per chain node, route per traffic edge."""

    traffics: list[TrafficRequest] = field(default_factory=list)
    placements: PlacementMap = field(default_factory=dict)
    routes: RouteMap = field(default_factory=dict)

    @property
    def active_slots(self) -> set[str]:
        return set(self.placements.values())

    def switch_of(self, aug: AugmentedNetwork, t: TrafficRequest, node: int) -> str | None:
        if node == 0:
            return t.ingress
        if node == len(t.chain) + 1:
            return t.egress
        sid = self.placements.get((t.id, node))
        return aug.slot(sid).switch if sid is not None else None


class NetworkState:
    """Accumulated provisioning plus derived loads.

    Solvers never mutate a state they were handed; they work on
    :meth:`copy` and return the result.
    """

    def __init__(self, aug: AugmentedNetwork):
        self.aug = aug
        self.traffics: dict[str, TrafficRequest] = {}
        self.placements: PlacementMap = {}
        self.routes: RouteMap = {}
        self.slot_load: dict[str, float] = {}
        self.server_used: dict[str, dict[str, float]] = {}
        self.link_load: dict[tuple[str, str], float] = {}

    def copy(self) -> "NetworkState":
        new = NetworkState(self.aug)
        new.traffics = dict(self.traffics)
        new.placements = dict(self.placements)
        new.routes = dict(self.routes)
        new.slot_load = dict(self.slot_load)
        new.server_used = {k: dict(v) for k, v in self.server_used.items()}
        new.link_load = dict(self.link_load)
        return new

    # -- queries ----------------------------------------------------------

    @property
    def active_slots(self) -> set[str]:
        return set(self.slot_load)

    @property
    def active_servers(self) -> set[str]:
        return set(self.server_used)

    @property
    def active_links(self) -> set[tuple[str, str]]:
        return {k for k, v in self.link_load.items() if v > 0}

    def is_active(self, sid: str) -> bool:
        return sid in self.slot_load

    def slot_residual(self, sid: str) -> float:
        return self.aug.capacity(sid) - self.slot_load.get(sid, 0.0)

    def server_free(self, server: str, kind: str) -> float:
        cap = self.aug.topology.server_map[server].capacity.get(kind, 0.0)
        return cap - self.server_used.get(server, {}).get(kind, 0.0)

    def can_open(self, sid: str) -> bool:
        """Whether an inactive slot fits in its server's remaining resources."""
        m = self.aug.slot(sid)
        reqs = self.aug.catalog[m.vnf_type].requirements
        return all(self.server_free(m.server, k) + 1e-9 >= need for k, need in reqs.items())

    def link_residual(self, key: tuple[str, str]) -> float:
        return self.aug.topology.link_map[key].bandwidth_mbps - self.link_load.get(key, 0.0)

    def path_fits(self, path, bandwidth: float) -> bool:
        return all(self.link_residual(k) + 1e-9 >= bandwidth for k in path_links(path))

    def node_switch(self, traffic_id: str, node: int) -> str:
        t = self.traffics[traffic_id]
        if node == 0:
            return t.ingress
        if node == len(t.chain) + 1:
            return t.egress
        return self.aug.slot(self.placements[(traffic_id, node)]).switch

    def assignment(self) -> Assignment:
        return Assignment(list(self.traffics.values()), dict(self.placements), dict(self.routes))

    # -- updates ----------------------------------------------------------

    def place(self, t: TrafficRequest, node: int, sid: str) -> None:
        m = self.aug.slot(sid)
        if sid not in self.slot_load:
            self.slot_load[sid] = 0.0
            used = self.server_used.setdefault(m.server, {})
            for kind, need in self.aug.catalog[m.vnf_type].requirements.items():
                used[kind] = used.get(kind, 0.0) + need
        self.slot_load[sid] += t.bandwidth_mbps
        self.placements[(t.id, node)] = sid

    def route(self, t: TrafficRequest, edge: int, path) -> None:
        path = tuple(path)
        for key in path_links(path):
            self.link_load[key] = self.link_load.get(key, 0.0) + t.bandwidth_mbps
        self.routes[(t.id, edge)] = path

    def commit(self, t: TrafficRequest, slots, paths) -> None:
        """Record a fully provisioned traffic (no feasibility checks)."""
        if t.id in self.traffics:
            raise ValueError(f"traffic {t.id} already provisioned")
        self.traffics[t.id] = t
        for i, sid in enumerate(slots, start=1):
            self.place(t, i, sid)
        for e, path in enumerate(paths):
            self.route(t, e, path)

    def apply(self, assignment: Assignment) -> "NetworkState":
        new = self.copy()
        for t in assignment.traffics:
            slots = [assignment.placements[(t.id, i)] for i in range(1, len(t.chain) + 1)]
            paths = [assignment.routes[(t.id, e)] for e in range(len(t.chain) + 1)]
            new.commit(t, slots, paths)
        return new

    # -- per-traffic views --------------------------------------------------

    def traffic_slots(self, traffic_id: str) -> list[str]:
        t = self.traffics[traffic_id]
        return [self.placements[(traffic_id, i)] for i in range(1, len(t.chain) + 1)]

    def traffic_segments(self, traffic_id: str) -> list[tuple[str, ...]]:
        t = self.traffics[traffic_id]
        return [self.routes[(traffic_id, e)] for e in range(len(t.chain) + 1)]

    def traffic_route(self, traffic_id: str) -> list[tuple[str, str]]:
        """Ordered (directed) physical hops of the whole provisioned path."""
        hops = []
        for seg in self.traffic_segments(traffic_id):
            hops.extend(zip(seg, seg[1:]))
        return hops
