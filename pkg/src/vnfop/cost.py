"""OPEX and fragmentation costs of a provisioning event.

All component functions return dollars except :func:`energy_fraction`
(watts) and :func:`path_delay` (milliseconds). A provisioning event is
costed as a whole by :func:`evaluate_event`, which both solvers use so
their reported numbers are directly comparable.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

from .model import Topology, TrafficRequest, VnfCatalog
from .state import NetworkState, path_links
from .transform import PseudoVnf

ENERGY_MODES = ("per-slot", "per-server-idle")


@dataclass(frozen=True)
class CostWeights:
    alpha: float = 1.0   # deployment
    beta: float = 1.0    # energy
    gamma: float = 1.0   # forwarding
    lam: float = 1.0     # SLO penalty
    mu: float = 1.0      # fragmentation
    sigma: float = 0.01  # dollars per Mbit per link
    resource_price: Mapping[str, float] = field(default_factory=dict)
    bandwidth_price: float = 1.0
    dollars_per_watt: float = 1.0
    energy_mode: str = "per-slot"

    def __post_init__(self):
        scalars = (self.alpha, self.beta, self.gamma, self.lam, self.mu, self.sigma,
                   self.bandwidth_price, self.dollars_per_watt)
        if any(w < 0 for w in scalars) or any(p < 0 for p in self.resource_price.values()):
            raise ValueError("cost weights and prices must be nonnegative")
        if self.energy_mode not in ENERGY_MODES:
            raise ValueError(f"energy_mode must be one of {ENERGY_MODES}")

    def price(self, kind: str) -> float:
        return self.resource_price.get(kind, 1.0)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CostWeights":
        doc = dict(doc)
        if "lambda" in doc:
            doc["lam"] = doc.pop("lambda")
        return cls(**doc)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        out["resource_price"] = dict(sorted(self.resource_price.items()))
        return out


COMPONENTS = ("deployment", "energy", "forwarding", "penalty", "fragmentation")


@dataclass(frozen=True)
class CostBreakdown:
    deployment: float = 0.0
    energy: float = 0.0
    forwarding: float = 0.0
    penalty: float = 0.0
    fragmentation: float = 0.0
    total: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CostBreakdown":
        return cls(**{k: float(doc[k]) for k in COMPONENTS + ("total",)})


def energy_fraction(total: float, consumed: float, idle_w: float, peak_w: float) -> float:
    """Power draw of a resource with ``consumed`` of ``total`` units in use."""
    if not total > 0:
        raise ValueError("total resource must be > 0")
    if consumed < 0 or consumed > total:
        raise ValueError(f"consumed {consumed} outside [0, {total}]")
    return (peak_w - idle_w) * consumed / total + idle_w


def slot_watts(slot: PseudoVnf, topology: Topology, catalog: VnfCatalog) -> float:
    server = topology.server_map[slot.server]
    reqs = catalog[slot.vnf_type].requirements
    watts = 0.0
    for kind, (idle, peak) in server.energy.items():
        if kind in server.capacity:
            watts += energy_fraction(server.capacity[kind], reqs.get(kind, 0.0), idle, peak)
    return watts


def server_watts(server_id: str, used: Mapping[str, float], topology: Topology) -> float:
    server = topology.server_map[server_id]
    watts = 0.0
    for kind, (idle, peak) in server.energy.items():
        if kind in server.capacity:
            watts += energy_fraction(server.capacity[kind], min(used.get(kind, 0.0), server.capacity[kind]),
                                     idle, peak)
    return watts


def energy_cost(active: Iterable[PseudoVnf], topology: Topology, catalog: VnfCatalog,
                mode: str = "per-slot", dollars_per_watt: float = 1.0) -> float:
    """Energy of the active slots, priced at ``dollars_per_watt``.

    ``per-slot`` sums one energy term per active slot, idle share included,
    so two slots on a server pay idle twice. ``per-server-idle`` charges idle
    once per server that hosts at least one active slot.
    """
    active = list(active)
    if mode == "per-slot":
        watts = sum(slot_watts(m, topology, catalog) for m in active)
    elif mode == "per-server-idle":
        used: dict[str, dict[str, float]] = {}
        for m in active:
            u = used.setdefault(m.server, {})
            for kind, need in catalog[m.vnf_type].requirements.items():
                u[kind] = u.get(kind, 0.0) + need
        watts = sum(server_watts(s, u, topology) for s, u in used.items())
    else:
        raise ValueError(f"unknown energy mode {mode}")
    return watts * dollars_per_watt


def deployment_cost(prev_active: Iterable[PseudoVnf], now_active: Iterable[PseudoVnf],
                    catalog: VnfCatalog) -> float:
    prev = {m.id: m for m in prev_active}
    now = {m.id: m for m in now_active}
    if not prev.keys() <= now.keys():
        gone = sorted(prev.keys() - now.keys())
        raise ValueError(f"slot {gone[0]} was deactivated; deallocation is not allowed")
    return float(sum(catalog[now[k].vnf_type].deploy_cost for k in sorted(now.keys() - prev.keys())))


def forwarding_cost(new_link_loads: Iterable[tuple[object, float]], sigma: float) -> float:
    """``new_link_loads`` holds one ``(link, bandwidth_mbps)`` per newly routed traffic edge per link."""
    return sum(bw for _, bw in new_link_loads) * sigma


def slo_penalty(t: TrafficRequest, actual_delay_ms: float) -> float:
    if actual_delay_ms < 0:
        raise ValueError("delay must be >= 0")
    return t.penalty_rate * max(0.0, actual_delay_ms - t.delay_budget_ms)


def path_delay(route: Sequence[tuple[str, str]], chain: Sequence[str],
               topology: Topology, catalog: VnfCatalog) -> float:
    """Propagation delay of ``route`` plus processing delay of every VNF in ``chain``."""
    delay = 0.0
    for i, (u, v) in enumerate(route):
        if i and route[i - 1][1] != u:
            raise ValueError(f"route is not contiguous at hop {i}: {route[i - 1]} then {(u, v)}")
        if not topology.has_link(u, v):
            raise ValueError(f"route uses missing link {u}-{v}")
        delay += topology.link(u, v).delay_ms
    return delay + sum(catalog[p].proc_delay_ms for p in chain)


def traffic_delay(state: NetworkState, traffic_id: str) -> float:
    t = state.traffics[traffic_id]
    return path_delay(state.traffic_route(traffic_id), t.chain, state.aug.topology, state.aug.catalog)


def fragmentation_cost(state: NetworkState, weights: CostWeights) -> float:
    """Priced idle capacity on active servers and active links."""
    topo = state.aug.topology
    cost = 0.0
    for server_id in sorted(state.server_used):
        used = state.server_used[server_id]
        for kind, cap in topo.server_map[server_id].capacity.items():
            cost += (cap - used.get(kind, 0.0)) * weights.price(kind)
    for key in sorted(state.active_links):
        cost += (topo.link_map[key].bandwidth_mbps - state.link_load[key]) * weights.bandwidth_price
    return cost


def total_cost(deployment: float, energy: float, forwarding: float, penalty: float,
               fragmentation: float, weights: CostWeights) -> CostBreakdown:
    total = (weights.alpha * deployment + weights.beta * energy + weights.gamma * forwarding
             + weights.lam * penalty + weights.mu * fragmentation)
    return CostBreakdown(float(deployment), float(energy), float(forwarding), float(penalty),
                         float(fragmentation), float(total))


def evaluate_event(before: NetworkState, after: NetworkState, traffic_ids: Iterable[str],
                   weights: CostWeights) -> CostBreakdown:
    """Cost of moving from ``before`` to ``after`` by provisioning ``traffic_ids``.

    Deployment and forwarding count only what is new; energy and
    fragmentation describe the network after the event, so an event that
    provisions nothing still reports what the running network costs.
    """
    ids = sorted(traffic_ids)
    aug = after.aug
    slots = aug.slot_map
    deploy = deployment_cost((slots[s] for s in before.slot_load), (slots[s] for s in after.slot_load),
                             aug.catalog)
    energy = energy_cost((slots[s] for s in sorted(after.slot_load)), aug.topology, aug.catalog,
                         weights.energy_mode, weights.dollars_per_watt)
    loads = []
    penalty = 0.0
    for tid in ids:
        t = after.traffics[tid]
        for e in range(len(t.chain) + 1):
            if (tid, e) in before.routes:
                continue
            loads.extend((k, t.bandwidth_mbps) for k in path_links(after.routes[(tid, e)]))
        penalty += slo_penalty(t, traffic_delay(after, tid))
    forwarding = forwarding_cost(loads, weights.sigma)
    fragmentation = fragmentation_cost(after, weights)
    return total_cost(deploy, energy, forwarding, penalty, fragmentation, weights)


__all__ = [
    "CostWeights", "CostBreakdown", "COMPONENTS", "energy_fraction", "energy_cost", "deployment_cost",
    "forwarding_cost", "slo_penalty", "path_delay", "traffic_delay", "fragmentation_cost", "total_cost",
    "evaluate_event", "slot_watts", "server_watts",
]
