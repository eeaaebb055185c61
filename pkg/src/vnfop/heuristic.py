"""Per-traffic VNF placement on a multi-stage graph.

For a traffic with chain ``p1 -> ... -> pl`` the graph has ``l + 2``
stages: the ingress switch, one stage per VNF whose nodes are the switches
that can still host that VNF, and the egress switch. Nodes carry the
deployment and energy cost of the slot the traffic would use there; edges
carry forwarding cost and an SLO penalty against an equal share of the
delay budget. A Viterbi pass keeps, for every node, the cheapest
predecessor, and back-tracing from the egress yields the placement.

Routing between consecutive choices follows the minimum-delay path. If
that path lacks bandwidth, the next shortest paths are tried, up to
``HeuristicOptions.k_paths`` in total. Finding those detours is the
expensive part, so a blocked transition is first priced at a lower bound
and only resolved when the Viterbi pass picks it; the pass is repeated
until the chosen sequence is exactly priced.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from itertools import islice

import networkx as nx
import numpy as np

from .cost import CostBreakdown, CostWeights, evaluate_event, server_watts, slot_watts
from .errors import Infeasible
from .model import Topology, TrafficRequest
from .state import NetworkState, path_links
from .transform import PseudoVnf, slots_for

EPS = 1e-9
INF = np.inf


class OpCounter:
    """Counts basic relaxation steps (table cells plus stage-to-stage transitions)."""

    def __init__(self):
        self.count = 0

    def add(self, n: int) -> None:
        self.count += int(n)


@dataclass
class HeuristicOptions:
    k_paths: int = 3
    counter: OpCounter | None = None
    # Price detours only for transitions the Viterbi pass actually picks.
    lazy_paths: bool = True


class Routing:
    """Static min-delay routing tables for one topology."""

    def __init__(self, topology: Topology):
        self.topology = topology
        g = topology.graph
        self.g = g
        self.switches = list(g.nodes)
        self.index = {s: i for i, s in enumerate(self.switches)}
        n = len(self.switches)
        self.links = sorted(topology.link_map)
        self.link_index = {k: i for i, k in enumerate(self.links)}
        self.delay = np.full((n, n), INF)
        self.hops = np.full((n, n), INF)
        self.paths: dict[tuple[int, int], tuple[str, ...]] = {}
        self.incidence = np.zeros((len(self.links), n, n), dtype=bool)
        for src, (dist, paths) in nx.all_pairs_dijkstra(g, weight="delay"):
            i = self.index[src]
            for dst, path in paths.items():
                j = self.index[dst]
                self.delay[i, j] = dist[dst]
                self.hops[i, j] = len(path) - 1
                self.paths[(i, j)] = tuple(path)
                for key in path_links(path):
                    self.incidence[self.link_index[key], i, j] = True
        self.min_hops = np.full((n, n), INF)
        for src, row in nx.all_pairs_shortest_path_length(g):
            for dst, h in row.items():
                self.min_hops[self.index[src], self.index[dst]] = h
        self._alternatives: dict[tuple[int, int], tuple[list[tuple[str, ...]], object]] = {}

    def alternatives(self, i: int, j: int, k: int) -> list[tuple[str, ...]]:
        """First ``k`` simple paths by delay (the min-delay path first)."""
        found, more = self._alternatives.get((i, j)) or self._start(i, j)
        while len(found) < k and more is not None:
            path = next(more, None)
            if path is None:
                more = None
            elif tuple(path) != found[0]:
                found.append(tuple(path))
        self._alternatives[(i, j)] = (found, more)
        return found[:k]

    def _start(self, i: int, j: int):
        a, b = self.switches[i], self.switches[j]
        if a == b:
            return [(a,)], None
        if (i, j) not in self.paths:
            return [], None
        return [self.paths[(i, j)]], nx.shortest_simple_paths(self.g, a, b, weight="delay")

    def first_fitting(self, i: int, j: int, k: int, fits):
        """Earliest of the first ``k`` paths accepted by ``fits``, computing no more paths than needed."""
        for n in range(1, k + 1):
            paths = self.alternatives(i, j, n)
            if len(paths) < n:
                return None
            if fits(paths[-1]):
                return paths[-1]
        return None

    def path_delay(self, path) -> float:
        return sum(self.g[u][v]["delay"] for u, v in zip(path, path[1:]))


_ROUTING: "OrderedDict[int, tuple[Topology, Routing]]" = OrderedDict()


def routing_for(topology: Topology) -> Routing:
    hit = _ROUTING.get(id(topology))
    if hit is not None and hit[0] is topology:
        _ROUTING.move_to_end(id(topology))
        return hit[1]
    r = Routing(topology)
    _ROUTING[id(topology)] = (topology, r)
    while len(_ROUTING) > 16:
        _ROUTING.popitem(last=False)
    return r


@dataclass
class MultiStageGraph:
    traffic: TrafficRequest
    stages: list[list[str]]                 # switch ids per stage
    stage_types: list[str | None]           # None for ingress/egress
    node_costs: list[np.ndarray]
    edge_costs: list[np.ndarray]            # edge_costs[i]: stage i -> stage i + 1
    node_slots: list[dict[str, str]] = field(default_factory=list)
    edge_paths: list[dict[tuple[str, str], tuple[str, ...]]] = field(default_factory=list)
    # Blocked transitions still priced at a lower bound, per stage edge.
    pending: list[set[tuple[int, int]]] = field(default_factory=list)
    edge_terms: list[tuple[float, float, float, float]] = field(default_factory=list)

    @classmethod
    def from_costs(cls, stages, node_costs, edge_costs, traffic=None, stage_types=None):
        """Graph with explicit costs, bypassing the network (worked examples, tests)."""
        edges = [np.asarray(c, dtype=float) for c in edge_costs]
        return cls(traffic, [list(s) for s in stages], stage_types or [None] * len(stages),
                   [np.asarray(c, dtype=float) for c in node_costs], edges,
                   pending=[set() for _ in edges])


@dataclass
class ViterbiTables:
    cost: list[np.ndarray]   # cost[i][j]: cheapest way to reach node j of stage i
    back: list[np.ndarray]   # back[i][j]: index of the predecessor in stage i - 1


def viterbi(graph: MultiStageGraph, counter: OpCounter | None = None):
    """Forward relaxation and back-trace.

    Returns ``(tables, choice, total)`` where ``choice[i]`` indexes the node
    picked in stage ``i``. Ties go to the predecessor listed first, which is
    the smallest switch id for graphs built from a network.
    """
    first = graph.node_costs[0]
    cost = [np.array(first, dtype=float)]
    back = [np.full(len(first), -1)]
    if counter is not None:
        counter.add(sum(len(s) for s in graph.stages))
    for i in range(1, len(graph.stages)):
        step = cost[-1][:, None] + graph.edge_costs[i - 1] + graph.node_costs[i][None, :]
        if counter is not None:
            counter.add(step.size)
        if step.shape[0] == 0 or step.shape[1] == 0:
            cost.append(np.full(step.shape[1], INF))
            back.append(np.full(step.shape[1], -1))
            continue
        arg = np.argmin(step, axis=0)
        cost.append(step[arg, np.arange(step.shape[1])])
        back.append(np.where(np.isfinite(cost[-1]), arg, -1))
    tables = ViterbiTables(cost, back)
    last = cost[-1]
    if last.size == 0 or not np.isfinite(last.min()):
        return tables, None, INF
    j = int(np.argmin(last))
    total = float(last[j])
    choice = [j]
    for i in range(len(graph.stages) - 1, 0, -1):
        j = int(back[i][j])
        choice.append(j)
    choice.reverse()
    return tables, choice, total


# --- costs ----------------------------------------------------------------------

def _open_watts(state: NetworkState, m: PseudoVnf, weights: CostWeights) -> float:
    topo = state.aug.topology
    if weights.energy_mode == "per-slot":
        return slot_watts(m, topo, state.aug.catalog)
    used = state.server_used.get(m.server)
    after = dict(used or {})
    for kind, need in state.aug.catalog[m.vnf_type].requirements.items():
        after[kind] = after.get(kind, 0.0) + need
    before = server_watts(m.server, used, topo) if used is not None else 0.0
    return server_watts(m.server, after, topo) - before


def choose_slot(state: NetworkState, switch: str, vnf_type: str, bandwidth: float,
                weights: CostWeights) -> tuple[str | None, float]:
    """Slot a traffic would use at ``switch`` and its incremental cost.

    An active slot with enough residual capacity is reused for free;
    otherwise the cheapest slot that can still be opened is taken.
    """
    best, best_cost = None, INF
    vnf = state.aug.catalog[vnf_type]
    tried_servers = set()
    for m in slots_for(state.aug, switch, vnf_type):
        if state.is_active(m.id):
            if state.slot_residual(m.id) + EPS >= bandwidth:
                return m.id, 0.0
            continue
        if m.server in tried_servers or vnf.capacity_mbps + EPS < bandwidth or not state.can_open(m.id):
            continue
        tried_servers.add(m.server)
        c = weights.alpha * vnf.deploy_cost + weights.beta * _open_watts(state, m, weights) * weights.dollars_per_watt
        if c < best_cost:
            best, best_cost = m.id, c
    return best, best_cost


def build_stage_costs(state: NetworkState, t: TrafficRequest, weights: CostWeights | None = None,
                      options: HeuristicOptions | None = None, banned=frozenset()) -> MultiStageGraph:
    """Stage graph for ``t`` against the residual capacities of ``state``.

    ``banned`` holds ``(stage, switch)`` pairs to leave out of the graph.
    """
    weights = weights or CostWeights()
    options = options or HeuristicOptions()
    aug = state.aug
    r = routing_for(aug.topology)
    l = len(t.chain)
    stages = [[t.ingress]]
    node_costs = [np.zeros(1)]
    node_slots = [{}]
    for i, p in enumerate(t.chain, start=1):
        cands, costs, slots = [], [], {}
        for switch in aug.switches_for(p):
            if (i, switch) in banned:
                continue
            sid, c = choose_slot(state, switch, p, t.bandwidth_mbps, weights)
            if sid is not None:
                cands.append(switch)
                costs.append(c)
                slots[switch] = sid
        if not cands:
            raise Infeasible(f"traffic {t.id}: no switch can host {p} for stage {i + 1} (Eq.2/Eq.3)",
                             "Eq.2", t.id, i)
        stages.append(cands)
        node_costs.append(np.array(costs))
        node_slots.append(slots)
    stages.append([t.egress])
    node_costs.append(np.zeros(1))
    node_slots.append({})

    bw = t.bandwidth_mbps
    residual = np.array([state.link_residual(k) for k in r.links]) if r.links else np.zeros(0)
    bad = np.flatnonzero(residual + EPS < bw)
    blocked = r.incidence[bad].any(axis=0) if bad.size else None
    per_stage_budget = t.delay_budget_ms / (l + 1)
    unit = weights.gamma * bw * weights.sigma
    rate = weights.lam * t.penalty_rate

    graph = MultiStageGraph(t, stages, [None, *t.chain, None], node_costs, [], node_slots)
    for i in range(l + 1):
        src = [r.index[s] for s in stages[i]]
        dst = [r.index[s] for s in stages[i + 1]]
        proc = aug.catalog[t.chain[i]].proc_delay_ms if i < l else 0.0
        terms = (unit, rate, proc, per_stage_budget)
        hops = r.hops[np.ix_(src, dst)].copy()
        delay = r.delay[np.ix_(src, dst)].copy()
        pending = set()
        if blocked is not None:
            sub = blocked[np.ix_(src, dst)]
            # No detour has fewer hops than the fewest-hop path or less
            # delay than the min-delay path, so these bound the true cost.
            hops[sub] = r.min_hops[np.ix_(src, dst)][sub]
            pending = set(zip(*(idx.tolist() for idx in np.nonzero(sub))))
        graph.edge_costs.append(_edge_cost(hops, delay, *terms))
        graph.edge_paths.append({})
        graph.pending.append(pending)
        graph.edge_terms.append(terms)
    if not options.lazy_paths:
        for i, pending in enumerate(graph.pending):
            for a, b in sorted(pending):
                resolve_transition(graph, state, i, a, b, options.k_paths)
    return graph


def _edge_cost(hops, delay, unit, rate, proc, share):
    with np.errstate(invalid="ignore"):
        cost = unit * hops + rate * np.maximum(0.0, delay + proc - share)
    return np.where(np.isfinite(hops), cost, INF)


def resolve_transition(graph: MultiStageGraph, state: NetworkState, i: int, a: int, b: int, k: int) -> None:
    """Replace the bound on a blocked transition by the cost of its first fitting alternative path."""
    r = routing_for(state.aug.topology)
    u, v = graph.stages[i][a], graph.stages[i + 1][b]
    cost = INF
    path = r.first_fitting(r.index[u], r.index[v], k, lambda p: state.path_fits(p, graph.traffic.bandwidth_mbps))
    if path is not None:
        cost = float(_edge_cost(np.float64(len(path) - 1), np.float64(r.path_delay(path)), *graph.edge_terms[i]))
        graph.edge_paths[i][(u, v)] = path
    graph.edge_costs[i][a, b] = cost
    graph.pending[i].discard((a, b))


def solve_stage_graph(graph: MultiStageGraph, state: NetworkState, options: HeuristicOptions):
    """Viterbi pass, re-run until every transition on the chosen path is exactly priced."""
    while True:
        tables, choice, total = viterbi(graph, options.counter)
        if choice is None:
            return tables, None, INF
        stale = [(i, choice[i], choice[i + 1]) for i in range(len(choice) - 1)
                 if (choice[i], choice[i + 1]) in graph.pending[i]]
        if not stale:
            return tables, choice, total
        for i, a, b in stale:
            resolve_transition(graph, state, i, a, b, options.k_paths)


# --- provisioning -----------------------------------------------------------------

@dataclass
class TrafficResult:
    traffic: TrafficRequest
    state: NetworkState
    placement: list[tuple[int, str, str]]   # (stage, switch, slot id); stage 2 is the first VNF
    segments: list[tuple[str, ...]]
    breakdown: CostBreakdown
    graph: MultiStageGraph | None = None
    tables: ViterbiTables | None = None
    path_cost: float = 0.0

    @property
    def route(self) -> list[tuple[str, str]]:
        hops = []
        for seg in self.segments:
            hops.extend(zip(seg, seg[1:]))
        return hops


def _pick_path(state: NetworkState, r: Routing, a: str, b: str, bw: float, k: int):
    return r.first_fitting(r.index[a], r.index[b], k, lambda p: state.path_fits(p, bw))


class _Conflict(Exception):
    def __init__(self, stage: int, switch: str):
        self.where = (stage, switch)


def _commit(state, t, switches, weights, options):
    """Debit the chosen stage sequence; raise :class:`_Conflict` naming a stage that does not fit."""
    new = state.copy()
    new.traffics[t.id] = t
    placement = []
    for i, p in enumerate(t.chain, start=1):
        sid, _ = choose_slot(new, switches[i], p, t.bandwidth_mbps, weights)
        if sid is None:
            raise _Conflict(i, switches[i])
        new.place(t, i, sid)
        placement.append((i + 1, switches[i], sid))
    r = routing_for(state.aug.topology)
    segments = []
    for e in range(len(t.chain) + 1):
        path = _pick_path(new, r, switches[e], switches[e + 1], t.bandwidth_mbps, options.k_paths)
        if path is None:
            # Blame the downstream VNF stage when there is one to move.
            raise _Conflict(*((e + 1, switches[e + 1]) if e < len(t.chain) else (e, switches[e])))
        new.route(t, e, path)
        segments.append(path)
    return new, placement, segments


def provision_traffic(state: NetworkState, t: TrafficRequest, weights: CostWeights | None = None,
                      options: HeuristicOptions | None = None) -> TrafficResult:
    """Place and route one traffic on a copy of ``state``.

    Raises :class:`Infeasible` if some stage has no candidate, no finite
    path through the stage graph exists, or committing the chosen path
    runs out of capacity.
    """
    weights = weights or CostWeights()
    options = options or HeuristicOptions()
    if t.id in state.traffics:
        raise ValueError(f"traffic {t.id} is already provisioned")
    banned: set[tuple[int, str]] = set()
    while True:
        graph = build_stage_costs(state, t, weights, options, frozenset(banned))
        tables, choice, total = solve_stage_graph(graph, state, options)
        if choice is None:
            tag = "Eq.3" if banned else "Eq.8"
            raise Infeasible(f"traffic {t.id}: no stage sequence fits the residual capacities ({tag})", tag, t.id)
        switches = [graph.stages[i][j] for i, j in enumerate(choice)]
        try:
            new, placement, segments = _commit(state, t, switches, weights, options)
            break
        except _Conflict as conflict:
            # Every stage is priced against the same residual state, so two
            # stages of one chain can jointly overdraw a server or link.
            # Drop the stage that no longer fits and search again.
            stage = conflict.where[0]
            if not 1 <= stage <= len(t.chain) or conflict.where in banned:
                raise Infeasible(f"traffic {t.id}: no path with {t.bandwidth_mbps:g} Mbps left between "
                                 f"consecutive stages (Eq.8)", "Eq.8", t.id, stage) from None
            banned.add(conflict.where)
    breakdown = evaluate_event(state, new, [t.id], weights)
    return TrafficResult(t, new, placement, segments, breakdown, graph, tables, total)


@dataclass
class BatchResult:
    state: NetworkState
    results: dict[str, TrafficResult]
    failures: dict[str, Infeasible]
    breakdown: CostBreakdown


def provision_batch(state: NetworkState, batch, weights: CostWeights | None = None,
                    options: HeuristicOptions | None = None) -> BatchResult:
    """Provision traffics one after another; failures leave earlier ones in place."""
    weights = weights or CostWeights()
    current = state
    results = {}
    failures = {}
    for t in batch:
        try:
            res = provision_traffic(current, t, weights, options)
        except Infeasible as exc:
            failures[t.id] = exc
            continue
        results[t.id] = res
        current = res.state
    if current is state:
        current = state.copy()
    breakdown = evaluate_event(state, current, list(results), weights)
    return BatchResult(current, results, failures, breakdown)
