"""Exact batch provisioning by depth-first branch and bound.

The search fixes, traffic by traffic, one slot per chain node and one
simple path per traffic edge. Routes are enumerated exhaustively up to a
hop bound, so on small networks the result is the true optimum of the
weighted objective. Interchangeable inactive slots (same server, same
type) are only tried at their lowest index.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import islice

import networkx as nx

from .cost import CostBreakdown, CostWeights, evaluate_event, fragmentation_cost, server_watts, slot_watts
from .errors import Infeasible, LimitExceeded
from .model import TrafficRequest, link_key
from .state import Assignment, NetworkState, path_links

EPS = 1e-9


@dataclass
class ExactLimits:
    hop_bound: int | None = None  # None: number of switches
    max_nodes: int = 2_000_000
    max_routes: int = 5_000       # simple paths per switch pair
    time_budget: float | None = 300.0


@dataclass
class ExactResult:
    state: NetworkState
    breakdown: CostBreakdown
    assignment: Assignment
    nodes: int = 0
    elapsed_s: float = 0.0

    def __iter__(self):
        return iter((self.state, self.breakdown))


# --- feasibility --------------------------------------------------------------

def check_feasibility(state: NetworkState, assignment: Assignment) -> list[str]:
    """Violations of the provisioning constraints by ``state`` plus ``assignment``.

    Each entry starts with the constraint tag, e.g. ``"Eq.8: ..."``. An
    empty list means the combined provisioning is feasible.
    """
    aug = state.aug
    topo = aug.topology
    out = []
    placements = dict(state.placements)
    routes = dict(state.routes)
    traffics = dict(state.traffics)
    for t in assignment.traffics:
        if t.id in traffics:
            out.append(f"Eq.6: traffic {t.id} is already provisioned")
        traffics[t.id] = t
    for key, sid in assignment.placements.items():
        if key in state.placements and state.placements[key] != sid:
            out.append(f"Eq.6: node {key} moved from {state.placements[key]} to {sid}")
        placements[key] = sid
    for key, path in assignment.routes.items():
        if key in state.routes and tuple(state.routes[key]) != tuple(path):
            out.append(f"Eq.6: route of edge {key} changed")
        routes[key] = tuple(path)

    slot_load: dict[str, float] = {}
    link_load: dict[tuple[str, str], float] = {}
    for t in traffics.values():
        switches = [t.ingress]
        for i, p in enumerate(t.chain, start=1):
            sid = placements.get((t.id, i))
            if sid is None:
                out.append(f"Eq.5: node {i} of traffic {t.id} is not mapped to any slot")
                switches.append(None)
                continue
            if sid not in aug.slot_map:
                out.append(f"Eq.1: slot {sid} does not exist (type not allowed on that server?)")
                switches.append(None)
                continue
            m = aug.slot(sid)
            if m.vnf_type != p:
                out.append(f"Eq.4: node {i} of traffic {t.id} needs {p} but slot {sid} is {m.vnf_type}")
            slot_load[sid] = slot_load.get(sid, 0.0) + t.bandwidth_mbps
            switches.append(m.switch)
        switches.append(t.egress)
        for e in range(len(t.chain) + 1):
            path = routes.get((t.id, e))
            if path is None:
                out.append(f"Eq.9: edge {e} of traffic {t.id} has no route")
                continue
            a, b = switches[e], switches[e + 1]
            if not path:
                out.append(f"Eq.9: edge {e} of traffic {t.id} has an empty route")
                continue
            if (a is not None and path[0] != a) or (b is not None and path[-1] != b):
                out.append(f"Eq.9: edge {e} of traffic {t.id} runs {path[0]}->{path[-1]}, expected {a}->{b}")
            seen: dict[tuple[str, str], tuple[str, str]] = {}
            for u, v in zip(path, path[1:]):
                if not topo.has_link(u, v):
                    out.append(f"Eq.9: edge {e} of traffic {t.id} hops {u}->{v} without a link")
                    continue
                key = link_key(u, v)
                if key in seen:
                    tag = "Eq.7" if seen[key] != (u, v) else "Eq.9"
                    out.append(f"{tag}: edge {e} of traffic {t.id} uses link {u}-{v} twice")
                    continue
                seen[key] = (u, v)
                link_load[key] = link_load.get(key, 0.0) + t.bandwidth_mbps

    for sid in sorted(slot_load):
        if sid in aug.slot_map and slot_load[sid] > aug.capacity(sid) + EPS:
            out.append(f"Eq.2: slot {sid} carries {slot_load[sid]:g} Mbps > capacity {aug.capacity(sid):g}")
    used: dict[str, dict[str, float]] = {}
    for sid in slot_load:
        if sid not in aug.slot_map:
            continue
        m = aug.slot(sid)
        u = used.setdefault(m.server, {})
        for kind, need in aug.catalog[m.vnf_type].requirements.items():
            u[kind] = u.get(kind, 0.0) + need
    for server in sorted(used):
        cap = topo.server_map[server].capacity
        for kind, amount in sorted(used[server].items()):
            if amount > cap.get(kind, 0.0) + EPS:
                out.append(f"Eq.3: server {server} needs {amount:g} {kind} > capacity {cap.get(kind, 0.0):g}")
    for key in sorted(link_load):
        cap = topo.link_map[key].bandwidth_mbps
        if link_load[key] > cap + EPS:
            out.append(f"Eq.8: link {key[0]}-{key[1]} carries {link_load[key]:g} Mbps > capacity {cap:g}")
    return out


def check_state(state: NetworkState) -> list[str]:
    """Re-check a whole accumulated state from scratch."""
    return check_feasibility(NetworkState(state.aug), state.assignment())


def check_monotone(before: NetworkState, after: NetworkState) -> list[str]:
    out = []
    for key, sid in before.placements.items():
        if after.placements.get(key) != sid:
            out.append(f"Eq.6: placement {key} changed")
    for key, path in before.routes.items():
        if tuple(after.routes.get(key, ())) != tuple(path):
            out.append(f"Eq.6: route {key} changed")
    gone = before.active_slots - after.active_slots
    if gone:
        out.append(f"Eq.6: slot {sorted(gone)[0]} deactivated")
    return out


# --- search -------------------------------------------------------------------

@dataclass
class _Summary:
    """What is still undecided after some prefix of the decisions."""

    min_bw: dict[str, float] = field(default_factory=dict)  # vnf type -> smallest demand
    res_pot: dict[str, float] = field(default_factory=dict)  # resource kind -> max extra use
    bw_pot: float = 0.0


class _Search:
    def __init__(self, state: NetworkState, batch, weights: CostWeights, limits: ExactLimits):
        self.base = state
        self.aug = state.aug
        self.topo = self.aug.topology
        self.catalog = self.aug.catalog
        self.w = weights
        self.limits = limits
        self.batch = list(batch)
        ids = [t.id for t in self.batch]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate traffic id in batch")
        for t in self.batch:
            if t.id in state.traffics:
                raise ValueError(f"traffic {t.id} is already provisioned")
        g = self.topo.graph
        self.g = g
        self.hop_bound = limits.hop_bound if limits.hop_bound is not None else len(self.topo.switches)
        self.hops = dict(nx.all_pairs_shortest_path_length(g))
        self.dly = dict(nx.all_pairs_dijkstra_path_length(g, weight="delay"))
        self._paths: dict[tuple[str, str], list[tuple[str, ...]]] = {}

        self.work = state.copy()
        self.D = 0.0
        self.E = self._energy_of(self.work)
        self.F = 0.0
        self.delay = {t.id: 0.0 for t in self.batch}
        self.proc = {t.id: sum(self.catalog[p].proc_delay_ms for p in t.chain) for t in self.batch}
        self.nodes = 0
        self.started = time.monotonic()

        self.watts = {m.id: slot_watts(m, self.topo, self.catalog) for m in self.aug.slots}
        self.dynamic_watts = {m.id: self._dynamic_watts(m) for m in self.aug.slots}
        self.cands = {p: self.aug.switches_for(p) for p in self.catalog}
        self._suffix = {t.id: self._suffix_tables(t) for t in self.batch}

        self.decisions = []
        for t in self.batch:
            for i in range(1, len(t.chain) + 1):
                self.decisions.append(("slot", t, i))
                self.decisions.append(("route", t, i - 1))
            self.decisions.append(("route", t, len(t.chain)))
        self.summaries = [self._summary(self.decisions[d:]) for d in range(len(self.decisions) + 1)]

        self.best = math.inf
        self.best_key = None
        self.best_assignment: Assignment | None = None

    # -- static helpers --

    def _energy_of(self, state: NetworkState) -> float:
        if self.w.energy_mode == "per-slot":
            watts = sum(slot_watts(self.aug.slot(s), self.topo, self.catalog) for s in state.slot_load)
        else:
            watts = sum(server_watts(s, u, self.topo) for s, u in state.server_used.items())
        return watts * self.w.dollars_per_watt

    def _dynamic_watts(self, m) -> float:
        server = self.topo.server_map[m.server]
        reqs = self.catalog[m.vnf_type].requirements
        return sum((peak - idle) * reqs.get(kind, 0.0) / server.capacity[kind]
                   for kind, (idle, peak) in server.energy.items() if kind in server.capacity)

    def paths(self, a: str, b: str) -> list[tuple[str, ...]]:
        key = (a, b)
        if key not in self._paths:
            if a == b:
                found = [(a,)]
            else:
                gen = nx.all_simple_paths(self.g, a, b, cutoff=self.hop_bound)
                found = [tuple(p) for p in islice(gen, self.limits.max_routes + 1)]
                if len(found) > self.limits.max_routes:
                    raise LimitExceeded(f"more than {self.limits.max_routes} routes between {a} and {b}")
                found.sort(key=lambda p: (len(p), self._path_delay(p), p))
            self._paths[key] = found
        return self._paths[key]

    def _path_delay(self, path) -> float:
        return sum(self.g[u][v]["delay"] for u, v in zip(path, path[1:]))

    def _stage_sets(self, t: TrafficRequest) -> list[list[str]]:
        return [[t.ingress]] + [self.cands[p] for p in t.chain] + [[t.egress]]

    def _suffix_tables(self, t: TrafficRequest):
        """Cheapest hop count and delay from each stage candidate to the egress."""
        stages = self._stage_sets(t)
        last = len(stages) - 1
        suf_h = [dict() for _ in stages]
        suf_d = [dict() for _ in stages]
        suf_h[last] = {t.egress: 0.0}
        suf_d[last] = {t.egress: 0.0}
        for i in range(last - 1, -1, -1):
            for s in stages[i]:
                hs = self.hops.get(s, {})
                ds = self.dly.get(s, {})
                suf_h[i][s] = min((hs.get(n, math.inf) + suf_h[i + 1][n] for n in stages[i + 1]), default=math.inf)
                suf_d[i][s] = min((ds.get(n, math.inf) + suf_d[i + 1][n] for n in stages[i + 1]), default=math.inf)
        return suf_h, suf_d

    def _summary(self, decisions) -> _Summary:
        s = _Summary()
        for kind, t, idx in decisions:
            if kind == "slot":
                p = t.chain[idx - 1]
                s.min_bw[p] = min(s.min_bw.get(p, math.inf), t.bandwidth_mbps)
                for r, need in self.catalog[p].requirements.items():
                    s.res_pot[r] = s.res_pot.get(r, 0.0) + need
            else:
                s.bw_pot += t.bandwidth_mbps
        return s

    # -- mutation with undo --

    def place(self, t, i, sid):
        w = self.work
        m = self.aug.slot(sid)
        newly = sid not in w.slot_load
        was_active = m.server in w.server_used
        undo = ("slot", t, i, sid, self.D, self.E, newly, dict(w.server_used.get(m.server, {})), was_active)
        before = 0.0
        if newly:
            self.D += self.catalog[m.vnf_type].deploy_cost
            if self.w.energy_mode == "per-slot":
                self.E += self.watts[sid] * self.w.dollars_per_watt
            elif was_active:
                before = server_watts(m.server, w.server_used[m.server], self.topo)
        w.place(t, i, sid)
        if newly and self.w.energy_mode != "per-slot":
            self.E += (server_watts(m.server, w.server_used[m.server], self.topo) - before) * self.w.dollars_per_watt
        return undo

    def route(self, t, e, path):
        w = self.work
        keys = path_links(path)
        undo = ("route", t, e, path, self.F, self.delay[t.id], {k: w.link_load.get(k) for k in keys})
        self.F += t.bandwidth_mbps * len(keys) * self.w.sigma
        self.delay[t.id] += self._path_delay(path)
        w.route(t, e, path)
        return undo

    def undo(self, rec):
        w = self.work
        if rec[0] == "slot":
            _, t, i, sid, D, E, newly, used, was_active = rec
            self.D, self.E = D, E
            del w.placements[(t.id, i)]
            if newly:
                del w.slot_load[sid]
                server = self.aug.slot(sid).server
                if was_active:
                    w.server_used[server] = used
                else:
                    del w.server_used[server]
            else:
                w.slot_load[sid] -= t.bandwidth_mbps
        else:
            _, t, e, path, F, delay, loads = rec
            self.F = F
            self.delay[t.id] = delay
            del w.routes[(t.id, e)]
            for k, v in loads.items():
                if v is None:
                    del w.link_load[k]
                else:
                    w.link_load[k] = v

    # -- bounds --

    def _remaining(self, t: TrafficRequest) -> tuple[float, float]:
        """Lower bounds on hops and delay still to be routed for ``t``."""
        l = len(t.chain)
        w = self.work
        if (t.id, l) in w.routes:
            return 0.0, 0.0
        suf_h, suf_d = self._suffix[t.id]
        fixed = {i: self.aug.slot(w.placements[(t.id, i)]).switch
                 for i in range(1, l + 1) if (t.id, i) in w.placements}
        routed = {e for e in range(l + 1) if (t.id, e) in w.routes}
        last = max([i for i in fixed] + [e + 1 for e in routed] + [0])
        if last == 0:
            return suf_h[0][t.ingress], suf_d[0][t.ingress]
        stages = self._stage_sets(t)
        cur_h = {t.ingress: 0.0}
        cur_d = {t.ingress: 0.0}
        for i in range(1, last + 1):
            nxt = [fixed[i]] if i in fixed else stages[i]
            free = (i - 1) in routed
            nh, nd = {}, {}
            for n in nxt:
                if free:
                    nh[n] = min(cur_h.values())
                    nd[n] = min(cur_d.values())
                else:
                    nh[n] = min(h + self.hops.get(s, {}).get(n, math.inf) for s, h in cur_h.items())
                    nd[n] = min(d + self.dly.get(s, {}).get(n, math.inf) for s, d in cur_d.items())
            cur_h, cur_d = nh, nd
        rh = min(h + suf_h[last].get(s, math.inf) for s, h in cur_h.items())
        rd = min(d + suf_d[last].get(s, math.inf) for s, d in cur_d.items())
        return rh, rd

    def _open_cost(self, p: str, min_bw: float) -> float:
        """Cheapest way to host one more node of type ``p`` (0 if an active slot has room)."""
        w = self.work
        for m in self.aug.by_type[p]:
            if m.id in w.slot_load and w.slot_residual(m.id) + EPS >= min_bw:
                return 0.0
        best = math.inf
        seen = set()
        vnf = self.catalog[p]
        if vnf.capacity_mbps + EPS < min_bw:
            return math.inf
        for m in self.aug.by_type[p]:
            if m.server in seen or m.id in w.slot_load or not w.can_open(m.id):
                continue
            seen.add(m.server)
            if self.w.energy_mode == "per-slot":
                de = self.watts[m.id]
            else:
                # idle is left out: another type may switch the server on first
                de = self.dynamic_watts[m.id]
            best = min(best, self.w.alpha * vnf.deploy_cost + self.w.beta * de * self.w.dollars_per_watt)
        return best

    def bound(self, summary: _Summary) -> float:
        wt = self.w
        w = self.work
        lb = wt.alpha * self.D + wt.beta * self.E + wt.gamma * self.F
        for t in self.batch:
            rh, rd = self._remaining(t)
            if math.isinf(rh) or math.isinf(rd):
                return math.inf
            lb += wt.gamma * wt.sigma * t.bandwidth_mbps * rh
            lb += wt.lam * t.penalty_rate * max(0.0, self.delay[t.id] + rd + self.proc[t.id] - t.delay_budget_ms)
        for p, bw in summary.min_bw.items():
            c = self._open_cost(p, bw)
            if math.isinf(c):
                return math.inf
            lb += c
        if wt.mu > 0:
            frag = 0.0
            for server, used in w.server_used.items():
                for kind, cap in self.topo.server_map[server].capacity.items():
                    idle = cap - used.get(kind, 0.0) - summary.res_pot.get(kind, 0.0)
                    if idle > 0:
                        frag += idle * wt.price(kind)
            for key, load in w.link_load.items():
                if load > 0:
                    idle = self.topo.link_map[key].bandwidth_mbps - load - summary.bw_pot
                    if idle > 0:
                        frag += idle * wt.bandwidth_price
            lb += wt.mu * frag
        return lb

    def objective(self) -> float:
        wt = self.w
        pen = sum(t.penalty_rate * max(0.0, self.delay[t.id] + self.proc[t.id] - t.delay_budget_ms)
                  for t in self.batch)
        return (wt.alpha * self.D + wt.beta * self.E + wt.gamma * self.F + wt.lam * pen
                + wt.mu * fragmentation_cost(self.work, wt))

    # -- candidates --

    def slot_candidates(self, t: TrafficRequest, i: int) -> list[str]:
        w = self.work
        p = t.chain[i - 1]
        out = []
        opened_servers = set()
        for m in self.aug.by_type[p]:
            if m.id in w.slot_load:
                if w.slot_residual(m.id) + EPS >= t.bandwidth_mbps:
                    out.append(m)
            elif m.server not in opened_servers:
                # lowest inactive index per server stands for all of them
                opened_servers.add(m.server)
                if self.catalog[p].capacity_mbps + EPS >= t.bandwidth_mbps and w.can_open(m.id):
                    out.append(m)
        prev = w.node_switch(t.id, i - 1) if i > 1 else t.ingress
        unit = self.w.gamma * self.w.sigma * t.bandwidth_mbps

        def order(m):
            fresh = m.id not in w.slot_load
            c = self.w.alpha * self.catalog[p].deploy_cost + self.w.beta * self.watts[m.id] if fresh else 0.0
            return (c + unit * self.hops[prev].get(m.switch, math.inf), m.sort_key)

        return [m.id for m in sorted(out, key=order)]

    def route_candidates(self, t: TrafficRequest, e: int) -> list[tuple[str, ...]]:
        w = self.work
        # node_switch needs the traffic registered; the search keeps it registered while open
        a = w.node_switch(t.id, e)
        b = w.node_switch(t.id, e + 1)
        return [p for p in self.paths(a, b) if w.path_fits(p, t.bandwidth_mbps)]

    # -- driver --

    def key(self):
        slots = []
        routes = []
        for t in self.batch:
            for i in range(1, len(t.chain) + 1):
                slots.append(self.aug.slot(self.work.placements[(t.id, i)]).sort_key)
            for e in range(len(t.chain) + 1):
                routes.append(self.work.routes[(t.id, e)])
        return tuple(slots), tuple(routes)

    def offer(self, total: float, key, assignment_fn):
        tol = EPS * max(1.0, abs(self.best)) if math.isfinite(self.best) else 0.0
        if self.best_key is None or total < self.best - tol:
            self.best, self.best_key = total, key
        elif abs(total - self.best) <= tol and key < self.best_key:
            self.best, self.best_key = min(total, self.best), key
        else:
            return
        self.best_assignment = assignment_fn()

    def snapshot(self) -> Assignment:
        w = self.work
        placements = {(t.id, i): w.placements[(t.id, i)] for t in self.batch for i in range(1, len(t.chain) + 1)}
        routes = {(t.id, e): w.routes[(t.id, e)] for t in self.batch for e in range(len(t.chain) + 1)}
        return Assignment(list(self.batch), placements, routes)

    def tick(self):
        self.nodes += 1
        if self.nodes > self.limits.max_nodes:
            raise LimitExceeded(f"search exceeded {self.limits.max_nodes} nodes")
        if self.limits.time_budget is not None and self.nodes % 512 == 0:
            if time.monotonic() - self.started > self.limits.time_budget:
                raise LimitExceeded(f"search exceeded {self.limits.time_budget} s")

    def run(self, prune: bool = True):
        for t in self.batch:
            self.work.traffics[t.id] = t
        self._dfs(0, prune)
        for t in self.batch:
            del self.work.traffics[t.id]

    def _dfs(self, d: int, prune: bool):
        self.tick()
        if prune:
            lb = self.bound(self.summaries[d])
            if math.isinf(lb):
                return
            if math.isfinite(self.best) and lb > self.best + EPS * max(1.0, abs(self.best)):
                return
        if d == len(self.decisions):
            self.offer(self.objective(), self.key(), self.snapshot)
            return
        kind, t, idx = self.decisions[d]
        if kind == "slot":
            for sid in self.slot_candidates(t, idx):
                rec = self.place(t, idx, sid)
                self._dfs(d + 1, prune)
                self.undo(rec)
        else:
            for path in self.route_candidates(t, idx):
                rec = self.route(t, idx, path)
                self._dfs(d + 1, prune)
                self.undo(rec)


def _diagnose(state: NetworkState, batch) -> Infeasible:
    aug = state.aug
    for t in batch:
        for i, p in enumerate(t.chain, start=1):
            ok = any((state.is_active(m.id) and state.slot_residual(m.id) + EPS >= t.bandwidth_mbps)
                     or (not state.is_active(m.id) and aug.catalog[p].capacity_mbps + EPS >= t.bandwidth_mbps
                         and state.can_open(m.id))
                     for m in aug.by_type[p])
            if not ok:
                return Infeasible(f"traffic {t.id}: no slot of type {p} can take {t.bandwidth_mbps:g} Mbps "
                                  f"(Eq.2/Eq.3)", "Eq.2", t.id, i)
        g = nx.Graph()
        g.add_nodes_from(aug.topology.switches)
        g.add_edges_from(k for k in aug.topology.link_map if state.link_residual(k) + EPS >= t.bandwidth_mbps)
        if not nx.has_path(g, t.ingress, t.egress):
            return Infeasible(f"traffic {t.id}: no path {t.ingress}->{t.egress} with {t.bandwidth_mbps:g} Mbps "
                              f"residual (Eq.8/Eq.9)", "Eq.8", t.id)
    return Infeasible("no joint assignment satisfies Eq.2-Eq.9 for the batch", "Eq.2-Eq.9")


def solve_exact(state: NetworkState, batch, weights: CostWeights | None = None,
                limits: ExactLimits | None = None, *, prune: bool = True,
                warm_start: bool = True) -> ExactResult:
    """Provision ``batch`` on top of ``state`` at minimum weighted cost.

    Raises :class:`Infeasible` when no assignment exists and
    :class:`LimitExceeded` when the search outgrows ``limits``; the
    result is never an approximation. ``warm_start`` seeds the incumbent
    with the heuristic's solution, which only speeds up pruning.
    """
    weights = weights or CostWeights()
    limits = limits or ExactLimits()
    batch = list(batch)
    started = time.monotonic()
    if not batch:
        return ExactResult(state.copy(), evaluate_event(state, state, [], weights), Assignment(), 0, 0.0)
    search = _Search(state, batch, weights, limits)
    if warm_start and prune:
        from .heuristic import provision_batch

        trial = provision_batch(state, batch, weights)
        in_space = all(len(path) - 1 <= search.hop_bound for path in trial.state.routes.values())
        if not trial.failures and in_space:
            assignment = Assignment(list(batch),
                                    {k: v for k, v in trial.state.placements.items() if k not in state.placements},
                                    {k: v for k, v in trial.state.routes.items() if k not in state.routes})
            for t in batch:
                search.work.traffics[t.id] = t
            recs = []
            for kind, t, idx in search.decisions:
                if kind == "slot":
                    recs.append(search.place(t, idx, assignment.placements[(t.id, idx)]))
                else:
                    recs.append(search.route(t, idx, assignment.routes[(t.id, idx)]))
            search.best = search.objective()
            search.best_key = search.key()
            search.best_assignment = assignment
            for rec in reversed(recs):
                search.undo(rec)
            for t in batch:
                del search.work.traffics[t.id]
    search.run(prune=prune)
    if search.best_assignment is None:
        raise _diagnose(state, batch)
    new_state = state.apply(search.best_assignment)
    breakdown = evaluate_event(state, new_state, [t.id for t in batch], weights)
    return ExactResult(new_state, breakdown, search.best_assignment, search.nodes, time.monotonic() - started)


def lower_bound(state: NetworkState, batch, partial: Assignment, weights: CostWeights | None = None,
                limits: ExactLimits | None = None) -> float:
    """Admissible bound on the cost of any completion of ``partial``.

    ``partial`` may fix any subset of chain-node slots and edge routes of
    the batch traffics, as long as every routed edge has both endpoints
    fixed.
    """
    weights = weights or CostWeights()
    search = _Search(state, batch, weights, limits or ExactLimits())
    for t in search.batch:
        search.work.traffics[t.id] = t
    remaining = []
    for kind, t, idx in search.decisions:
        if kind == "slot" and (t.id, idx) in partial.placements:
            search.place(t, idx, partial.placements[(t.id, idx)])
        elif kind == "route" and (t.id, idx) in partial.routes:
            search.route(t, idx, tuple(partial.routes[(t.id, idx)]))
        else:
            remaining.append((kind, t, idx))
    return search.bound(search._summary(remaining))
