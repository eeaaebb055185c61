"""Physical network, VNF catalog and traffic request types.

Everything here is immutable once built. Loaders validate their input and
raise :class:`ModelError` (or its subclass :class:`ParseError`) with enough
context to locate the offending field.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import networkx as nx

DEFAULT_RESOURCE = "cpu_cores"


class ModelError(ValueError):
    """An input violates a structural invariant."""


class ParseError(ModelError):
    """An input document could not be parsed."""


def link_key(u: str, v: str) -> tuple[str, str]:
    """Canonical key of the undirected link between ``u`` and ``v``."""
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Link:
    u: str
    v: str
    bandwidth_mbps: float
    delay_ms: float

    @property
    def key(self) -> tuple[str, str]:
        return link_key(self.u, self.v)


@dataclass(frozen=True)
class ServerSpec:
    """A commodity server hanging off one switch.

    ``energy`` maps a resource kind to ``(idle_w, peak_w)``.
    """

    id: str
    attached_to: str
    capacity: Mapping[str, float]
    energy: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.capacity:
            raise ModelError(f"server {self.id}: no resource capacity declared")
        for kind, amount in self.capacity.items():
            if not amount > 0:
                raise ModelError(f"server {self.id}: capacity[{kind}] must be > 0, got {amount}")
        for kind, (idle, peak) in self.energy.items():
            if not (0 <= idle <= peak):
                raise ModelError(
                    f"server {self.id}: energy[{kind}] needs 0 <= idle_w <= peak_w, got {idle}, {peak}"
                )


@dataclass(frozen=True)
class Topology:
    switches: tuple[str, ...]
    links: tuple[Link, ...]
    servers: tuple[ServerSpec, ...]

    def __post_init__(self):
        declared = set(self.switches)
        if len(declared) != len(self.switches):
            raise ModelError("duplicate switch id")
        seen = set()
        for link in self.links:
            for end in (link.u, link.v):
                if end not in declared:
                    raise ModelError(f"link {link.u}-{link.v} references unknown switch {end}")
            if link.u == link.v:
                raise ModelError(f"self-loop on switch {link.u}")
            if link.key in seen:
                raise ModelError(f"duplicate link {link.u}-{link.v}")
            seen.add(link.key)
            if not link.bandwidth_mbps > 0:
                raise ModelError(f"link {link.u}-{link.v}: bandwidth_mbps must be > 0")
            if not link.delay_ms >= 0:
                raise ModelError(f"link {link.u}-{link.v}: delay_ms must be >= 0")
        ids = set()
        for server in self.servers:
            if server.id in ids:
                raise ModelError(f"duplicate server id {server.id}")
            ids.add(server.id)
            if server.attached_to not in declared:
                raise ModelError(f"server {server.id} attached to unknown switch {server.attached_to}")

    @cached_property
    def graph(self) -> nx.Graph:
        # sorted insertion keeps networkx traversal order reproducible
        g = nx.Graph()
        g.add_nodes_from(sorted(self.switches))
        for link in sorted(self.links, key=lambda l: l.key):
            g.add_edge(link.u, link.v, delay=link.delay_ms, bandwidth=link.bandwidth_mbps)
        return g

    @cached_property
    def link_map(self) -> dict[tuple[str, str], Link]:
        return {link.key: link for link in self.links}

    @cached_property
    def server_map(self) -> dict[str, ServerSpec]:
        return {s.id: s for s in self.servers}

    @cached_property
    def attachment(self) -> dict[str, str]:
        return {s.id: s.attached_to for s in self.servers}

    @cached_property
    def resource_kinds(self) -> frozenset[str]:
        kinds = set()
        for s in self.servers:
            kinds.update(s.capacity)
        return frozenset(kinds) or frozenset({DEFAULT_RESOURCE})

    def link(self, u: str, v: str) -> Link:
        return self.link_map[link_key(u, v)]

    def has_link(self, u: str, v: str) -> bool:
        return link_key(u, v) in self.link_map

    def servers_at(self, switch: str) -> list[ServerSpec]:
        return sorted((s for s in self.servers if s.attached_to == switch), key=lambda s: s.id)


def neighbors(topology: Topology, switch: str) -> set[str]:
    if switch not in topology.graph:
        raise ModelError(f"unknown switch {switch}")
    return set(topology.graph.neighbors(switch))


@dataclass(frozen=True)
class VnfType:
    id: str
    deploy_cost: float
    requirements: Mapping[str, float]
    capacity_mbps: float
    proc_delay_ms: float = 0.0
    allowed_servers: frozenset[str] | None = None  # None means any server

    def __post_init__(self):
        if not self.capacity_mbps > 0:
            raise ModelError(f"vnf {self.id}: capacity_mbps must be > 0")
        if self.deploy_cost < 0 or self.proc_delay_ms < 0:
            raise ModelError(f"vnf {self.id}: deploy_cost and proc_delay_ms must be >= 0")
        for kind, amount in self.requirements.items():
            if amount < 0:
                raise ModelError(f"vnf {self.id}: requirement[{kind}] must be >= 0")
        if self.allowed_servers is not None and not self.allowed_servers:
            raise ModelError(f"vnf {self.id}: empty allowed_servers makes the type unplaceable")

    def allows(self, server_id: str) -> bool:
        return self.allowed_servers is None or server_id in self.allowed_servers


@dataclass(frozen=True)
class VnfCatalog:
    types: Mapping[str, VnfType]

    def __getitem__(self, type_id: str) -> VnfType:
        return self.types[type_id]

    def __contains__(self, type_id: str) -> bool:
        return type_id in self.types

    def __iter__(self):
        return iter(sorted(self.types))

    def __len__(self):
        return len(self.types)

    @classmethod
    def of(cls, types: Iterable[VnfType]) -> "VnfCatalog":
        table = {}
        for t in types:
            if t.id in table:
                raise ModelError(f"duplicate vnf type {t.id}")
            table[t.id] = t
        return cls(table)


def check_catalog(catalog: VnfCatalog, topology: Topology) -> None:
    """Cross-check a catalog against the servers of a topology."""
    kinds = topology.resource_kinds
    servers = set(topology.server_map)
    for vnf in catalog.types.values():
        for kind in vnf.requirements:
            if kind not in kinds:
                raise ModelError(f"vnf {vnf.id}: resource kind {kind} not offered by any server")
        if vnf.allowed_servers is not None:
            unknown = sorted(vnf.allowed_servers - servers)
            if unknown:
                raise ModelError(f"vnf {vnf.id}: allowed_servers names unknown server {unknown[0]}")


@dataclass(frozen=True)
class TrafficRequest:
    id: str
    ingress: str
    egress: str
    chain: tuple[str, ...]
    bandwidth_mbps: float
    delay_budget_ms: float
    penalty_rate: float = 0.0  # dollars per ms over budget
    arrival_batch: int = 0

    def __post_init__(self):
        if not self.bandwidth_mbps > 0:
            raise ModelError(f"traffic {self.id}: bandwidth_mbps must be > 0")
        if not self.delay_budget_ms > 0:
            raise ModelError(f"traffic {self.id}: delay_budget_ms must be > 0")
        if self.penalty_rate < 0:
            raise ModelError(f"traffic {self.id}: penalty_rate must be >= 0")


def check_traffic(t: TrafficRequest, topology: Topology, catalog: VnfCatalog) -> None:
    for end in (t.ingress, t.egress):
        if end not in topology.graph:
            raise ModelError(f"traffic {t.id}: unknown switch {end}")
    for p in t.chain:
        if p not in catalog:
            raise ModelError(f"traffic {t.id}: unknown vnf type {p}")


@dataclass(frozen=True)
class TrafficNode:
    index: int
    kind: str  # "ingress", "vnf" or "egress"
    vnf_type: str | None = None
    switch: str | None = None  # fixed only for ingress/egress


@dataclass(frozen=True)
class TrafficGraph:
    traffic_id: str
    nodes: tuple[TrafficNode, ...]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, i + 1) for i in range(len(self.nodes) - 1)]

    def successors(self, index: int) -> set[int]:
        return {index + 1} if index + 1 < len(self.nodes) else set()

    @property
    def chain_nodes(self) -> tuple[TrafficNode, ...]:
        return self.nodes[1:-1]


def build_traffic_graph(t: TrafficRequest) -> TrafficGraph:
    nodes = [TrafficNode(0, "ingress", switch=t.ingress)]
    nodes += [TrafficNode(i + 1, "vnf", vnf_type=p) for i, p in enumerate(t.chain)]
    nodes.append(TrafficNode(len(t.chain) + 1, "egress", switch=t.egress))
    return TrafficGraph(t.id, tuple(nodes))


# --- documents -------------------------------------------------------------

def _parse_json(document, what: str):
    if isinstance(document, Mapping) or isinstance(document, list):
        return document
    try:
        return json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _number(obj: Mapping, key: str, where: str) -> float:
    if key not in obj:
        raise ParseError(f"{where}: missing field '{key}'")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ParseError(f"{where}.{key}: expected a finite number, got {value!r}")
    return float(value)


def _field(obj: Mapping, key: str, where: str):
    if not isinstance(obj, Mapping):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        raise ParseError(f"{where}: missing field '{key}'")
    return obj[key]


def load_topology(document) -> Topology:
    """Build a :class:`Topology` from JSON text or an already-decoded mapping."""
    doc = _parse_json(document, "topology")
    switches = _field(doc, "switches", "topology")
    if not isinstance(switches, list):
        raise ParseError("topology.switches: expected a list")
    links = []
    for i, item in enumerate(_field(doc, "links", "topology")):
        where = f"links[{i}]"
        links.append(
            Link(
                str(_field(item, "u", where)),
                str(_field(item, "v", where)),
                _number(item, "bandwidth_mbps", where),
                _number(item, "delay_ms", where),
            )
        )
    servers = []
    for i, item in enumerate(_field(doc, "servers", "topology")):
        where = f"servers[{i}]"
        capacity = {str(k): _number(_field(item, "capacity", where), k, f"{where}.capacity")
                    for k in _field(item, "capacity", where)}
        energy = {}
        for kind, spec in (item.get("energy") or {}).items():
            w = f"{where}.energy.{kind}"
            energy[str(kind)] = (_number(spec, "idle_w", w), _number(spec, "peak_w", w))
        servers.append(ServerSpec(str(_field(item, "id", where)), str(_field(item, "attached_to", where)),
                                  capacity, energy))
    return Topology(tuple(str(s) for s in switches), tuple(links), tuple(servers))


def dump_topology(topology: Topology) -> dict:
    return {
        "switches": sorted(topology.switches),
        "links": [
            {"u": l.u, "v": l.v, "bandwidth_mbps": l.bandwidth_mbps, "delay_ms": l.delay_ms}
            for l in sorted(topology.links, key=lambda l: l.key)
        ],
        "servers": [
            {
                "id": s.id,
                "attached_to": s.attached_to,
                "capacity": {k: s.capacity[k] for k in sorted(s.capacity)},
                "energy": {k: {"idle_w": s.energy[k][0], "peak_w": s.energy[k][1]} for k in sorted(s.energy)},
            }
            for s in sorted(topology.servers, key=lambda s: s.id)
        ],
    }


def canonical_topology(topology: Topology) -> Topology:
    """Same network with switches, links and servers in canonical order."""
    return load_topology(dump_topology(topology))


def read_topology(path) -> Topology:
    return load_topology(Path(path).read_text())


def load_catalog(document) -> VnfCatalog:
    doc = _parse_json(document, "catalog")
    if not isinstance(doc, list):
        raise ParseError("catalog: expected a list of vnf types")
    types = []
    for i, item in enumerate(doc):
        where = f"catalog[{i}]"
        allowed = item.get("allowed_servers", "any") if isinstance(item, Mapping) else None
        if allowed == "any":
            allowed_set = None
        elif isinstance(allowed, list):
            allowed_set = frozenset(str(a) for a in allowed)
        else:
            raise ParseError(f"{where}.allowed_servers: expected a list or \"any\"")
        reqs = _field(item, "requirements", where)
        types.append(
            VnfType(
                id=str(_field(item, "id", where)),
                deploy_cost=_number(item, "deploy_cost", where),
                requirements={str(k): _number(reqs, k, f"{where}.requirements") for k in reqs},
                capacity_mbps=_number(item, "capacity_mbps", where),
                proc_delay_ms=_number(item, "proc_delay_ms", where) if "proc_delay_ms" in item else 0.0,
                allowed_servers=allowed_set,
            )
        )
    return VnfCatalog.of(types)


def dump_catalog(catalog: VnfCatalog) -> list:
    out = []
    for type_id in catalog:
        t = catalog[type_id]
        out.append({
            "id": t.id,
            "deploy_cost": t.deploy_cost,
            "requirements": {k: t.requirements[k] for k in sorted(t.requirements)},
            "capacity_mbps": t.capacity_mbps,
            "proc_delay_ms": t.proc_delay_ms,
            "allowed_servers": "any" if t.allowed_servers is None else sorted(t.allowed_servers),
        })
    return out


def read_catalog(path) -> VnfCatalog:
    return load_catalog(Path(path).read_text())


TRAFFIC_HEADER = ["id", "arrival_batch", "ingress", "egress", "chain",
                  "bandwidth_mbps", "delay_budget_ms", "penalty_rate"]


def load_traffic(text: str) -> list[TrafficRequest]:
    """Parse the traffic CSV format; row numbers in errors are 1-based file lines."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    missing = [h for h in TRAFFIC_HEADER if h not in reader.fieldnames]
    if missing:
        raise ParseError(f"traffic: header missing column(s) {', '.join(missing)}")
    out = []
    for row in reader:
        line = reader.line_num
        try:
            chain = tuple(p for p in row["chain"].split("|") if p) if row["chain"] else ()
            out.append(
                TrafficRequest(
                    id=row["id"],
                    ingress=row["ingress"],
                    egress=row["egress"],
                    chain=chain,
                    bandwidth_mbps=float(row["bandwidth_mbps"]),
                    delay_budget_ms=float(row["delay_budget_ms"]),
                    penalty_rate=float(row["penalty_rate"]),
                    arrival_batch=int(row["arrival_batch"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(f"traffic: line {line}: {exc}") from None
    return out


def dump_traffic(requests: Iterable[TrafficRequest]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRAFFIC_HEADER)
    for t in requests:
        writer.writerow([t.id, t.arrival_batch, t.ingress, t.egress, "|".join(t.chain),
                         repr(t.bandwidth_mbps), repr(t.delay_budget_ms), repr(t.penalty_rate)])
    return buf.getvalue()


def read_traffic(path) -> list[TrafficRequest]:
    return load_traffic(Path(path).read_text())
