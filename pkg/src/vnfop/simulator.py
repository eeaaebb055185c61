"""Trace replay: feed batches to a solver, thread the network state, record metrics."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import networkx as nx
import numpy as np

from .cost import COMPONENTS, CostBreakdown, CostWeights, evaluate_event
from .errors import Infeasible, LimitExceeded
from .exact import ExactLimits, solve_exact
from .heuristic import HeuristicOptions, provision_batch
from .model import (DEFAULT_RESOURCE, ParseError, Topology, TrafficRequest, VnfCatalog, check_traffic,
                    dump_traffic, load_traffic)
from .state import NetworkState
from .transform import enumerate_vnfs

SCHEMA_VERSION = 1
MODES = ("heuristic", "exact")


@dataclass(frozen=True)
class Batch:
    label: int
    requests: tuple[TrafficRequest, ...]


@dataclass(frozen=True)
class Trace:
    batches: tuple[Batch, ...] = ()

    def __post_init__(self):
        labels = [b.label for b in self.batches]
        if any(b <= a for a, b in zip(labels, labels[1:])):
            raise ValueError("batch labels must be strictly increasing")

    @classmethod
    def from_requests(cls, requests: Iterable[TrafficRequest]) -> "Trace":
        ordered = sorted(requests, key=lambda t: t.arrival_batch)
        return cls(tuple(Batch(k, tuple(g)) for k, g in groupby(ordered, key=lambda t: t.arrival_batch)))

    @property
    def requests(self) -> list[TrafficRequest]:
        return [t for b in self.batches for t in b.requests]

    def validate(self, topology: Topology, catalog: VnfCatalog) -> None:
        seen = set()
        for t in self.requests:
            if t.id in seen:
                raise ValueError(f"duplicate traffic id {t.id} in trace")
            seen.add(t.id)
            check_traffic(t, topology, catalog)


def load_trace(text: str) -> Trace:
    return Trace.from_requests(load_traffic(text))


def read_trace(path) -> Trace:
    return load_trace(Path(path).read_text())


def dump_trace(trace: Trace) -> str:
    return dump_traffic(trace.requests)


@dataclass(frozen=True)
class TrafficMetrics:
    traffic_id: str
    ingress_hops: tuple[int, ...]   # shortest hop distance ingress -> each VNF, in chain order
    egress_hops: tuple[int, ...]    # shortest hop distance each VNF -> egress
    path_hops: int
    shortest_hops: int

    @property
    def stretch(self) -> float:
        # A request whose ingress is its egress has no shortest path to
        # stretch; count hops taken on top of staying put.
        if self.shortest_hops == 0:
            return 1.0 + self.path_hops
        return self.path_hops / self.shortest_hops


@dataclass
class MetricsRecord:
    label: int
    breakdown: CostBreakdown
    utilization: float
    active_servers: int
    traffics: list[TrafficMetrics] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)
    wall_s: float = 0.0


def server_utilization(state: NetworkState) -> float:
    """Mean fraction of CPU in use over active servers (0 with none active)."""
    fracs = []
    for server_id in sorted(state.server_used):
        spec = state.aug.topology.server_map[server_id]
        used = state.server_used[server_id]
        kinds = [DEFAULT_RESOURCE] if DEFAULT_RESOURCE in spec.capacity else sorted(spec.capacity)
        fracs.append(float(np.mean([used.get(k, 0.0) / spec.capacity[k] for k in kinds])))
    return float(np.mean(fracs)) if fracs else 0.0


def traffic_metrics(state: NetworkState, traffic_id: str, hop_table) -> TrafficMetrics:
    t = state.traffics[traffic_id]
    sites = [state.node_switch(traffic_id, i) for i in range(1, len(t.chain) + 1)]
    return TrafficMetrics(
        traffic_id,
        tuple(hop_table[t.ingress][s] for s in sites),
        tuple(hop_table[s][t.egress] for s in sites),
        len(state.traffic_route(traffic_id)),
        hop_table[t.ingress][t.egress],
    )


def _solve(state, batch, weights, mode, options, limits):
    if mode == "heuristic":
        res = provision_batch(state, batch, weights, options)
        failures = {tid: f"{exc.constraint}: {exc.reason}" if exc.constraint else exc.reason
                    for tid, exc in res.failures.items()}
        return res.state, res.breakdown, sorted(res.results), failures
    try:
        res = solve_exact(state, batch, weights, limits)
    except (Infeasible, LimitExceeded) as exc:
        # The batch is solved jointly, so it fails as a whole.
        tag = getattr(exc, "constraint", "") or type(exc).__name__
        return state, evaluate_event(state, state, [], weights), [], {t.id: f"{tag}: {exc}" for t in batch}
    return res.state, res.breakdown, sorted(t.id for t in batch), {}


def replay(trace: Trace, topology: Topology, catalog: VnfCatalog, weights: CostWeights | None = None,
           mode: str = "heuristic", options: HeuristicOptions | None = None,
           limits: ExactLimits | None = None,
           state: NetworkState | None = None) -> Iterator[tuple[MetricsRecord, NetworkState]]:
    """Yield ``(record, state after the batch)`` for each batch of ``trace``."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    weights = weights or CostWeights()
    trace.validate(topology, catalog)
    if state is None:
        state = NetworkState(enumerate_vnfs(topology, catalog))
    hop_table = dict(nx.all_pairs_shortest_path_length(topology.graph))
    for batch in trace.batches:
        started = time.monotonic()
        state, breakdown, done, failures = _solve(state, list(batch.requests), weights, mode, options, limits)
        wall = time.monotonic() - started
        record = MetricsRecord(
            batch.label, breakdown, server_utilization(state), len(state.server_used),
            [traffic_metrics(state, tid, hop_table) for tid in done], failures, wall,
        )
        yield record, state


def run(trace: Trace, topology: Topology, catalog: VnfCatalog, weights: CostWeights | None = None,
        mode: str = "heuristic", options: HeuristicOptions | None = None,
        limits: ExactLimits | None = None) -> list[MetricsRecord]:
    return [rec for rec, _ in replay(trace, topology, catalog, weights, mode, options, limits)]


# --- analysis -----------------------------------------------------------------

def _ratio(a: float, b: float) -> float:
    if b == 0:
        return 1.0 if a == 0 else math.inf
    return a / b


def compare(metrics_a: Sequence[MetricsRecord], metrics_b: Sequence[MetricsRecord]) -> list[dict]:
    """Per-batch ratios ``a / b`` of every cost component (0/0 counts as 1)."""
    if len(metrics_a) != len(metrics_b):
        raise ValueError(f"series lengths differ: {len(metrics_a)} vs {len(metrics_b)}")
    out = []
    for ra, rb in zip(metrics_a, metrics_b):
        if ra.label != rb.label:
            raise ValueError(f"label mismatch: {ra.label} vs {rb.label}")
        row = {"label": ra.label}
        for name in COMPONENTS + ("total",):
            row[name] = _ratio(getattr(ra.breakdown, name), getattr(rb.breakdown, name))
        out.append(row)
    return out


@dataclass(frozen=True)
class HopCdf:
    ingress: tuple[float, ...]   # ingress[k]: fraction of VNFs within k hops of their ingress
    egress: tuple[float, ...]


def cumulative_fractions(values: list[int]) -> tuple[float, ...]:
    if not values:
        return ()
    counts = np.bincount(values)
    return tuple(float(x) for x in np.cumsum(counts) / len(values))


def hop_cdf(records: Iterable[MetricsRecord | TrafficMetrics]) -> HopCdf:
    ingress, egress = [], []
    for item in records:
        for m in item.traffics if isinstance(item, MetricsRecord) else [item]:
            ingress.extend(m.ingress_hops)
            egress.extend(m.egress_hops)
    if not ingress:
        raise ValueError("hop_cdf needs at least one placed VNF")
    return HopCdf(cumulative_fractions(ingress), cumulative_fractions(egress))


# --- trace generation ---------------------------------------------------------------

def generate_trace(topology: Topology, catalog: VnfCatalog, batches: int, mean_requests: float,
                   seed: int = 0, amplitude: float = 0.5, period: float | None = None,
                   chain_len: tuple[int, int] = (3, 3), bandwidth: tuple[int, int] = (20, 200),
                   budget_ms: float | None = None, penalty_rate: float = 1.0) -> Trace:
    """Seeded synthetic trace with a sinusoidal request volume.

    Batch ``k`` draws a Poisson number of requests with mean
    ``mean_requests * (1 + amplitude * sin(2 pi k / period))``; ``period``
    defaults to the trace length, i.e. one simulated day.
    """
    from .fixtures import random_traffic

    rng = np.random.default_rng(seed)
    period = period or max(batches, 1)
    out = []
    for k in range(batches):
        lam = max(0.0, mean_requests * (1.0 + amplitude * math.sin(2 * math.pi * k / period)))
        count = int(rng.poisson(lam))
        reqs = random_traffic(rng, topology, catalog, count, chain_len, bandwidth, budget_ms, penalty_rate,
                              prefix=f"b{k}-", batch=k)
        if reqs:
            out.append(Batch(k, tuple(reqs)))
    return Trace(tuple(out))


# --- files -------------------------------------------------------------------------

METRICS_HEADER = ["schema_version", "label", *COMPONENTS, "total", "utilization", "active_servers",
                  "provisioned", "failed", "ingress_hops", "egress_hops", "stretch"]
RATIO_HEADER = ["schema_version", "label", *COMPONENTS, "total"]


def _join(values) -> str:
    return "|".join(repr(v) for v in values)


def _split(text: str, cast) -> list:
    return [cast(x) for x in text.split("|")] if text else []


def metrics_csv(records: Sequence[MetricsRecord]) -> str:
    """One row per batch. Wall time is left out so reruns are byte-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for r in records:
        b = r.breakdown
        w.writerow([SCHEMA_VERSION, r.label, *(repr(getattr(b, c)) for c in COMPONENTS), repr(b.total),
                    repr(r.utilization), r.active_servers, len(r.traffics), len(r.failures),
                    _join(h for m in r.traffics for h in m.ingress_hops),
                    _join(h for m in r.traffics for h in m.egress_hops),
                    _join(m.stretch for m in r.traffics)])
    return buf.getvalue()


@dataclass
class MetricsRow:
    """A metrics CSV row as read back (per-traffic detail flattened)."""

    label: int
    breakdown: CostBreakdown
    utilization: float
    active_servers: int
    provisioned: int
    failed: int
    ingress_hops: list[int]
    egress_hops: list[int]
    stretch: list[float]


def load_metrics_csv(text: str) -> list[MetricsRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or list(reader.fieldnames) != METRICS_HEADER:
        raise ParseError("metrics: unexpected header")
    rows = []
    for row in reader:
        try:
            if int(row["schema_version"]) != SCHEMA_VERSION:
                raise ValueError(f"unsupported schema_version {row['schema_version']}")
            rows.append(MetricsRow(
                int(row["label"]), CostBreakdown.from_dict(row), float(row["utilization"]),
                int(row["active_servers"]), int(row["provisioned"]), int(row["failed"]),
                _split(row["ingress_hops"], int), _split(row["egress_hops"], int), _split(row["stretch"], float),
            ))
        except (TypeError, ValueError, KeyError) as exc:
            raise ParseError(f"metrics: line {reader.line_num}: {exc}") from None
    return rows


def metrics_json(records: Sequence[MetricsRecord], mode: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "records": [
            {
                "label": r.label,
                "breakdown": r.breakdown.as_dict(),
                "utilization": r.utilization,
                "active_servers": r.active_servers,
                "traffics": [
                    {"id": m.traffic_id, "ingress_hops": list(m.ingress_hops), "egress_hops": list(m.egress_hops),
                     "path_hops": m.path_hops, "shortest_hops": m.shortest_hops, "stretch": m.stretch}
                    for m in r.traffics
                ],
                "failures": dict(sorted(r.failures.items())),
            }
            for r in records
        ],
    }


def load_metrics_json(doc) -> list[MetricsRecord]:
    if isinstance(doc, str):
        doc = json.loads(doc)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"metrics: unsupported schema_version {doc.get('schema_version')}")
    out = []
    for r in doc["records"]:
        out.append(MetricsRecord(
            int(r["label"]), CostBreakdown.from_dict(r["breakdown"]), float(r["utilization"]),
            int(r["active_servers"]),
            [TrafficMetrics(m["id"], tuple(m["ingress_hops"]), tuple(m["egress_hops"]), int(m["path_hops"]),
                            int(m["shortest_hops"])) for m in r["traffics"]],
            dict(r["failures"]),
        ))
    return out


def ratio_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATIO_HEADER)
    for row in rows:
        w.writerow([SCHEMA_VERSION, row["label"], *(repr(row[c]) for c in COMPONENTS + ("total",))])
    return buf.getvalue()


def load_ratio_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or list(reader.fieldnames) != RATIO_HEADER:
        raise ParseError("ratios: unexpected header")
    out = []
    for row in reader:
        try:
            out.append({"label": int(row["label"]), **{c: float(row[c]) for c in COMPONENTS + ("total",)}})
        except (TypeError, ValueError) as exc:
            raise ParseError(f"ratios: line {reader.line_num}: {exc}") from None
    return out


def timings_csv(records: Sequence[MetricsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "wall_s"])
    for r in records:
        w.writerow([r.label, f"{r.wall_s:.6f}"])
    return buf.getvalue()
