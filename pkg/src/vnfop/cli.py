"""``vnfop`` command line: solve, simulate, compare, report, gen-trace.

Exit codes: 0 success, 1 error, 2 some traffic could not be provisioned
(``solve`` only).
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .cost import COMPONENTS, CostBreakdown, CostWeights, evaluate_event, traffic_delay
from .errors import Infeasible, LimitExceeded
from .exact import ExactLimits, solve_exact
from .heuristic import HeuristicOptions, provision_batch
from .model import ModelError, check_catalog, check_traffic, load_catalog, load_topology, load_traffic
from .simulator import (RATIO_HEADER, SCHEMA_VERSION, compare, cumulative_fractions, dump_trace, generate_trace,
                        load_metrics_csv, load_metrics_json, load_ratio_csv, load_trace, metrics_csv,
                        metrics_json, ratio_csv, run, timings_csv)
from .state import NetworkState
from .transform import enumerate_vnfs

BUILTIN = {
    "topology": {"internet2": "internet2.json", "worked_example": "worked_example.json"},
    "catalog": {"middlebox": "middlebox_catalog.json", "worked_example": "worked_example_catalog.json"},
    "traffic": {"worked_example": "worked_example_traffic.csv"},
}


class UsageError(Exception):
    pass


def read_input(spec: str, kind: str, base: Path | None = None) -> str:
    """File contents, or a bundled fixture for ``builtin:<name>``."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        try:
            return resources.files("vnfop").joinpath("data", BUILTIN[kind][name]).read_text()
        except KeyError:
            raise UsageError(f"no builtin {kind} named {name!r}; have {sorted(BUILTIN[kind])}") from None
    path = Path(spec)
    if base is not None and not path.is_absolute():
        path = base / path
    if not path.is_file():
        raise UsageError(f"{kind} file not found: {path}")
    return path.read_text()


# --- configuration ------------------------------------------------------------------

@dataclass
class RunConfig:
    topology: str | None = None
    catalog: str | None = None
    traffic: str | None = None
    mode: str = "heuristic"
    weights: CostWeights = field(default_factory=CostWeights)
    k_paths: int = 3
    hop_bound: int | None = None
    max_nodes: int = 2_000_000
    time_budget: float | None = 300.0
    seed: int = 0
    out: str | None = None
    base: Path | None = None

    @property
    def options(self) -> HeuristicOptions:
        return HeuristicOptions(k_paths=self.k_paths)

    @property
    def limits(self) -> ExactLimits:
        return ExactLimits(hop_bound=self.hop_bound, max_nodes=self.max_nodes, time_budget=self.time_budget)


WEIGHT_FLAGS = ("alpha", "beta", "gamma", "lam", "mu", "sigma", "bandwidth_price", "dollars_per_watt")


def build_config(args) -> RunConfig:
    doc: dict = {}
    base = None
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        doc = json.loads(path.read_text())
        base = path.parent
    weights = dict(doc.get("weights", {}))
    if "lambda" in weights:
        weights["lam"] = weights.pop("lambda")
    for name in WEIGHT_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            weights[name] = value
    if getattr(args, "energy_mode", None):
        weights["energy_mode"] = args.energy_mode
    heur = doc.get("heuristic", {})
    exact = doc.get("exact", {})

    def pick(flag, *path, default=None):
        value = getattr(args, flag, None)
        if value is not None:
            return value
        if not path:
            return default
        node = doc
        for key in path:
            if not isinstance(node, dict) or key not in node:
                return default
            node = node[key]
        return node

    mode = pick("mode", "mode", default="heuristic")
    if mode not in ("exact", "heuristic", "both"):
        raise UsageError(f"mode must be exact, heuristic or both, not {mode!r}")
    return RunConfig(
        topology=pick("topology", "topology"),
        catalog=pick("catalog", "catalog"),
        traffic=pick("traffic", "traffic") or pick("trace", "trace"),
        mode=mode,
        weights=CostWeights.from_dict(weights),
        k_paths=int(pick("k_paths", default=heur.get("k_paths", 3))),
        hop_bound=pick("hop_bound", default=exact.get("hop_bound")),
        max_nodes=int(pick("max_nodes", default=exact.get("max_nodes", 2_000_000))),
        time_budget=pick("time_budget", default=exact.get("time_budget", 300.0)),
        seed=int(pick("seed", "seed", default=0)),
        out=pick("out", "out"),
        base=base,
    )


def load_network(cfg: RunConfig):
    if not cfg.topology or not cfg.catalog:
        raise UsageError("both --topology and --catalog are required")
    topo = load_topology(read_input(cfg.topology, "topology", cfg.base))
    catalog = load_catalog(read_input(cfg.catalog, "catalog", cfg.base))
    check_catalog(catalog, topo)
    return topo, catalog


# --- solution documents --------------------------------------------------------------

def solution_document(state: NetworkState, traffic_ids, breakdown: CostBreakdown, mode: str,
                      failures: dict[str, Infeasible]) -> dict:
    traffics = []
    for tid in sorted(traffic_ids):
        t = state.traffics[tid]
        placement = []
        for i, p in enumerate(t.chain, start=1):
            sid = state.placements[(tid, i)]
            placement.append({"stage": i + 1, "vnf": p, "switch": state.aug.slot(sid).switch, "slot": sid})
        traffics.append({
            "id": tid,
            "placement": placement,
            "route": [list(hop) for hop in state.traffic_route(tid)],
            "delay_ms": traffic_delay(state, tid),
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "status": "ok" if not failures else ("partial" if traffics else "infeasible"),
        "traffics": traffics,
        "failures": [{"id": tid, "constraint": exc.constraint, "reason": exc.reason}
                     for tid, exc in sorted(failures.items())],
        "breakdown": breakdown.as_dict(),
    }


@dataclass
class Solution:
    mode: str
    status: str
    traffics: list[dict]
    failures: list[dict]
    breakdown: CostBreakdown

    def to_document(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "mode": self.mode, "status": self.status,
                "traffics": self.traffics, "failures": self.failures, "breakdown": self.breakdown.as_dict()}


def load_solution(doc) -> Solution:
    if isinstance(doc, str):
        doc = json.loads(doc)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ModelError(f"solution: unsupported schema_version {doc.get('schema_version')}")
    for t in doc["traffics"]:
        for item in t["placement"]:
            for key in ("stage", "vnf", "switch", "slot"):
                if key not in item:
                    raise ModelError(f"solution: traffic {t.get('id')}: placement entry lacks {key}")
    return Solution(doc["mode"], doc["status"], list(doc["traffics"]), list(doc["failures"]),
                    CostBreakdown.from_dict(doc["breakdown"]))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- subcommands ---------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = build_config(args)
    if cfg.mode == "both":
        raise UsageError("solve takes --mode exact or heuristic")
    topo, catalog = load_network(cfg)
    if not cfg.traffic:
        raise UsageError("--traffic is required")
    batch = load_traffic(read_input(cfg.traffic, "traffic", cfg.base))
    for t in batch:
        check_traffic(t, topo, catalog)
    state = NetworkState(enumerate_vnfs(topo, catalog))
    if cfg.mode == "heuristic":
        res = provision_batch(state, batch, cfg.weights, cfg.options)
        doc = solution_document(res.state, res.results, res.breakdown, cfg.mode, res.failures)
    else:
        try:
            res = solve_exact(state, batch, cfg.weights, cfg.limits)
            doc = solution_document(res.state, [t.id for t in batch], res.breakdown, cfg.mode, {})
        except Infeasible as exc:
            doc = solution_document(state, [], evaluate_event(state, state, [], cfg.weights), cfg.mode,
                                    {t.id: exc for t in batch})
    for f in doc["failures"]:
        print(f"vnfop: traffic {f['id']} not provisioned: {f['reason']}", file=sys.stderr)
    _emit(json.dumps(doc, indent=2) + "\n", cfg.out)
    return 2 if doc["failures"] else 0


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    topo, catalog = load_network(cfg)
    if not cfg.traffic:
        raise UsageError("--trace is required")
    trace = load_trace(read_input(cfg.traffic, "traffic", cfg.base))
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    modes = ["heuristic", "exact"] if cfg.mode == "both" else [cfg.mode]
    series = {}
    for mode in modes:
        records = run(trace, topo, catalog, cfg.weights, mode, cfg.options, cfg.limits)
        series[mode] = records
        (out / f"metrics-{mode}.csv").write_text(metrics_csv(records))
        (out / f"metrics-{mode}.json").write_text(json.dumps(metrics_json(records, mode), indent=2) + "\n")
        (out / f"timings-{mode}.csv").write_text(timings_csv(records))
        for r in records:
            for tid, why in sorted(r.failures.items()):
                print(f"vnfop: batch {r.label}: traffic {tid} not provisioned: {why}", file=sys.stderr)
    if cfg.mode == "both":
        (out / "ratios.csv").write_text(ratio_csv(compare(series["heuristic"], series["exact"])))
    return 0


def _load_series(path: str):
    text = read_input(path, "metrics")
    if path.endswith(".json"):
        return load_metrics_json(text)
    return load_metrics_csv(text)


def cmd_compare(args) -> int:
    rows = compare(_load_series(args.a), _load_series(args.b))
    _emit(ratio_csv(rows), args.out)
    return 0


def _stats(values) -> str:
    values = list(values)
    if not values:
        return "n/a"
    return (f"mean {statistics.fmean(values):.6g}  min {min(values):.6g}  max {max(values):.6g}")


def report_text(path: str, against: str | None = None) -> str:
    text = read_input(path, "metrics")
    lines = []
    if text.split("\n", 1)[0].strip() == ",".join(RATIO_HEADER):
        rows = load_ratio_csv(text)
        lines.append(f"batches: {len(rows)}")
        for c in ("total",) + COMPONENTS:
            vals = [r[c] for r in rows]
            lines.append(f"ratio {c}: " + (f"mean {statistics.fmean(vals):.6g}  max {max(vals):.6g}"
                                           if vals else "n/a"))
        return "\n".join(lines) + "\n"
    series = _load_series(path)
    lines.append(f"batches: {len(series)}")
    for c in ("total",) + COMPONENTS:
        lines.append(f"{c}: {_stats(getattr(r.breakdown, c) for r in series)}")
    lines.append(f"utilization: {_stats(r.utilization for r in series)}")
    lines.append(f"active servers: {_stats(r.active_servers for r in series)}")
    if hasattr(series[0] if series else None, "traffics"):
        ingress = [h for r in series for m in r.traffics for h in m.ingress_hops]
        egress = [h for r in series for m in r.traffics for h in m.egress_hops]
        stretch = [m.stretch for r in series for m in r.traffics]
        failed = sum(len(r.failures) for r in series)
    else:
        ingress = [h for r in series for h in r.ingress_hops]
        egress = [h for r in series for h in r.egress_hops]
        stretch = [s for r in series for s in r.stretch]
        failed = sum(r.failed for r in series)
    lines.append(f"failed traffics: {failed}")
    if ingress:
        for name, vals in (("ingress", ingress), ("egress", egress)):
            cdf = cumulative_fractions(vals)
            lines.append(f"hop cdf from {name}: " + "  ".join(f"<={k}: {v:.3f}" for k, v in enumerate(cdf)))
    if stretch:
        qs = statistics.quantiles(stretch, n=10, method="inclusive") if len(stretch) > 1 else [stretch[0]] * 9
        lines.append(f"stretch: min {min(stretch):.4g}  median {statistics.median(stretch):.4g}  "
                     f"p90 {qs[8]:.4g}  max {max(stretch):.4g}")
    if against:
        rows = compare(series, _load_series(against))
        for c in ("total",) + COMPONENTS:
            vals = [r[c] for r in rows]
            if vals:
                lines.append(f"ratio {c}: mean {statistics.fmean(vals):.6g}  max {max(vals):.6g}")
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    sys.stdout.write(report_text(args.metrics, args.against))
    return 0


def cmd_gen_trace(args) -> int:
    cfg = build_config(args)
    topo, catalog = load_network(cfg)
    trace = generate_trace(topo, catalog, args.batches, args.mean, seed=cfg.seed, amplitude=args.amplitude,
                           chain_len=(args.min_chain, args.max_chain),
                           bandwidth=(args.min_bw, args.max_bw), penalty_rate=args.penalty_rate)
    _emit(dump_trace(trace), cfg.out)
    return 0


# --- argument parsing -------------------------------------------------------------------

def _network_args(p):
    p.add_argument("--config", help="JSON run config; flags override its values")
    p.add_argument("--topology", help="topology JSON path or builtin:<name>")
    p.add_argument("--catalog", help="VNF catalog JSON path or builtin:<name>")


def _solver_args(p):
    p.add_argument("--mode", choices=["exact", "heuristic", "both"])
    for name in WEIGHT_FLAGS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    p.add_argument("--energy-mode", choices=["per-slot", "per-server-idle"])
    p.add_argument("--k-paths", type=int, help="alternate paths tried per stage transition (default 3)")
    p.add_argument("--hop-bound", type=int, help="longest path the exact solver enumerates")
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--time-budget", type=float, help="seconds per exact solve")


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vnfop", description="VNF placement and chaining at minimum operating cost")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="provision one batch of traffic from an empty network")
    _network_args(p)
    _solver_args(p)
    p.add_argument("--traffic", help="traffic CSV path or builtin:<name>")
    p.add_argument("--out", help="solution JSON path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="replay a trace batch by batch")
    _network_args(p)
    _solver_args(p)
    p.add_argument("--trace", help="trace CSV (traffic format; arrival_batch groups batches)")
    p.add_argument("--out", help="output directory (default .)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="per-batch cost ratios of two metrics files (a / b)")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="summarize a metrics or ratio file")
    p.add_argument("metrics")
    p.add_argument("--against", help="second metrics file to report ratios against")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gen-trace", help="seeded synthetic trace with a daily volume cycle")
    _network_args(p)
    p.add_argument("--batches", type=int, default=24)
    p.add_argument("--mean", type=float, default=5.0, help="mean requests per batch")
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--min-chain", type=int, default=3)
    p.add_argument("--max-chain", type=int, default=3)
    p.add_argument("--min-bw", type=int, default=20)
    p.add_argument("--max-bw", type=int, default=200)
    p.add_argument("--penalty-rate", type=float, default=1.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="trace CSV path (default stdout)")
    p.set_defaults(func=cmd_gen_trace)
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ModelError, ValueError, LimitExceeded, OSError, json.JSONDecodeError) as exc:
        print(f"vnfop: error: {exc}", file=sys.stderr)
        return 1
