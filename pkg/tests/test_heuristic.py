import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vnfop.cost import CostWeights
from vnfop.errors import Infeasible
from vnfop.exact import check_feasibility, check_state, solve_exact
from vnfop.heuristic import (HeuristicOptions, MultiStageGraph, OpCounter, build_stage_costs, provision_batch,
                             provision_traffic, viterbi)
from vnfop.model import Link, ServerSpec, Topology, VnfCatalog, VnfType

from conftest import empty_state, fw_catalog, line_topology, request
from oracles import prefix_minimum, tiny_instance


@st.composite
def stage_graphs(draw):
    sizes = draw(st.lists(st.integers(1, 4), min_size=2, max_size=5))
    costs = st.floats(0, 50, allow_nan=False)
    nodes = [np.array(draw(st.lists(costs, min_size=k, max_size=k))) for k in sizes]
    edges = [np.array(draw(st.lists(st.lists(costs, min_size=b, max_size=b), min_size=a, max_size=a)))
             for a, b in zip(sizes, sizes[1:])]
    return MultiStageGraph.from_costs([list(range(k)) for k in sizes], nodes, edges)


@given(stage_graphs())
@settings(max_examples=60, deadline=None)
def test_viterbi_tables_are_prefix_minima(graph):
    tables, choice, total = viterbi(graph)
    for i, row in enumerate(tables.cost):
        for j, value in enumerate(row):
            assert value == pytest.approx(prefix_minimum(graph, i, j), abs=1e-9)
    # the back-traced sequence realises the reported total
    cost = graph.node_costs[0][choice[0]] + sum(
        graph.edge_costs[k - 1][choice[k - 1], choice[k]] + graph.node_costs[k][choice[k]]
        for k in range(1, len(choice)))
    assert cost == pytest.approx(total, abs=1e-9)


def test_viterbi_without_finite_path():
    g = MultiStageGraph.from_costs([[0], [0]], [[0.0], [1.0]], [[[np.inf]]])
    _, choice, total = viterbi(g)
    assert choice is None and total == np.inf


def test_example_stage_candidates(example, example_state):
    _, _, traffic = example
    g = build_stage_costs(example_state, traffic[0])
    assert g.stages == [["1"], ["2", "3", "4"], ["3", "4"], ["2", "3", "4"], ["6"]]
    assert g.stage_types == [None, "firewall", "ids", "proxy", None]


def test_example_ids_stage_relaxation(example, example_state):
    _, _, traffic = example
    g = build_stage_costs(example_state, traffic[0])
    tables, choice, _ = viterbi(g)
    into_ids = tables.cost[1][:, None] + g.edge_costs[1] + g.node_costs[2][None, :]
    col = g.stages[2].index("3")
    via = dict(zip(g.stages[1], into_ids[:, col]))
    assert via["2"] == 15.0 and via["4"] == 38.0
    assert tables.cost[2][col] == 15.0
    assert g.stages[1][tables.back[2][col]] == "2"


def test_example_provisioning_is_feasible(example, example_state):
    _, _, traffic = example
    res = provision_traffic(example_state, traffic[0])
    assert [s for _, s, _ in res.placement] == ["2", "3", "2"]
    assert res.route[0][0] == "1" and res.route[-1][1] == "6"
    assert check_state(res.state) == []


def test_empty_chain_takes_min_delay_path(backbone, middleboxes):
    state = empty_state(backbone, middleboxes)
    res = provision_traffic(state, request("t", "SEAT", "NEWY", []))
    assert res.placement == []
    assert len(res.segments) == 1 and res.segments[0][0] == "SEAT" and res.segments[0][-1] == "NEWY"
    assert res.breakdown.deployment == 0.0 and res.breakdown.energy == 0.0


def test_active_slot_is_reused():
    state = empty_state(line_topology(3, servers=["b"]), fw_catalog())
    first = provision_traffic(state, request("t1", "a", "c", ["firewall"], bw=300))
    second = provision_traffic(first.state, request("t2", "a", "c", ["firewall"], bw=300))
    assert second.placement[0][2] == first.placement[0][2]
    assert second.breakdown.deployment == 0.0


def test_full_slot_opens_another():
    state = empty_state(line_topology(3, bandwidth=5000.0, servers=["b"]), fw_catalog())
    batch = provision_batch(state, [request("t1", "a", "c", ["firewall"], bw=600),
                                    request("t2", "a", "c", ["firewall"], bw=600)])
    slots = {r.placement[0][2] for r in batch.results.values()}
    assert slots == {"srv-b/firewall/0", "srv-b/firewall/1"}
    assert check_state(batch.state) == []


def test_oversized_demand_is_infeasible():
    state = empty_state(line_topology(3, servers=["b"]), fw_catalog())
    with pytest.raises(Infeasible) as err:
        provision_traffic(state, request("t", "a", "c", ["firewall"], bw=950))
    assert err.value.constraint == "Eq.2"
    batch = provision_batch(state, [request("t", "a", "c", ["firewall"], bw=950)])
    assert list(batch.failures) == ["t"] and batch.state.traffics == {}


def test_congested_link_uses_detour():
    links = (Link("a", "b", 150.0, 1.0), Link("b", "c", 1000.0, 1.0), Link("a", "d", 1000.0, 2.0),
             Link("d", "c", 1000.0, 2.0))
    topo = Topology(("a", "b", "c", "d"), links, ())
    state = empty_state(topo, fw_catalog())
    batch = provision_batch(state, [request("t1", "a", "c", [], bw=100), request("t2", "a", "c", [], bw=100)])
    assert batch.results["t1"].segments == [("a", "b", "c")]
    assert batch.results["t2"].segments == [("a", "d", "c")]


def test_joint_overdraw_is_resolved():
    cat = VnfCatalog.of([VnfType("firewall", 1.0, {"cpu_cores": 4}, 900), VnfType("proxy", 1.0, {"cpu_cores": 4}, 900)])
    servers = (ServerSpec("cheap", "a", {"cpu_cores": 4.0}, {"cpu_cores": (1.0, 2.0)}),
               ServerSpec("dear", "b", {"cpu_cores": 8.0}, {"cpu_cores": (50.0, 90.0)}))
    topo = Topology(("a", "b"), (Link("a", "b", 1000.0, 1.0),), servers)
    res = provision_traffic(empty_state(topo, cat), request("t", "a", "b", ["firewall", "proxy"]))
    assert [s for _, s, _ in res.placement] == ["a", "b"]
    assert check_state(res.state) == []


def test_op_counter_counts_cells_and_transitions(example, example_state):
    _, _, traffic = example
    counter = OpCounter()
    provision_traffic(example_state, traffic[0], options=HeuristicOptions(counter=counter))
    sizes = [1, 3, 2, 3, 1]
    assert counter.count == sum(sizes) + sum(a * b for a, b in zip(sizes, sizes[1:]))


def test_deterministic(backbone, middleboxes):
    rng = np.random.default_rng(5)
    from vnfop.fixtures import random_traffic
    batch = random_traffic(rng, backbone, middleboxes, 20, chain_len=(1, 3))
    a = provision_batch(empty_state(backbone, middleboxes), batch)
    b = provision_batch(empty_state(backbone, middleboxes), batch)
    assert a.state.placements == b.state.placements and a.state.routes == b.state.routes
    assert a.breakdown == b.breakdown


def test_batch_split_is_sequential(backbone, middleboxes):
    from vnfop.fixtures import random_traffic
    batch = random_traffic(np.random.default_rng(9), backbone, middleboxes, 10)
    whole = provision_batch(empty_state(backbone, middleboxes), batch)
    first = provision_batch(empty_state(backbone, middleboxes), batch[:4])
    rest = provision_batch(first.state, batch[4:])
    assert rest.state.placements == whole.state.placements
    # energy and fragmentation describe the state at each event; the incremental parts add up
    for part in ("deployment", "forwarding"):
        split = getattr(first.breakdown, part) + getattr(rest.breakdown, part)
        assert split == pytest.approx(getattr(whole.breakdown, part), rel=1e-12)


@pytest.mark.parametrize("seed", range(16))
def test_never_beats_exact(seed):
    state, batch = tiny_instance(seed)
    w = CostWeights(bandwidth_price=0.01)
    heur = provision_batch(state, batch, w)
    assert check_feasibility(state, _new_part(state, heur.state)) == []
    try:
        exact = solve_exact(state, batch, w)
    except Infeasible:
        assert heur.failures
        return
    if not heur.failures:
        assert heur.breakdown.total >= exact.breakdown.total - 1e-9


def _new_part(before, after):
    from vnfop.state import Assignment
    return Assignment([after.traffics[t] for t in after.traffics if t not in before.traffics],
                      {k: v for k, v in after.placements.items() if k not in before.placements},
                      {k: v for k, v in after.routes.items() if k not in before.routes})


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_lazy_detour_pricing_matches_eager(seed, middleboxes):
    from vnfop.fixtures import random_topology, random_traffic
    rng = np.random.default_rng(seed)
    topo = random_topology(rng, 25, n_links=45, bandwidth=(600.0, 1000.0))
    batch = random_traffic(rng, topo, middleboxes, 40, bandwidth=(100, 400))
    lazy = provision_batch(empty_state(topo, middleboxes), batch)
    eager = provision_batch(empty_state(topo, middleboxes), batch, options=HeuristicOptions(lazy_paths=False))
    assert lazy.state.placements == eager.state.placements
    assert lazy.state.routes == eager.state.routes
    assert lazy.breakdown == eager.breakdown
    assert list(lazy.failures) == list(eager.failures)
    assert any(p for res in lazy.results.values() for p in res.graph.edge_paths)  # detours were exercised
