import math

import numpy as np
import pytest

from vnfop.cost import CostBreakdown, CostWeights, evaluate_event
from vnfop.errors import Infeasible, LimitExceeded
from vnfop.exact import ExactLimits, check_feasibility, check_monotone, check_state, lower_bound, solve_exact
from vnfop.model import VnfCatalog, VnfType
from vnfop.state import Assignment

from conftest import empty_state, fw_catalog, line_topology, request
from oracles import brute_force, tiny_instance


def test_empty_batch(example_state):
    res = solve_exact(example_state, [])
    assert res.breakdown == CostBreakdown()
    assert res.state.placements == {} and res.state is not example_state


def test_example_optimum_routes_one_to_six(example, example_state):
    _, _, traffic = example
    res = solve_exact(example_state, traffic)
    t = traffic[0]
    hops = res.state.traffic_route(t.id)
    assert hops[0][0] == "1" and hops[-1][1] == "6"
    assert check_state(res.state) == []
    assert res.breakdown.total == pytest.approx(evaluate_event(example_state, res.state, [t.id], CostWeights()).total)


def test_single_firewall_site_on_line():
    topo = line_topology(3, servers=["b"])
    state = empty_state(topo, fw_catalog())
    t = request("t", "a", "c", ["firewall"])
    res = solve_exact(state, [t])
    assert res.state.placements[("t", 1)] == "srv-b/firewall/0"
    assert res.state.traffic_route("t") == [("a", "b"), ("b", "c")]


def test_feasibility_of_example_solution(example, example_state):
    _, _, traffic = example
    res = solve_exact(example_state, traffic)
    assert check_feasibility(example_state, res.assignment) == []


def _line_state(**kw):
    topo = line_topology(3, servers=["b"], **kw)
    return empty_state(topo, fw_catalog())


def test_overloaded_slot_is_eq2():
    state = _line_state(bandwidth=5000.0)
    t1, t2 = request("t1", "a", "c", ["firewall"], bw=600), request("t2", "a", "c", ["firewall"], bw=600)
    asg = Assignment([t1, t2],
                     {("t1", 1): "srv-b/firewall/0", ("t2", 1): "srv-b/firewall/0"},
                     {(t, e): p for t in ("t1", "t2") for e, p in enumerate([("a", "b"), ("b", "c")])})
    problems = check_feasibility(state, asg)
    assert problems and all(p.startswith("Eq.2") for p in problems)


def test_missing_hop_is_eq9():
    state = _line_state()
    t = request("t", "a", "c", ["firewall"])
    asg = Assignment([t], {("t", 1): "srv-b/firewall/0"}, {("t", 0): ("a", "b"), ("t", 1): ("b",)})
    assert any(p.startswith("Eq.9") for p in check_feasibility(state, asg))
    asg.routes[("t", 1)] = ("b", "a", "c")
    assert any(p.startswith("Eq.9") for p in check_feasibility(state, asg))


def test_both_directions_is_eq7():
    state = _line_state()
    t = request("t", "a", "c", ["firewall"])
    asg = Assignment([t], {("t", 1): "srv-b/firewall/0"},
                     {("t", 0): ("a", "b", "a", "b"), ("t", 1): ("b", "c")})
    assert any(p.startswith("Eq.7") for p in check_feasibility(state, asg))


def test_link_overload_is_eq8():
    state = _line_state(bandwidth=150.0)
    t1, t2 = request("t1", "a", "c", ["firewall"], bw=100), request("t2", "a", "c", ["firewall"], bw=100)
    asg = Assignment([t1, t2], {("t1", 1): "srv-b/firewall/0", ("t2", 1): "srv-b/firewall/0"},
                     {(t, e): p for t in ("t1", "t2") for e, p in enumerate([("a", "b"), ("b", "c")])})
    assert [p[:4] for p in check_feasibility(state, asg)] == ["Eq.8", "Eq.8"]


def test_server_overload_is_eq3_and_type_mismatch_is_eq4():
    cat = VnfCatalog.of([VnfType("firewall", 1, {"cpu_cores": 12}, 900), VnfType("ids", 1, {"cpu_cores": 8}, 600)])
    state = empty_state(line_topology(1), cat)
    t = request("t", "a", "a", ["firewall", "ids"])
    asg = Assignment([t], {("t", 1): "srv-a/firewall/0", ("t", 2): "srv-a/ids/0"},
                     {("t", 0): ("a",), ("t", 1): ("a",), ("t", 2): ("a",)})
    assert [p[:4] for p in check_feasibility(state, asg)] == ["Eq.3"]
    asg.placements[("t", 1)] = "srv-a/ids/1"
    assert any(p.startswith("Eq.4") for p in check_feasibility(state, asg))
    del asg.placements[("t", 1)]
    assert any(p.startswith("Eq.5") for p in check_feasibility(state, asg))


def test_infeasible_is_diagnosed():
    state = _line_state()
    with pytest.raises(Infeasible) as err:
        solve_exact(state, [request("t", "a", "c", ["firewall"], bw=5000)])
    assert err.value.constraint.startswith("Eq.")


def test_limit_exceeded_never_approximates(example, example_state):
    _, _, traffic = example
    with pytest.raises(LimitExceeded):
        solve_exact(example_state, traffic, limits=ExactLimits(max_nodes=3), warm_start=False)


def test_lower_bound_complete_equals_cost(example, example_state):
    _, _, traffic = example
    res = solve_exact(example_state, traffic)
    assert lower_bound(example_state, traffic, res.assignment) == pytest.approx(res.breakdown.total, rel=1e-12)


def test_lower_bound_is_admissible_and_monotone(example, example_state):
    _, _, traffic = example
    res = solve_exact(example_state, traffic)
    t = traffic[0]
    partial = Assignment([t])
    bounds = [lower_bound(example_state, traffic, partial)]
    for i in range(1, len(t.chain) + 1):
        partial.placements[(t.id, i)] = res.assignment.placements[(t.id, i)]
        partial.routes[(t.id, i - 1)] = res.assignment.routes[(t.id, i - 1)]
        bounds.append(lower_bound(example_state, traffic, partial))
    partial.routes[(t.id, len(t.chain))] = res.assignment.routes[(t.id, len(t.chain))]
    bounds.append(lower_bound(example_state, traffic, partial))
    assert bounds[0] <= res.breakdown.total + 1e-9
    assert all(b <= a + 1e-9 for b, a in zip(bounds, bounds[1:]))
    assert bounds[-1] == pytest.approx(res.breakdown.total, rel=1e-12)


@pytest.mark.parametrize("seed", range(16))
def test_matches_brute_force(seed):
    state, batch = tiny_instance(seed)
    w = CostWeights(bandwidth_price=0.01)
    expected, _ = brute_force(state, batch, w)
    if expected is None:
        with pytest.raises(Infeasible):
            solve_exact(state, batch, w)
        return
    pruned = solve_exact(state, batch, w)
    plain = solve_exact(state, batch, w, prune=False)
    assert pruned.breakdown.total == pytest.approx(expected, rel=1e-12, abs=1e-9)
    assert plain.breakdown.total == pytest.approx(expected, rel=1e-12, abs=1e-9)
    # the tie-break makes the chosen optimum independent of pruning
    assert pruned.assignment.placements == plain.assignment.placements
    assert pruned.assignment.routes == plain.assignment.routes


@pytest.mark.parametrize("mode", ["per-slot", "per-server-idle"])
def test_energy_modes_match_brute_force(mode):
    state, batch = tiny_instance(4)
    w = CostWeights(energy_mode=mode, bandwidth_price=0.01)
    expected, _ = brute_force(state, batch, w)
    assert solve_exact(state, batch, w).breakdown.total == pytest.approx(expected, rel=1e-12, abs=1e-9)


def test_previous_provisioning_is_kept(example, example_state):
    topo, catalog, traffic = example
    first = solve_exact(example_state, traffic).state
    t2 = request("t2", "1", "6", ["firewall", "ids"], bw=200)
    second = solve_exact(first, [t2]).state
    assert check_monotone(first, second) == []
    assert check_state(second) == []


def test_duplicate_traffic_rejected(example, example_state):
    _, _, traffic = example
    state = solve_exact(example_state, traffic).state
    with pytest.raises(ValueError):
        solve_exact(state, traffic)
