import math

import pytest

from vnfop.cost import (CostBreakdown, CostWeights, deployment_cost, energy_cost, energy_fraction,
                        evaluate_event, forwarding_cost, fragmentation_cost, path_delay, slo_penalty, total_cost)
from vnfop.model import VnfCatalog, VnfType
from vnfop.transform import enumerate_vnfs

from conftest import empty_state, fw_catalog, line_topology, request


@pytest.mark.parametrize("consumed, watts", [(0, 80.5), (16, 2735.0), (4, 744.125)])
def test_energy_fraction_reference(consumed, watts):
    assert energy_fraction(16, consumed, 80.5, 2735) == watts


@pytest.mark.parametrize("total, consumed", [(16, 17), (0, 0), (16, -1)])
def test_energy_fraction_domain(total, consumed):
    with pytest.raises(ValueError):
        energy_fraction(total, consumed, 1, 2)


def _two_type_catalog():
    return VnfCatalog.of([VnfType("firewall", 10, {"cpu_cores": 4}, 900),
                          VnfType("ids", 25, {"cpu_cores": 8}, 600)])


def test_deployment_cost_examples():
    aug = enumerate_vnfs(line_topology(1), _two_type_catalog())
    fw = [m for m in aug.slots if m.vnf_type == "firewall"]
    ids = [m for m in aug.slots if m.vnf_type == "ids"]
    assert deployment_cost([], fw[:1], aug.catalog) == 10
    assert deployment_cost(fw[:2], fw[:2], aug.catalog) == 0
    assert deployment_cost([], fw[:2] + ids[:1], aug.catalog) == 45
    with pytest.raises(ValueError, match="deactivated"):
        deployment_cost(fw[:2], fw[:1], aug.catalog)


def test_energy_cost_examples():
    topo = line_topology(1)
    aug = enumerate_vnfs(topo, fw_catalog())
    fw = list(aug.slots)
    assert energy_cost([], topo, aug.catalog) == 0
    assert energy_cost(fw[:1], topo, aug.catalog) == 744.125
    assert energy_cost(fw[:2], topo, aug.catalog) == 1488.25
    # idle counted once per active server
    assert energy_cost(fw[:2], topo, aug.catalog, "per-server-idle") == energy_fraction(16, 8, 80.5, 2735)
    assert energy_cost(fw[:1], topo, aug.catalog, dollars_per_watt=0.5) == 372.0625


def test_forwarding_cost_examples():
    assert forwarding_cost([], 0.01) == 0
    assert forwarding_cost([(k, 100.0) for k in "xyz"], 0.01) == pytest.approx(3.0, abs=1e-12)
    assert forwarding_cost([("x", 100.0), ("x", 50.0)], 0.01) == pytest.approx(1.5, abs=1e-12)


def test_slo_penalty_examples():
    t = request("t", "a", "b", [], budget=10.0, rate=5.0)
    assert slo_penalty(t, 9.0) == 0
    assert slo_penalty(t, 10.0) == 0
    assert slo_penalty(t, 12.0) == 10
    assert slo_penalty(request("t", "a", "b", [], budget=10.0, rate=0.0), 500.0) == 0


def test_path_delay_examples():
    topo = line_topology(3, delay=3.0)
    cat = VnfCatalog.of([VnfType("firewall", 1, {"cpu_cores": 4}, 900, 1.0)])
    assert path_delay([], [], topo, cat) == 0
    assert path_delay([("a", "b"), ("b", "c")], ["firewall"], topo, cat) == 7
    assert path_delay([("a", "b"), ("b", "c")], [], topo, cat) == 6
    with pytest.raises(ValueError, match="contiguous"):
        path_delay([("a", "b"), ("a", "b")], [], topo, cat)


def test_fragmentation_examples():
    topo = line_topology(2, bandwidth=1000.0)
    state = empty_state(topo, fw_catalog())
    w = CostWeights()
    assert fragmentation_cost(state, w) == 0
    t = request("t", "a", "a", ["firewall"], bw=100)
    state.traffics[t.id] = t
    state.place(t, 1, "srv-a/firewall/0")
    assert fragmentation_cost(state, w) == 12
    for i in range(1, 4):
        state.place(t, 1, f"srv-a/firewall/{i}")
    assert fragmentation_cost(state, w) == 0
    state.route(t, 0, ("a", "b"))
    assert fragmentation_cost(state, CostWeights(bandwidth_price=0.5)) == 450


def test_total_cost_examples():
    assert total_cost(0, 0, 0, 0, 0, CostWeights()).total == 0
    assert total_cost(1, 2, 3, 4, 5, CostWeights()).total == 15
    assert total_cost(1, 2, 3, 4, 5, CostWeights(alpha=2, mu=0)).total == 11


def test_weights_reject_negative():
    with pytest.raises(ValueError):
        CostWeights(gamma=-1)
    with pytest.raises(ValueError):
        CostWeights(energy_mode="bogus")


def test_weights_dict_round_trip():
    w = CostWeights(lam=3, resource_price={"cpu_cores": 2.0})
    assert CostWeights.from_dict(w.to_dict()) == w
    assert w.to_dict()["lambda"] == 3


def test_breakdown_round_trip():
    b = CostBreakdown(1, 2, 3, 4, 5, 15)
    assert CostBreakdown.from_dict(b.as_dict()) == b


def test_evaluate_event_empty_is_zero():
    state = empty_state(line_topology(2), fw_catalog())
    assert evaluate_event(state, state, [], CostWeights()) == CostBreakdown()


def test_event_without_traffic_keeps_standing_costs():
    state = empty_state(line_topology(2), fw_catalog())
    state.place(request("t", "a", "b", ["firewall"]), 1, "srv-a/firewall/0")
    idle = evaluate_event(state, state, [], CostWeights())
    assert idle.deployment == idle.forwarding == idle.penalty == 0.0
    assert idle.energy == 744.125 and idle.fragmentation > 0


def test_evaluate_event_counts_only_new_routing():
    topo = line_topology(3, bandwidth=1000.0)
    before = empty_state(topo, fw_catalog())
    t1 = request("t1", "a", "c", ["firewall"], bw=100)
    mid = before.copy()
    mid.commit(t1, ["srv-b/firewall/0"], [("a", "b"), ("b", "c")])
    t2 = request("t2", "a", "c", ["firewall"], bw=200)
    after = mid.copy()
    after.commit(t2, ["srv-b/firewall/0"], [("a", "b"), ("b", "c")])
    b = evaluate_event(mid, after, ["t2"], CostWeights())
    assert b.deployment == 0
    assert math.isclose(b.forwarding, 2 * 200 * 0.01)
    assert b.energy == 744.125
