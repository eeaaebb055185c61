import pytest

from vnfop.model import ServerSpec, Topology, VnfCatalog, VnfType
from vnfop.transform import enumerate_vnfs, max_instances, slots_for

from conftest import line_topology


def _catalog(*types):
    return VnfCatalog.of(types)


def test_sixteen_cores_give_four_firewalls_two_ids():
    topo = line_topology(1)
    cat = _catalog(VnfType("firewall", 1, {"cpu_cores": 4}, 900), VnfType("ids", 1, {"cpu_cores": 8}, 600))
    aug = enumerate_vnfs(topo, cat)
    counts = {p: len(aug.by_type.get(p, [])) for p in cat}
    assert counts == {"firewall": 4, "ids": 2}


def test_requirement_above_capacity_gives_no_slot():
    aug = enumerate_vnfs(line_topology(1, cores=3), _catalog(VnfType("firewall", 1, {"cpu_cores": 4}, 900)))
    assert aug.slots == ()


def test_floor_min_over_kinds():
    assert max_instances({"cpu": 16, "mem": 10}, {"cpu": 4, "mem": 6}) == 1
    topo = Topology(("a",), (), (ServerSpec("n", "a", {"cpu": 16, "mem": 10}),))
    aug = enumerate_vnfs(topo, _catalog(VnfType("x", 1, {"cpu": 4, "mem": 6}, 100)))
    assert len(aug.slots) == 1


def test_slot_ids_are_deterministic():
    topo = line_topology(2)
    cat = _catalog(VnfType("firewall", 1, {"cpu_cores": 4}, 900))
    a = [m.id for m in enumerate_vnfs(topo, cat).slots]
    b = [m.id for m in enumerate_vnfs(topo, cat).slots]
    assert a == b
    assert a[0] == "srv-a/firewall/0"


def test_example_ids_slots(example):
    topo, catalog, _ = example
    aug = enumerate_vnfs(topo, catalog)
    assert slots_for(aug, "3", "ids")
    assert slots_for(aug, "5", "ids") == []
    assert slots_for(aug, "1", "firewall") == []
    assert len(slots_for(aug, "2", "firewall")) == 4
    assert aug.switches_for("ids") == ["3", "4"]


def test_allowed_servers_respected(example):
    topo, catalog, _ = example
    aug = enumerate_vnfs(topo, catalog)
    for m in aug.slots:
        assert catalog[m.vnf_type].allows(m.server)


def test_per_type_packing_never_overshoots(backbone, middleboxes):
    aug = enumerate_vnfs(backbone, middleboxes)
    for server, slots in aug.by_server.items():
        cap = backbone.server_map[server].capacity
        for p in middleboxes:
            used = sum(middleboxes[p].requirements["cpu_cores"] for m in slots if m.vnf_type == p)
            assert used <= cap["cpu_cores"]


def test_pseudo_switch_per_slot(example):
    topo, catalog, _ = example
    aug = enumerate_vnfs(topo, catalog)
    assert len(aug.pseudo_switches) == len(aug.slots)
    assert len(set(aug.pseudo_switches.values())) == len(aug.slots)


@pytest.mark.parametrize("index", [0, 3])
def test_slot_lookup(example, index):
    topo, catalog, _ = example
    aug = enumerate_vnfs(topo, catalog)
    m = aug.slot(f"n2/firewall/{index}")
    assert (m.server, m.switch, m.index) == ("n2", "2", index)
