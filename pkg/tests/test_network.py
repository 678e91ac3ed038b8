import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hidsim.errors import TopologyError
from hidsim.network import (
    DegradedEvent,
    EnergyLedger,
    ReelectionEvent,
    Role,
    SensorNode,
    build_topology,
    charges_csv,
    ids_count,
    instruction_equivalent,
    nodes_csv,
    place_ids,
    reelect_check,
    reelection_due,
)


class TestIdsCount:
    def test_unit_range_point(self):
        assert ids_count(1.0, 10.0) == 16

    def test_zero_range_means_zero(self):
        assert ids_count(0.0, 5.0) == 0

    def test_fractional_rounds(self):
        assert ids_count(1.5, 8.0) == 29  # 1.6 * 2.25 * 8 = 28.8

    def test_minimum_one_when_monitorable(self):
        assert ids_count(0.1, 0.1) == 1

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            ids_count(-1.0, 1.0)
        with pytest.raises(ValueError):
            ids_count(1.0, -0.5)


class TestBuildTopology:
    def test_partition(self):
        topo = build_topology(100, 10000.0, 60.0, 3, seed=1)
        assigned = [n for c in topo.clusters.values() for n in c.member_ids]
        heads = [c.head_id for c in topo.clusters.values()]
        assert sorted(assigned + heads) == list(range(100))

    def test_every_node_its_own_head(self):
        topo = build_topology(5, 100.0, 20.0, 5, seed=2)
        assert len(topo.clusters) == 5
        assert all(not c.member_ids for c in topo.clusters.values())

    def test_determinism(self):
        a = build_topology(40, 10000.0, 50.0, 3, seed=9)
        b = build_topology(40, 10000.0, 50.0, 3, seed=9)
        assert [(n.x, n.y, n.role, n.cluster_id) for n in a.nodes.values()] == \
               [(n.x, n.y, n.role, n.cluster_id) for n in b.nodes.values()]

    def test_heads_carry_more_energy(self):
        topo = build_topology(30, 10000.0, 50.0, 3, seed=3)
        for node in topo.nodes.values():
            if node.role is Role.CLUSTER_HEAD:
                assert node.initial_energy == 10.0
            else:
                assert node.initial_energy == 2.0

    def test_head_energy_must_exceed_node_energy(self):
        with pytest.raises(ValueError):
            build_topology(10, 100.0, 20.0, 2, seed=1, node_energy=5.0, head_energy=5.0)

    def test_unreachable_node_rejected(self):
        # tiny range on a large area leaves somebody stranded
        with pytest.raises(TopologyError):
            build_topology(10, 1_000_000.0, 1.0, 1, seed=4)

    def test_density(self):
        topo = build_topology(50, 10000.0, 50.0, 3, seed=5)
        assert topo.density == pytest.approx(0.005)


class TestPlaceIds:
    def test_budget_respected(self):
        topo = build_topology(45, 10000.0, 50.0, 3, seed=6)
        place_ids(topo, 12)
        assert len(topo.ids_agents()) == 12

    def test_cluster_floor(self):
        topo = build_topology(45, 10000.0, 50.0, 3, seed=7)
        place_ids(topo, 3)
        for cid in topo.clusters:
            assert len(topo.ids_agents(cid)) >= 1

    def test_zero_rejected(self):
        topo = build_topology(20, 10000.0, 60.0, 2, seed=8)
        with pytest.raises(ValueError):
            place_ids(topo, 0)

    def test_budget_above_candidates_rejected(self):
        topo = build_topology(10, 100.0, 20.0, 2, seed=9)
        with pytest.raises(ValueError):
            place_ids(topo, 9)

    def test_heads_never_promoted(self):
        topo = build_topology(30, 10000.0, 50.0, 3, seed=10)
        place_ids(topo, 10)
        for node in topo.nodes.values():
            if node.role is Role.IDS_AGENT:
                assert node.node_id not in [c.head_id for c in topo.clusters.values()]

    def test_coverage_tie_prefers_lower_id(self):
        # two isolated equal candidates: the lower id wins the promotion
        topo = build_topology(6, 100.0, 15.0, 1, seed=11)
        # rebuild into a symmetric hand-made layout
        for i, (x, y) in enumerate([(5, 5), (1, 1), (9, 1), (1, 9), (9, 9), (5, 1)]):
            topo.nodes[i].x, topo.nodes[i].y = float(x), float(y)
        ids = place_ids(topo, 1).ids_agents()
        assert len(ids) == 1


class TestCharge:
    def _node(self, energy=2.0):
        return SensorNode(0, 0.0, 0.0, initial_energy=energy)

    def test_default_tx_cost(self):
        node = self._node()
        ledger = EnergyLedger()
        spent = ledger.charge(node, 100, "tx")
        assert spent == pytest.approx(5e-3)
        assert node.energy == pytest.approx(2.0 - 5e-3)

    def test_zero_bytes_no_change(self):
        node = self._node()
        ledger = EnergyLedger()
        assert ledger.charge(node, 0, "tx") == 0.0
        assert node.energy == 2.0
        assert ledger.records == []

    def test_rx_uses_half_rate(self):
        node = self._node()
        ledger = EnergyLedger()
        ledger.charge(node, 100, "rx")
        assert node.energy == pytest.approx(2.0 - 2.5e-3)

    def test_overdraw_kills_node(self):
        node = self._node(energy=1e-4)
        ledger = EnergyLedger()
        ledger.charge(node, 100, "tx")  # costs 5e-3 > 1e-4
        assert not node.alive
        assert node.energy == 0.0
        assert ledger.records[-1].died

    def test_isolated_node_cannot_communicate(self):
        node = self._node()
        node.isolated = True
        with pytest.raises(ValueError):
            EnergyLedger().charge(node, 10, "tx")

    def test_instruction_equivalent(self):
        assert instruction_equivalent(100) == 720_000

    @given(st.lists(st.tuples(st.integers(1, 500), st.booleans()), min_size=1, max_size=40))
    @settings(max_examples=50, deadline=None)
    def test_conservation(self, charges):
        # spent energy and the ledger accumulate in the same order, so they
        # agree bit-for-bit; remaining energy is initial minus spent by
        # definition
        node = self._node(energy=1000.0)
        ledger = EnergyLedger()
        for n_bytes, is_tx in charges:
            ledger.charge(node, n_bytes, "tx" if is_tx else "rx")
        assert node.energy_spent == ledger.joules_spent[0]
        assert node.energy == node.initial_energy - node.energy_spent
        total = 0.0
        for r in ledger.records:
            total += r.joules
        assert total == node.energy_spent
        assert ledger.bytes_sent.get(0, 0) == sum(n for n, t in charges if t)
        assert ledger.bytes_received.get(0, 0) == sum(n for n, t in charges if not t)


class TestReelectionRule:
    def test_three_of_four_below_half_fires(self):
        assert reelection_due([0.49, 0.49, 0.49, 0.80], [1.0] * 4)

    def test_all_above_half_does_not_fire(self):
        assert not reelection_due([0.51] * 4, [1.0] * 4)

    def test_singleton_ceiling(self):
        assert reelection_due([0.40], [1.0])

    @given(st.integers(1, 8), st.data())
    @settings(max_examples=200, deadline=None)
    def test_threshold_matches_ceiling_rule(self, n, data):
        depleted = data.draw(st.integers(0, n))
        energies = [0.4] * depleted + [0.9] * (n - depleted)
        expected = depleted >= math.ceil(0.75 * n)
        assert reelection_due(energies, [1.0] * n) == expected

    def test_empty_cluster_rejected(self):
        with pytest.raises(ValueError):
            reelection_due([], [])


class TestReelectCheck:
    def _topology(self, seed=12):
        topo = build_topology(30, 10000.0, 55.0, 2, seed=seed)
        place_ids(topo, 6)
        return topo

    def _drain(self, node, fraction):
        node.energy_spent = node.initial_energy * fraction

    def test_no_fire_returns_none(self):
        topo = self._topology()
        assert reelect_check(topo, 0) is None

    def test_fires_and_promotes_fresh_agents(self):
        topo = self._topology()
        agents = topo.ids_agents(0)
        for a in agents:
            self._drain(a, 0.6)
        event = reelect_check(topo, 0)
        assert isinstance(event, ReelectionEvent)
        assert set(event.demoted) == {a.node_id for a in agents}
        assert len(event.promoted) == len(event.demoted)
        for nid in event.promoted:
            node = topo.nodes[nid]
            assert node.role is Role.IDS_AGENT
            assert node.energy >= 0.5 * node.initial_energy
        for nid in event.demoted:
            assert topo.nodes[nid].role is Role.ORDINARY

    def test_degraded_when_no_candidates(self):
        topo = self._topology()
        agents = topo.ids_agents(0)
        for a in agents:
            self._drain(a, 0.6)
        for node in topo.nodes.values():
            if node.role is Role.ORDINARY and node.cluster_id == 0:
                self._drain(node, 0.7)  # nobody eligible
        event = reelect_check(topo, 0)
        assert isinstance(event, DegradedEvent)
        # old agents retained
        assert {a.node_id for a in topo.ids_agents(0)} == {a.node_id for a in agents}

    def test_no_agents_rejected(self):
        topo = build_topology(10, 10000.0, 60.0, 1, seed=13)
        with pytest.raises(ValueError):
            reelect_check(topo, 0)


class TestExports:
    def test_nodes_csv_shape(self):
        topo = build_topology(8, 1000.0, 30.0, 2, seed=14)
        ledger = EnergyLedger()
        ledger.charge(topo.nodes[0], 100, "tx")
        text = nodes_csv(topo, ledger)
        lines = text.strip().split("\n")
        assert len(lines) == 9
        assert lines[0].startswith("node_id,role,cluster_id,x,y")

    def test_charges_csv_shape(self):
        topo = build_topology(4, 1000.0, 40.0, 1, seed=15)
        ledger = EnergyLedger()
        ledger.charge(topo.nodes[0], 64, "tx")
        ledger.charge(topo.nodes[1], 64, "rx")
        text = charges_csv(ledger)
        lines = text.strip().split("\n")
        assert len(lines) == 3
        assert lines[1].split(",")[3] == "tx"
