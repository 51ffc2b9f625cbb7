"""
Tests for the traffic generator: topology, legitimate script, floods,
scenario assembly and labeling.
"""

import os
import unittest
from collections import Counter

import numpy as np
import pytest

from mldas.config.schema import ScenarioConfig
from mldas.errors import ConfigError
from mldas.flows.model import ICMP, TCP, UDP, FlowKey
from mldas.traffic import (
    AttackEntry,
    AttackGenerator,
    AttackKind,
    AttackSchedule,
    Topology,
    count_flows,
    generate_dataset,
    label_flows,
    legit_fraction,
    run_attack,
    run_legitimate,
)
from mldas.traffic.legitimate import FLOWS_PER_ITERATION
from tests.factories import FlowRecordFactory

TINY = ScenarioConfig(seed=11, legit_iterations=4, attack_phases=2)


@pytest.mark.unit
class TestTopology(unittest.TestCase):

    def test_hosts_round_robin_over_switches(self):
        topology = Topology(6, 3)
        self.assertEqual([h.ip for h in topology.hosts][:2], ["10.0.0.1", "10.0.0.2"])
        self.assertEqual([h.datapath_id for h in topology.hosts], [1, 2, 3, 1, 2, 3])
        self.assertEqual(topology.switch_of("10.0.0.5"), 2)
        self.assertEqual(topology.switch_of("8.8.8.8"), 1)

    def test_line_path(self):
        topology = Topology(6, 3)
        self.assertEqual(topology.path(1, 3), (1, 2, 3))
        self.assertEqual(topology.path(3, 1), (3, 2, 1))
        self.assertEqual(topology.path(2, 2), (2,))

    def test_too_few_hosts(self):
        with self.assertRaises(ConfigError):
            Topology(2)


@pytest.mark.unit
class TestLegitimateTraffic(unittest.TestCase):

    def setUp(self):
        self.config = ScenarioConfig(seed=5, legit_iterations=1, attack_phases=0)

    def test_ping_flows_carry_every_packet(self):
        rows = run_legitimate(self.config)
        final = {}
        for row in rows:
            if row.key.ip_proto == ICMP:
                final[row.flow_id] = max(final.get(row.flow_id, 0), row.packet_count)
        self.assertEqual(len(final), 2)
        self.assertEqual(set(final.values()), {self.config.ping_packets})

    def test_all_rows_legitimate_and_sorted(self):
        rows = run_legitimate(self.config)
        self.assertTrue(all(row.label == 0 for row in rows))
        timestamps = [row.timestamp for row in rows]
        self.assertEqual(timestamps, sorted(timestamps))

    def test_same_seed_same_rows(self):
        self.assertEqual(run_legitimate(self.config), run_legitimate(self.config))

    def test_flow_count_scales_with_iterations(self):
        one = count_flows(run_legitimate(self.config))
        two = count_flows(run_legitimate(self.config.model_copy(update={"legit_iterations": 2})))
        self.assertEqual(one, FLOWS_PER_ITERATION)
        self.assertEqual(two, 2 * FLOWS_PER_ITERATION)

    def test_iperf_ports(self):
        ports = {(row.key.ip_proto, row.key.tp_dst) for row in run_legitimate(self.config)}
        self.assertIn((TCP, self.config.tcp_iperf_port), ports)
        self.assertIn((UDP, self.config.udp_iperf_port), ports)


@pytest.mark.unit
class TestAttackTraffic(unittest.TestCase):

    def setUp(self):
        self.config = ScenarioConfig(seed=3)
        self.topology = Topology.from_config(self.config)

    def test_empty_schedule(self):
        self.assertEqual(run_attack(self.config, AttackSchedule()), [])

    def test_icmp_flood_spoofs_distinct_sources(self):
        generator = AttackGenerator(self.config, self.topology, np.random.default_rng(1))
        trains = generator.flood(AttackKind.ICMP_FLOOD, "10.0.0.1", "10.0.0.2",
                                 np.linspace(0.0, 0.5, 1000), spoofed=True)
        sources = {train.key.ip_src for train in trains}
        self.assertGreaterEqual(len(sources), 990)
        self.assertFalse(any(self.topology.is_internal(ip) for ip in sources))

    def test_land_flood_mirrors_source(self):
        schedule = AttackSchedule([AttackEntry(AttackKind.LAND_FLOOD, "10.0.0.1", "10.0.0.2", 0.0, 0.5)])
        rows = run_attack(self.config, schedule)
        self.assertTrue(rows)
        for row in rows:
            self.assertEqual(row.key.ip_src, row.key.ip_dst)
            self.assertEqual(row.key.tp_src, row.key.tp_dst)
            self.assertEqual(row.label, 1)

    def test_records_stay_inside_entry_window(self):
        entry = AttackEntry(AttackKind.UDP_FLOOD, "10.0.0.1", "10.0.0.2", 1.0, 1.6, spoofed=False)
        rows = run_attack(self.config, AttackSchedule([entry]))
        self.assertTrue(all(entry.start_ns <= row.timestamp <= entry.end_ns for row in rows))
        self.assertTrue(all(row.key.ip_src == "10.0.0.1" for row in rows))


@pytest.mark.unit
class TestLabeling(unittest.TestCase):

    def setUp(self):
        self.entry = AttackEntry(AttackKind.UDP_FLOOD, "10.0.0.3", "10.0.0.2", 1.0, 2.0, spoofed=True)
        self.schedule = AttackSchedule([self.entry])

    def _row(self, timestamp_s, ip_src, proto=UDP, tp_dst=0):
        key = FlowKey(ip_src, 4000, "10.0.0.2", tp_dst, proto)
        return FlowRecordFactory(key=key, timestamp=int(timestamp_s * 1e9))

    def test_matching_row_inside_window(self):
        rows = label_flows([self._row(1.5, "10.0.0.3"), self._row(1.5, "77.1.2.3")], self.schedule)
        self.assertEqual([row.label for row in rows], [1, 1])

    def test_row_outside_window(self):
        self.assertEqual(label_flows([self._row(2.5, "10.0.0.3")], self.schedule)[0].label, 0)

    def test_background_inside_window(self):
        rows = [
            self._row(1.5, "10.0.0.4", proto=TCP, tp_dst=80),
            self._row(1.5, "10.0.0.4"),
        ]
        self.assertEqual([row.label for row in label_flows(rows, self.schedule)], [0, 0])


@pytest.mark.unit
class TestScenario:

    def test_deterministic(self):
        first, schedule = generate_dataset(TINY)
        second, again = generate_dataset(TINY)
        assert first == second
        assert schedule == again

    def test_sorted_and_calibrated(self, small_scenario):
        rows, schedule = small_scenario
        timestamps = [row.timestamp for row in rows]
        assert timestamps == sorted(timestamps)
        assert 0.61 <= legit_fraction(rows) <= 0.71
        assert schedule.phases == list(range(10))
        assert all(len(schedule.entries_of_phase(p)) == len(AttackKind) for p in schedule.phases)

    def test_attack_port_mix(self, small_scenario):
        rows, _ = small_scenario
        ports = Counter(row.key.tp_dst for row in rows if row.label == 1)
        assert 1.2 <= ports[0] / ports[80] <= 1.8

    def test_attack_rows_are_small(self, small_scenario):
        rows, _ = small_scenario

        def mean_size(label):
            return np.mean([r.byte_count / r.packet_count for r in rows if r.label == label and r.packet_count])

        assert mean_size(1) < 0.1 * mean_size(0)

    def test_protocol_invariants(self, small_scenario):
        rows, _ = small_scenario
        for row in rows:
            land = row.key.ip_src == row.key.ip_dst and row.key.tp_src == row.key.tp_dst
            if row.label == 0:
                assert not land
            if row.key.ip_proto == ICMP:
                assert row.key.tp_src == row.key.tp_dst == 0
                assert row.icmp_type in (0, 8)

    def test_even_target(self):
        rows, _ = generate_dataset(TINY.model_copy(update={"target_legit_fraction": 0.5}))
        assert 0.45 <= legit_fraction(rows) <= 0.55

    def test_infeasible_ratio(self):
        with pytest.raises(ConfigError):
            generate_dataset(ScenarioConfig(legit_iterations=1, attack_phases=100))
        with pytest.raises(ConfigError):
            generate_dataset(TINY.model_copy(update={"attack_rate": 10.0, "attack_duration": 1.0}))

    def test_unspoofed_floods_stay_calibrated(self):
        rows, _ = generate_dataset(ScenarioConfig(seed=1, legit_iterations=20, spoofed=False))
        assert abs(legit_fraction(rows) - 0.66) <= 0.05

    def test_uncalibrated_result_is_a_config_error(self, monkeypatch):
        import dataclasses

        from mldas.traffic import scenario

        def nothing_matches(rows, schedule):
            return [dataclasses.replace(row, label=0) for row in rows]

        monkeypatch.setattr(scenario, "label_flows", nothing_matches)
        with pytest.raises(ConfigError):
            generate_dataset(TINY)

    def test_schedule_sidecar_round_trip(self, small_scenario, temp_test_dir):
        _, schedule = small_scenario
        path = schedule.write_csv(os.path.join(temp_test_dir, "schedule.csv"))
        assert AttackSchedule.read_csv(path) == schedule

    @pytest.mark.slow
    def test_default_scenario_fraction(self):
        rows, _ = generate_dataset(ScenarioConfig(seed=1))
        assert 0.61 <= legit_fraction(rows) <= 0.71
