"""
Tests for dataset preparation, per-flow features, the chronological
split and balanced batching.
"""

import unittest

import numpy as np
import pandas as pd
import pytest

from mldas.config.schema import SplitSpec
from mldas.errors import BalanceError, ConfigError, OrderingError, SchemaError, SplitError
from mldas.features import (
    FEATURE_COLUMNS,
    FeatureBuilder,
    Observation,
    batch_indices,
    balanced_batches,
    build_matrix,
    check_sorted,
    chronological_split,
    correlation_report,
    extract_features,
    observations_from_frame,
    observations_from_records,
    prepare,
)
from mldas.flows.dataset import Schema
from mldas.flows.model import PREPARED_COLUMNS, TCP, TCP_SYN, FlowKey
from mldas.traffic.schedule import AttackEntry, AttackKind, AttackSchedule
from tests.factories import FlowKeyFactory, FlowRecordFactory, records_of_flow

SEC = 1_000_000_000


def labelled_rows(labels):
    return [FlowRecordFactory(timestamp=(i + 1) * SEC, label=label) for i, label in enumerate(labels)]


@pytest.mark.unit
class TestPrepare(unittest.TestCase):

    def test_single_row(self):
        prepared = prepare([FlowRecordFactory()])
        self.assertEqual(prepared[0].inner_time_flow, 0.0)
        self.assertEqual(tuple(prepared[0].to_row()), PREPARED_COLUMNS)

    def test_gap_between_rows(self):
        rows = [FlowRecordFactory(timestamp=SEC), FlowRecordFactory(timestamp=SEC + SEC // 2)]
        self.assertEqual([row.inner_time_flow for row in prepare(rows)], [0.0, 0.5])

    def test_addresses_encoded(self):
        row = prepare([FlowRecordFactory(key=FlowKey("10.0.0.3", 1, "10.0.0.2", 80, TCP))])[0]
        self.assertEqual((row.ip_src, row.ip_dst), (167772163, 167772162))

    def test_idempotent(self):
        once = prepare(labelled_rows([0, 1, 0]))
        self.assertEqual(prepare(once), once)

    def test_unsorted_rows(self):
        rows = [FlowRecordFactory(timestamp=2 * SEC), FlowRecordFactory(timestamp=SEC)]
        with self.assertRaises(OrderingError):
            prepare(rows)
        with self.assertRaises(OrderingError):
            check_sorted(rows)


@pytest.mark.unit
class TestExtractFeatures(unittest.TestCase):

    def test_one_record_flow(self):
        records = records_of_flow(FlowKeyFactory(), [SEC], [4])
        vector = extract_features({records[0].flow_id: records})[records[0].flow_id]
        self.assertEqual(vector.interarrival_mean, 0.0)
        self.assertEqual(vector.interarrival_variance, 0.0)
        self.assertEqual(vector.packets_per_flow, 4)
        self.assertEqual(vector.avg_packet_size, 60)

    def test_constant_gaps(self):
        records = records_of_flow(FlowKeyFactory(), [SEC, 2 * SEC, 3 * SEC, 4 * SEC], [1, 2, 3, 4])
        vector = extract_features({records[0].flow_id: records})[records[0].flow_id]
        self.assertAlmostEqual(vector.interarrival_mean, 1.0)
        self.assertAlmostEqual(vector.interarrival_variance, 0.0)

    def test_population_variance(self):
        records = records_of_flow(FlowKeyFactory(), [SEC, 2 * SEC, 5 * SEC], [1, 2, 3])
        vector = extract_features({records[0].flow_id: records})[records[0].flow_id]
        self.assertAlmostEqual(vector.interarrival_mean, 2.0)
        self.assertAlmostEqual(vector.interarrival_variance, 1.0)
        self.assertAlmostEqual(vector.flow_duration, 5.0)

    def test_flag_counts(self):
        key = FlowKey("10.0.0.3", 4000, "10.0.0.2", 80, TCP)
        records = records_of_flow(key, [SEC, 2 * SEC], [1, 2], flags=TCP_SYN)
        vector = extract_features({records[0].flow_id: records})[records[0].flow_id]
        self.assertEqual((vector.syn_count, vector.ack_count, vector.fin_count), (2, 0, 0))

    def test_directionality(self):
        forward = FlowKey("10.0.0.3", 4000, "10.0.0.2", 80, TCP)
        one_way = FlowKey("10.0.0.4", 4001, "10.0.0.2", 80, TCP)
        out = records_of_flow(forward, [SEC, 2 * SEC], [5, 10])
        back = records_of_flow(forward.reverse(), [SEC + 1, 2 * SEC + 1], [3, 5])
        lone = records_of_flow(one_way, [SEC], [7])
        vectors = extract_features({out[0].flow_id: out, back[0].flow_id: back, lone[0].flow_id: lone})
        self.assertAlmostEqual(vectors[out[0].flow_id].directionality_ratio, 2.0)
        self.assertAlmostEqual(vectors[back[0].flow_id].directionality_ratio, 0.5)
        self.assertEqual(vectors[lone[0].flow_id].directionality_ratio, 0.0)

    def test_empty_group_skipped(self):
        records = records_of_flow(FlowKeyFactory(), [SEC], [1])
        with self.assertLogs("mldas.features.extract", level="WARNING"):
            vectors = extract_features({7: [], records[0].flow_id: records})
        self.assertEqual(list(vectors), [records[0].flow_id])


@pytest.mark.unit
class TestFeatureBuilder:

    def test_matrix_shape(self, small_scenario):
        rows, _ = small_scenario
        X, y = build_matrix(list(observations_from_records(rows[:500])))
        assert X.shape == (500, len(FEATURE_COLUMNS))
        assert set(np.unique(y)) <= {0.0, 1.0}
        assert not np.isnan(X).any()

    def test_online_matches_offline(self, small_scenario):
        rows, _ = small_scenario
        X, _ = build_matrix(list(observations_from_records(rows[:300])))
        builder = FeatureBuilder()
        online = np.vstack([builder.update(Observation.of(row)).as_array() for row in rows[:300]])
        np.testing.assert_array_equal(online, X)

    def test_new_flow_episode_restarts(self):
        key = FlowKeyFactory()
        first = records_of_flow(key, [SEC, 2 * SEC], [1, 2], install_ns=0)
        second = records_of_flow(key, [10 * SEC], [1], install_ns=9 * SEC + SEC // 2)
        builder = FeatureBuilder()
        vectors = [builder.update(Observation.of(r)) for r in first + second]
        assert vectors[1].interarrival_mean == pytest.approx(1.0)
        assert vectors[2].interarrival_mean == 0.0
        assert vectors[2].inner_time_flow == pytest.approx(8.0)

    def test_idle_flows_are_evicted(self):
        quiet = records_of_flow(FlowKeyFactory(), [SEC], [1])
        later = records_of_flow(FlowKeyFactory(), [30 * SEC], [1], install_ns=29 * SEC)
        builder = FeatureBuilder()
        builder.update(Observation.of(quiet[0]))
        assert len(builder) == 1
        builder.update(Observation.of(later[0]))
        assert len(builder) == 1
        assert builder.evict(60 * SEC) == 1
        assert len(builder) == 0

    def test_hard_timeout_restarts_state(self):
        seconds = range(1, 102)
        records = records_of_flow(FlowKeyFactory(), [s * SEC for s in seconds], list(seconds))
        builder = FeatureBuilder()
        vectors = [builder.update(Observation.of(r)) for r in records]
        assert vectors[99].interarrival_mean == pytest.approx(1.0)
        assert vectors[100].interarrival_mean == 0.0
        assert len(builder) == 1

    def test_prepared_dataset_rejected_for_training(self):
        frame = pd.DataFrame(columns=list(PREPARED_COLUMNS))
        with pytest.raises(SchemaError):
            observations_from_frame(frame, Schema.PREPARED)


@pytest.mark.unit
class TestChronologicalSplit(unittest.TestCase):

    def test_floor_arithmetic(self):
        rows = labelled_rows([0, 1] * 5)
        result = chronological_split(rows, SplitSpec(tolerance_pp=100))
        self.assertEqual(result.sizes, (7, 3))
        self.assertEqual(result.train + result.test, rows)
        self.assertLessEqual(result.train[-1].timestamp, result.test[0].timestamp)

    def test_frame_rows(self):
        frame = pd.DataFrame({"timestamp": np.arange(10) * SEC, "label": [0, 0, 1] * 3 + [0]})
        result = chronological_split(frame, SplitSpec(tolerance_pp=100))
        self.assertEqual(len(result.train), 7)
        self.assertAlmostEqual(result.global_legit_fraction, 0.7)

    def test_ratio_drift(self):
        with self.assertRaises(SplitError):
            chronological_split(labelled_rows([0] * 7 + [1] * 3))

    def test_unsorted(self):
        rows = list(reversed(labelled_rows([0, 0, 0])))
        with self.assertRaises(OrderingError):
            chronological_split(rows, SplitSpec(tolerance_pp=100))

    def test_session_straddling_boundary(self):
        rows = labelled_rows([0, 1] * 5)
        entry = AttackEntry(AttackKind.UDP_FLOOD, "10.0.0.1", "10.0.0.2", 6.5, 8.5)
        spec = SplitSpec(tolerance_pp=100)
        with self.assertRaises(SplitError) as ctx:
            chronological_split(rows, spec, AttackSchedule([entry]))
        self.assertEqual(ctx.exception.session, entry.session)

        relaxed = spec.model_copy(update={"check_sessions": False})
        self.assertEqual(chronological_split(rows, relaxed, AttackSchedule([entry])).sizes, (7, 3))


@pytest.mark.unit
class TestBalancedBatches(unittest.TestCase):

    def setUp(self):
        self.labels = [0] * 20 + [1] * 6

    def test_one_to_one(self):
        batches = batch_indices(self.labels, 10, seed=4)
        self.assertEqual(len(batches), 4)
        for batch in batches:
            labels = np.asarray(self.labels)[batch]
            self.assertEqual((int((labels == 0).sum()), int((labels == 1).sum())), (5, 5))

    def test_majority_without_replacement(self):
        batches = batch_indices(self.labels, 10, seed=4)
        majority = [i for batch in batches for i in batch if self.labels[i] == 0]
        self.assertEqual(len(majority), len(set(majority)))

    def test_deterministic(self):
        first = batch_indices(self.labels, 10, seed=9)
        second = batch_indices(self.labels, 10, seed=9)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_row_batches(self):
        rows = labelled_rows(self.labels)
        batches = balanced_batches(rows, 4, seed=1)
        self.assertTrue(all(sum(row.label for row in batch) == 2 for batch in batches))

    def test_bad_batch_size(self):
        with self.assertRaises(ConfigError):
            batch_indices(self.labels, 9)

    def test_missing_class(self):
        with self.assertRaises(BalanceError):
            batch_indices([0] * 10, 4)


@pytest.mark.unit
def test_correlation_report_pairs():
    frame = pd.DataFrame({"a": [1.0, 2.0, 3.0, 4.0], "b": [2.0, 4.0, 6.0, 8.0], "c": [1.0] * 4})
    report = correlation_report(frame)
    assert list(zip(report["feature_a"], report["feature_b"])) == [("a", "b"), ("a", "c"), ("b", "c")]
    assert report["abs_r"].iloc[0] == pytest.approx(1.0)
    assert report["abs_r"].iloc[1:].isna().all()
