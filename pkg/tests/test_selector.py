"""
Tests for dynamic model selection: initial choice, rolling metrics,
triggers, hysteresis and replays under injected degradation.
"""

import functools
import os
import unittest

import numpy as np
import pytest

from mldas.config.schema import DegradationConfig, SelectorConfig, SelectorMode
from mldas.errors import MissingModelsError, SelectionError
from mldas.ml.kinds import ModelKind
from mldas.selector import (
    CandidateProfile,
    DegradationInjector,
    LabelQueue,
    SelectorState,
    derive_s_min,
    improvement,
    initial_select,
    load_candidates,
    needs_reevaluation,
    observe,
    reevaluate,
    replay,
    save_candidates,
)

DTC = ModelKind.DT_CLASSIFIER
DTR = ModelKind.DT_REGRESSOR
RF = ModelKind.RF_CLASSIFIER
LR = ModelKind.LINEAR_REGRESSION

CONFIG = SelectorConfig(s_min=0.01)


def measured_profiles():
    """Validation errors and latencies of the four candidates on a reference run"""
    return [
        CandidateProfile(DTC, 0.000984, 5.43, 0.1206),
        CandidateProfile(DTR, 0.000984, 7.55, 0.1303),
        CandidateProfile(RF, 0.000984, 20.1, 0.6778),
        CandidateProfile(LR, 0.232678, 1.20, 0.1246),
    ]


def state_with(pairs, current=DTC, **fields):
    state = SelectorState(current=current, window_w=200, s_min=0.01, **fields)
    state.buffer.extend(pairs)
    return state


def stream_for(n, seed=0):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    exact = labels.astype(np.float64)
    stream = {DTC: exact, DTR: exact.copy(), RF: exact.copy(), LR: 0.2 + 0.6 * exact}
    return stream, labels


@pytest.mark.unit
class TestInitialSelect(unittest.TestCase):

    def test_fastest_admitted_candidate(self):
        state = initial_select(measured_profiles(), CONFIG)
        self.assertIs(state.current, DTC)
        self.assertEqual((state.flows_processed, state.last_switch), (0, 0))

    def test_single_profile(self):
        self.assertIs(initial_select([CandidateProfile(RF, 0.001, 1.0, 1.0)], CONFIG).current, RF)

    def test_train_time_breaks_ties(self):
        profiles = [CandidateProfile(DTR, 0.001, 7.55, 0.12), CandidateProfile(RF, 0.001, 5.43, 0.12)]
        self.assertIs(initial_select(profiles, CONFIG).current, RF)

    def test_kind_order_breaks_remaining_ties(self):
        profiles = [CandidateProfile(RF, 0.001, 1.0, 0.1), CandidateProfile(DTR, 0.001, 1.0, 0.1)]
        self.assertIs(initial_select(profiles, CONFIG).current, DTR)

    def test_scale_consistent(self):
        scaled = [CandidateProfile(p.kind, p.rmse, p.train_time * 1000, p.pred_time * 1000)
                  for p in measured_profiles()]
        self.assertIs(initial_select(scaled, CONFIG).current, initial_select(measured_profiles(), CONFIG).current)

    def test_nothing_admitted(self):
        with self.assertRaises(SelectionError):
            initial_select([CandidateProfile(LR, 0.23, 1.0, 0.1)], CONFIG)
        with self.assertRaises(SelectionError):
            initial_select([], CONFIG)

    def test_derived_s_min(self):
        self.assertAlmostEqual(derive_s_min(measured_profiles(), SelectorConfig()), 0.01)
        profiles = [CandidateProfile(DTC, 0.004, 1.0, 1.0), CandidateProfile(LR, 0.4, 1.0, 1.0)]
        self.assertAlmostEqual(derive_s_min(profiles, SelectorConfig()), 0.04)


@pytest.mark.unit
class TestRollingMetrics(unittest.TestCase):

    def test_all_correct(self):
        state = observe(state_with([]), [1.0, 0.0, 1.0], [1, 0, 1], CONFIG)
        self.assertEqual(state.acc_roll, 1.0)
        self.assertEqual(state.rmse_roll, 0.0)
        self.assertEqual(state.flows_processed, 3)

    def test_window_keeps_newest(self):
        state = state_with([])
        observe(state, np.zeros(250), np.r_[np.ones(50), np.zeros(200)].astype(int), CONFIG)
        self.assertEqual(len(state.buffer), 200)
        self.assertEqual(state.acc_roll, 1.0)

    def test_two_errors_in_hundred(self):
        labels = np.zeros(100, dtype=int)
        predictions = np.zeros(100)
        predictions[:2] = 1.0
        state = observe(state_with([]), predictions, labels, CONFIG)
        self.assertAlmostEqual(state.acc_roll, 0.98)

    def test_shadow_buffers(self):
        state = observe(state_with([]), {DTC: [1.0, 0.0], RF: [0.0, 0.0]}, [1, 0], CONFIG)
        self.assertEqual(state.rmse_of(DTC), 0.0)
        self.assertAlmostEqual(state.rmse_of(RF), np.sqrt(0.5))


@pytest.mark.unit
class TestTriggers(unittest.TestCase):

    def test_periodic(self):
        state = state_with([(1.0, 1)] * 10, flows_processed=400)
        self.assertEqual(needs_reevaluation(state, CONFIG), (True, "periodic"))

    def test_accuracy(self):
        pairs = [(0.0, 0)] * 195 + [(0.6, 0)] * 5
        state = state_with(pairs, flows_processed=150, rmse_current=1.0)
        self.assertAlmostEqual(state.acc_roll, 0.975)
        self.assertEqual(needs_reevaluation(state, CONFIG), (True, "accuracy"))

    def test_rmse(self):
        state = state_with([(0.3, 0)] * 200, flows_processed=150)
        due, reason = needs_reevaluation(state, CONFIG)
        self.assertTrue(due)
        self.assertIn("rmse", reason)

    def test_quiet(self):
        state = state_with([(1.0, 1)] * 100, flows_processed=150)
        self.assertEqual(needs_reevaluation(state, CONFIG), (False, ""))

    def test_mode_gates(self):
        state = state_with([(0.3, 0)] * 200, flows_processed=400)
        periodic = CONFIG.model_copy(update={"mode": SelectorMode.PERIODIC})
        event = CONFIG.model_copy(update={"mode": SelectorMode.EVENT})
        self.assertEqual(needs_reevaluation(state, periodic), (True, "periodic"))
        self.assertEqual(needs_reevaluation(state, event), (True, "rmse"))
        state.buffer.extend([(0.9, 0)] * 10)
        self.assertEqual(needs_reevaluation(state, event), (True, "rmse+accuracy"))


@pytest.mark.unit
class TestHysteresis(unittest.TestCase):

    def live(self, current_rmse, best_rmse):
        return [CandidateProfile(DTC, best_rmse, 5.43, 0.1206), CandidateProfile(RF, current_rmse, 20.1, 0.6778)]

    def test_dwell_blocks_switch(self):
        state = state_with([], current=RF, flows_processed=400)
        reevaluate(state, self.live(0.008, 0.004), CONFIG)
        self.assertIs(state.current, RF)
        self.assertEqual(state.switch_log, [])

    def test_small_improvement_blocks_switch(self):
        state = state_with([], current=RF, flows_processed=700)
        reevaluate(state, self.live(0.0050, 0.0048), CONFIG)
        self.assertIs(state.current, RF)

    def test_switch(self):
        state = state_with([], current=RF, flows_processed=700)
        reevaluate(state, self.live(0.0050, 0.0045), CONFIG, reason="accuracy")
        self.assertIs(state.current, DTC)
        self.assertEqual(state.last_switch, 700)
        self.assertAlmostEqual(state.rmse_current, 0.0045)
        event = state.switch_log[0]
        self.assertEqual((event.flow_counter, event.from_kind, event.to_kind, event.reason),
                         (700, RF, DTC, "accuracy"))

    def test_no_admitted_candidate_keeps_current(self):
        state = state_with([], current=RF, flows_processed=700)
        reevaluate(state, self.live(0.5, 0.4), CONFIG)
        self.assertIs(state.current, RF)

    def test_improvement(self):
        a = CandidateProfile(DTC, 0.1, 1.0, 0.6778)
        self.assertEqual(improvement(a, a), 0.0)
        self.assertAlmostEqual(improvement(CandidateProfile(DTC, 0.08, 1.0, 0.5), a), 0.2)
        fast = CandidateProfile(DTR, 0.1, 1.0, 0.1206)
        self.assertAlmostEqual(improvement(fast, a), (0.6778 - 0.1206) / 0.6778)
        self.assertEqual(improvement(a, fast), 0.0)


@pytest.mark.unit
class TestLabelQueue(unittest.TestCase):

    def test_lag(self):
        queue = LabelQueue(lag=3)
        queue.push({DTC: np.arange(5.0)}, [0, 1, 0, 1, 0])
        predictions, labels = queue.release()
        np.testing.assert_array_equal(predictions[DTC], [0.0, 1.0])
        np.testing.assert_array_equal(labels, [0, 1])
        self.assertEqual(len(queue), 3)
        self.assertIsNone(queue.release())


REPLAY_FLOWS = 20000
REPLAY_BATCH = 100


@functools.lru_cache(maxsize=None)
def degraded_replay(seed):
    """Replay of a perfect stream with error bursts injected into both trees"""
    stream, labels = stream_for(REPLAY_FLOWS, seed)
    profiles = measured_profiles()
    injector = DegradationInjector(DegradationConfig(enabled=True), seed)
    state = initial_select(profiles, CONFIG)
    return replay(state, profiles, stream, labels, CONFIG, REPLAY_BATCH, injector), injector


@pytest.mark.unit
class TestReplay:

    @pytest.mark.parametrize("seed", range(100))
    def test_degradation_falls_back_to_forest(self, seed):
        result, injector = degraded_replay(seed)
        log = result.state.switch_log
        period = injector.config.period
        first_burst = next(start for start in range(injector.offset, REPLAY_FLOWS, period)
                           if start >= CONFIG.t_dwell)
        assert log[0].to_kind is RF
        assert log[0].flow_counter <= first_burst + CONFIG.window_w + REPLAY_BATCH
        assert all(event.from_kind is not event.to_kind for event in log)

    @pytest.mark.parametrize("seed", range(100))
    def test_switch_spacing(self, seed):
        result, _ = degraded_replay(seed)
        spacing = result.switch_spacing()
        assert all(gap >= CONFIG.t_dwell for gap in spacing)
        assert 1000 <= np.mean(spacing) <= 3000
        assert result.state.flows_processed >= result.state.last_switch

    def test_stationary_stream_never_switches(self):
        stream, labels = stream_for(100000, 1)
        stream = {kind: stream[DTC] for kind in stream}
        periodic = CONFIG.model_copy(update={"mode": SelectorMode.PERIODIC})
        profiles = measured_profiles()
        result = replay(initial_select(profiles, periodic), profiles, stream, labels, periodic, 1000)
        assert result.state.switch_log == []
        assert result.state.reevaluations > 0

    def test_without_degradation_nothing_happens(self):
        stream, labels = stream_for(5000)
        profiles = measured_profiles()
        result = replay(initial_select(profiles, CONFIG), profiles, stream, labels, CONFIG)
        assert result.state.switch_log == []
        assert set(result.active) == {DTC}
        np.testing.assert_array_equal(result.predictions, labels)


@pytest.mark.unit
def test_candidates_file(temp_test_dir):
    path = save_candidates(measured_profiles(), os.path.join(temp_test_dir, "models.json"))
    assert load_candidates(temp_test_dir) == measured_profiles()
    assert load_candidates(path)[0].kind is DTC
    with pytest.raises(MissingModelsError):
        load_candidates(os.path.join(temp_test_dir, "nothing-here"))
