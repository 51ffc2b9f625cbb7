"""
Tests for the candidate models, metrics, cross-validation, grid search,
importance and model files.
"""

import itertools
import math
import os
import unittest

import numpy as np
import pytest

from mldas.config.schema import GridConfig, ScenarioConfig
from mldas.errors import ArgumentError, SchemaError, TrainingError
from mldas.experiment import dataset_from_records, run_training
from mldas.ml import (
    DEFAULT_PARAMS,
    EvalReport,
    Hyperparams,
    ModelKind,
    classify,
    evaluate,
    fold_bounds,
    gini_importance,
    grid_search,
    kfold_cv,
    load_model,
    measure_latency,
    predict,
    rank_features,
    rmse,
    save_model,
    train,
)
from mldas.ml.linear import fit_linear
from mldas.ml.tree import fit_tree
from mldas.traffic.scenario import generate_dataset
from tests.conftest import fast_run_config

DTC = ModelKind.DT_CLASSIFIER
DTR = ModelKind.DT_REGRESSOR
RF = ModelKind.RF_CLASSIFIER
LR = ModelKind.LINEAR_REGRESSION

VOLUMETRIC_FEATURES = {"packets_per_flow", "interarrival_variance", "syn_count", "bytes_per_flow"}


def separable(n=200, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    return X, (X[:, 0] >= 0).astype(np.float64)


def best_depth2_accuracy(X, y):
    """Exhaustive search over depth <= 2 trees on binary features, majority leaves"""
    def leaf(rows):
        return max(int(y[rows].sum()), len(rows) - int(y[rows].sum())) if len(rows) else 0

    def split(rows, feature):
        return rows[X[rows, feature] <= 0.5], rows[X[rows, feature] > 0.5]

    rows = np.arange(len(y))
    best = leaf(rows)
    features = range(X.shape[1])
    for root in features:
        left, right = split(rows, root)
        for lf, rf in itertools.product([None, *features], repeat=2):
            correct = 0
            for part, child in ((left, lf), (right, rf)):
                if child is None:
                    correct += leaf(part)
                else:
                    correct += sum(leaf(p) for p in split(part, child))
            best = max(best, correct)
    return best / len(y)


@pytest.mark.unit
class TestMetrics(unittest.TestCase):

    def test_rmse_values(self):
        self.assertEqual(rmse([0.3, 0.7], [0.3, 0.7]), 0.0)
        self.assertEqual(rmse([1, 1, 1], [0, 0, 0]), 1.0)
        self.assertAlmostEqual(rmse([1, 0, 1], [1, 0, 0]), math.sqrt(1 / 3))
        self.assertEqual(rmse([0.2, 0.9], [1, 0]), rmse([1, 0], [0.2, 0.9]))

    def test_rmse_matches_direct_sum(self):
        rng = np.random.default_rng(12)
        for _ in range(1000):
            n = int(rng.integers(1, 51))
            h = rng.uniform(0.0, 1.0, n)
            y = rng.integers(0, 2, n).astype(np.float64)
            total = 0.0
            for a, b in zip(h, y):
                total += (a - b) ** 2
            self.assertAlmostEqual(rmse(h, y), math.sqrt(total / n), delta=1e-12)
            self.assertEqual(rmse(h, h), 0.0)

    def test_rmse_arguments(self):
        with self.assertRaises(ArgumentError):
            rmse([1, 2], [1])
        with self.assertRaises(ArgumentError):
            rmse([], [])

    def test_confusion_metrics(self):
        report = EvalReport(tp=9, fp=1, tn=9, fn=1, rmse=0.0)
        self.assertAlmostEqual(report.precision, 0.9)
        self.assertAlmostEqual(report.recall, 0.9)
        self.assertAlmostEqual(report.f1, 0.9)
        self.assertAlmostEqual(report.fpr, 0.1)
        self.assertAlmostEqual(report.accuracy, 0.9)
        self.assertEqual(report.total, 20)

    def test_no_positives(self):
        report = EvalReport.from_predictions([0, 0, 0], [0, 0, 0], 0.0)
        self.assertEqual(report.recall, 0.0)
        self.assertEqual(report.accuracy, 1.0)


@pytest.mark.unit
class TestModels(unittest.TestCase):

    def test_separable_tree_single_split(self):
        X = np.array([[-2.0], [-1.0], [-0.5], [0.0], [1.0], [3.0]])
        y = np.array([0, 0, 0, 1, 1, 1], dtype=np.float64)
        model = train(DTC, DEFAULT_PARAMS[DTC], X, y)
        self.assertEqual(model.structure.node_count, 3)
        self.assertAlmostEqual(model.structure.threshold[0], -0.25)
        np.testing.assert_array_equal(predict(model, X), y)
        np.testing.assert_array_equal(classify(model, X), y)

    def test_forest_size(self):
        X, y = separable()
        model = train(RF, Hyperparams(criterion="entropy", n_estimators=5), X, y, seed=3)
        self.assertEqual(len(model.structure), 5)
        self.assertTrue(set(np.unique(predict(model, X))) <= {0.0, 1.0})

    def test_forest_reproducible(self):
        X, y = separable()
        params = Hyperparams(criterion="gini", n_estimators=4)
        first = predict(train(RF, params, X, y, seed=8), X)
        np.testing.assert_array_equal(first, predict(train(RF, params, X, y, seed=8), X))

    def test_linear_exact_fit(self):
        x = np.arange(10, dtype=np.float64).reshape(-1, 1)
        model = fit_linear(x, 2 * x.ravel() + 1)
        self.assertLess(abs(model.coef[0] - 2), 1e-9)
        self.assertLess(abs(model.intercept - 1), 1e-9)

    def test_linear_normalize_is_affine(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(50, 3)) * [1, 100, 0.01]
        y = X @ np.array([2.0, -0.03, 40.0]) + 0.5
        plain = fit_linear(X, y, normalize=False)
        scaled = fit_linear(X, y, normalize=True)
        np.testing.assert_allclose(plain.predict(X), scaled.predict(X), atol=1e-6)

    def test_cutoff(self):
        x = np.array([[0.0], [1.0]])
        model = train(DTR, DEFAULT_PARAMS[DTR], x, np.array([0.49, 0.51]))
        np.testing.assert_allclose(predict(model, x), [0.49, 0.51])
        np.testing.assert_array_equal(classify(model, x), [0, 1])
        boundary = train(DTR, DEFAULT_PARAMS[DTR], x, np.array([0.5, 0.5]))
        self.assertEqual(int(classify(boundary, np.array([[0.0]]))[0]), 1)

    def test_regression_tree_outputs_leaf_means(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([0, 1, 1, 1], dtype=np.float64)
        model = train(DTR, DEFAULT_PARAMS[DTR], X, y)
        np.testing.assert_allclose(predict(model, X), [0.5, 0.5, 1.0, 1.0])

    def test_poisson_on_pure_zero_node(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        tree = fit_tree(X, np.array([0.0, 0.0, 1.0, 1.0]), criterion="poisson")
        self.assertEqual(tree.leaf_count, 2)
        self.assertTrue(np.all(np.isfinite(tree.impurity)))

    def test_training_errors(self):
        with self.assertRaises(TrainingError):
            train(DTC, DEFAULT_PARAMS[DTC], np.ones((5, 2)), np.array([0, 1, 0, 1, 0]))
        with self.assertRaises(TrainingError):
            train(DTC, DEFAULT_PARAMS[DTC], np.empty((0, 2)), np.empty(0))
        X, _ = separable(20)
        with self.assertRaises(TrainingError):
            train(RF, DEFAULT_PARAMS[RF], X, np.zeros(20))

    def test_arity_mismatch(self):
        X, y = separable()
        model = train(DTC, DEFAULT_PARAMS[DTC], X, y)
        with self.assertRaises(ArgumentError):
            predict(model, np.ones((2, 4)))

    def test_evaluate_perfect(self):
        X, y = separable()
        report = evaluate(train(DTC, DEFAULT_PARAMS[DTC], X, y), X, y)
        self.assertEqual(report.accuracy, 1.0)
        self.assertEqual(report.fpr, 0.0)
        self.assertEqual(report.total, len(y))


@pytest.mark.unit
class TestTreeProperties:

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_exhaustive_depth2_search(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 13))
        X = rng.integers(0, 2, size=(n, 2)).astype(np.float64)
        y = rng.integers(0, 2, size=n).astype(np.float64)
        if np.all(np.ptp(X, axis=0) == 0) or len(np.unique(y)) < 2:
            pytest.skip("degenerate draw")
        model = train(DTC, DEFAULT_PARAMS[DTC], X, y)
        accuracy = float(np.mean(predict(model, X) == y))
        assert accuracy == pytest.approx(best_depth2_accuracy(X, y))

    def test_row_order_invariance(self):
        rng = np.random.default_rng(5)
        X = rng.integers(0, 6, size=(60, 3)).astype(np.float64)
        y = ((X[:, 0] + X[:, 2]) > 5).astype(np.float64)
        order = rng.permutation(60)
        a = fit_tree(X, y)
        b = fit_tree(X[order], y[order])
        np.testing.assert_array_equal(a.feature, b.feature)
        np.testing.assert_array_equal(a.threshold, b.threshold)
        np.testing.assert_array_equal(a.value, b.value)


@pytest.mark.unit
class TestValidation(unittest.TestCase):

    def test_fold_bounds(self):
        self.assertEqual(fold_bounds(10, 3), [(0, 4), (4, 7), (7, 10)])
        with self.assertRaises(ArgumentError):
            fold_bounds(3, 4)
        with self.assertRaises(ArgumentError):
            fold_bounds(10, 1)

    def test_deterministic_model_repeats_scores(self):
        X, y = separable(120)
        result = kfold_cv(DTC, DEFAULT_PARAMS[DTC], X, y, k=10, seeds=3)
        self.assertEqual(len(result.scores), 30)
        self.assertEqual(result.scores[:10], result.scores[10:20])
        self.assertEqual(result.scores[:10], result.scores[20:])
        self.assertEqual(len(result.fold_frame(10)), 30)

    def test_grid_sizes(self):
        grid = GridConfig()
        self.assertEqual(len(grid.combinations(DTC)), 6)
        self.assertEqual(len(grid.combinations(DTR)), 12)
        self.assertEqual(len(grid.combinations(RF)), 6)
        self.assertEqual(len(grid.combinations(LR)), 4)

    def test_grid_best_is_argmin(self):
        X, y = separable(90)
        y[::7] = 1 - y[::7]
        result = grid_search(DTR, GridConfig().combinations(DTR), X, y, k=3, seeds=1)
        self.assertEqual(len(result.results), 12)
        best = result.best_result.mean
        self.assertTrue(all(best <= r.mean for r in result.results))
        self.assertEqual(int(result.table()["best"].sum()), 1)

    def test_singleton_grid(self):
        X, y = separable(60)
        only = Hyperparams(criterion="entropy", min_samples_split=3)
        self.assertEqual(grid_search(DTC, [only], X, y, k=3, seeds=1).best, only)
        with self.assertRaises(ArgumentError):
            grid_search(DTC, [], X, y)

    def test_parsimony_breaks_ties(self):
        # one pure split on feature 0 fits every fold, so both depths score alike
        X, y = separable(60)
        grid = [Hyperparams(criterion="mse", max_depth=4), Hyperparams(criterion="mse", max_depth=2)]
        result = grid_search(DTR, grid, X, y, k=3, seeds=1)
        self.assertEqual(result.results[0].mean, result.results[1].mean)
        self.assertEqual(result.best.max_depth, 2)

    def test_latency(self):
        X, y = separable(2000)
        dt_train, dt_pred = measure_latency(DTC, DEFAULT_PARAMS[DTC], X, y, X, repetitions=3)
        _, rf_pred = measure_latency(RF, Hyperparams(criterion="gini", n_estimators=10), X, y, X, repetitions=3)
        self.assertGreater(dt_train, 0)
        self.assertGreater(dt_pred, 0)
        self.assertGreaterEqual(rf_pred, dt_pred)
        self.assertEqual(len(measure_latency(LR, DEFAULT_PARAMS[LR], X, y, X, repetitions=1)), 2)


@pytest.mark.unit
class TestImportance(unittest.TestCase):

    def test_single_split(self):
        X = np.column_stack((np.arange(6.0), np.zeros(6) + np.arange(6) % 2 * 0.1))
        y = (X[:, 0] >= 3).astype(np.float64)
        model = train(DTC, DEFAULT_PARAMS[DTC], X, y)
        np.testing.assert_allclose(gini_importance(model), [1.0, 0.0])

    def test_forest_normalized(self):
        X, y = separable()
        importances = gini_importance(train(RF, Hyperparams(criterion="gini", n_estimators=6), X, y, seed=2))
        self.assertAlmostEqual(importances.sum(), 1.0, delta=1e-9)
        self.assertTrue(np.all(importances >= 0))

    def test_linear_has_no_importance(self):
        X, y = separable()
        with self.assertRaises(ArgumentError):
            gini_importance(train(LR, DEFAULT_PARAMS[LR], X, y))

    def test_ranking(self):
        ranked = rank_features([0.1, 0.6, 0.3], ["a", "b", "c"])
        self.assertEqual(list(ranked["feature"]), ["b", "c", "a"])
        self.assertEqual(list(ranked["rank"]), [1, 2, 3])


@pytest.mark.unit
def test_model_file_round_trip(temp_test_dir):
    X, y = separable()
    for kind in ModelKind:
        model = train(kind, DEFAULT_PARAMS[kind], X, y, seed=4)
        path = save_model(model, os.path.join(temp_test_dir, f"{kind.value}.json"))
        loaded = load_model(path)
        assert loaded.kind is kind
        np.testing.assert_allclose(predict(loaded, X), predict(model, X))


@pytest.mark.unit
def test_model_file_rejects_garbage(temp_test_dir):
    path = os.path.join(temp_test_dir, "broken.json")
    with open(path, "w", encoding="utf-8") as f:
        f.write("{not json")
    with pytest.raises(SchemaError):
        load_model(path)


@pytest.mark.integration
class TestOnGeneratedData:

    def test_trees_beat_linear_regression(self, training_outcome):
        tree = training_outcome.default_cv[DTC].mean
        linear = training_outcome.default_cv[LR].mean
        assert tree < linear

    def test_volumetric_features_rank_high(self, training_outcome):
        ranked = training_outcome.importances[DTC]
        assert ranked["importance"].sum() == pytest.approx(1.0)
        assert set(ranked["feature"].head(3)) <= VOLUMETRIC_FEATURES

    def test_held_out_accuracy(self, training_outcome):
        assert training_outcome.evaluations[DTC].accuracy > 0.9
        assert training_outcome.evaluations[RF].accuracy > 0.9


FULL_SCENARIO = ScenarioConfig(seed=1, legit_iterations=80)
TREES = (DTC, DTR, RF)


@pytest.fixture(scope="module")
def full_outcome():
    """Ten-fold training on a seed-fixed scenario of at least 20k records"""
    rows, schedule = generate_dataset(FULL_SCENARIO)
    assert len(rows) >= 20000
    config = fast_run_config(scenario=FULL_SCENARIO, cv_folds=10)
    return run_training(dataset_from_records(rows, schedule), config)


@pytest.mark.slow
@pytest.mark.integration
@pytest.mark.timeout(1800)
class TestFullSizeOrdering:

    def test_held_out_ordering(self, full_outcome):
        accuracy = {kind: report.accuracy for kind, report in full_outcome.evaluations.items()}
        for kind in TREES:
            assert accuracy[kind] >= 0.99, kind
        assert 0.80 <= accuracy[LR] < 0.99
        assert accuracy[LR] < min(accuracy[kind] for kind in TREES)

    def test_cv_separation(self, full_outcome):
        linear = full_outcome.default_cv[LR].mean
        for kind in TREES:
            assert 100 * full_outcome.default_cv[kind].mean <= linear, kind

    def test_top_features(self, full_outcome):
        ranked = full_outcome.importances[DTC]
        assert set(ranked["feature"].head(3)) <= VOLUMETRIC_FEATURES
