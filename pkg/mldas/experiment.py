"""
Training pipeline: dataset, features, chronological split, cross-validation,
grid search, held-out evaluation and the candidate profiles the selector
starts from.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config.schema import RunConfig, SelectorPolicy
from .features.correlation import correlation_report
from .features.extract import (
    FEATURE_COLUMNS,
    build_matrix,
    feature_frame,
    observations_from_frame,
    observations_from_records,
)
from .features.split import SplitResult, batch_indices, chronological_split
from .flows.dataset import read_frame
from .flows.model import FlowRecord
from .ml.importance import gini_importance, rank_features
from .ml.kinds import DEFAULT_PARAMS, ModelKind
from .ml.metrics import EvalReport, rmse
from .ml.models import TrainedModel, evaluate, predict, train
from .ml.validation import CVResult, GridResult, grid_search, kfold_cv, measure_latency
from .selector.degradation import DegradationInjector
from .selector.mldas import initial_select, pinned_state
from .selector.replay import replay
from .selector.state import CandidateProfile
from .traffic.scenario import generate_dataset
from .traffic.schedule import AttackSchedule

logger = logging.getLogger(__name__)

IMPORTANCE_KINDS = (ModelKind.RF_CLASSIFIER, ModelKind.DT_CLASSIFIER)


@dataclass
class Dataset:
    """A labelled capture turned into the feature matrix, rows in time order"""
    rows: object
    X: np.ndarray
    y: np.ndarray
    schedule: Optional[AttackSchedule] = None

    def __len__(self) -> int:
        return len(self.y)


def dataset_from_records(records: Sequence[FlowRecord], schedule: Optional[AttackSchedule] = None) -> Dataset:
    X, y = build_matrix(list(observations_from_records(records)))
    return Dataset(list(records), X, y, schedule)


def load_dataset(path: str, schedule_path: Optional[str] = None, subnet: str = "10.0.0.0/24") -> Dataset:
    """
    Dataset from a raw CSV, with its optional schedule sidecar.

    Raises:
        ConfigError: no file at path
        SchemaError: the header matches neither schema, or the file is a
            prepared dataset
    """
    frame, schema = read_frame(path)
    X, y = build_matrix(observations_from_frame(frame, schema))
    schedule = AttackSchedule.read_csv(schedule_path, subnet) if schedule_path else None
    logger.info(f"Loaded {len(frame)} {schema.value} rows from {path}")
    return Dataset(frame, X, y, schedule)


def generated_dataset(config: RunConfig) -> Dataset:
    records, schedule = generate_dataset(config.scenario)
    return dataset_from_records(records, schedule)


@dataclass
class TrainingOutcome:
    split: SplitResult
    default_cv: Dict[ModelKind, CVResult] = field(default_factory=dict)
    grids: Dict[ModelKind, GridResult] = field(default_factory=dict)
    models: Dict[ModelKind, TrainedModel] = field(default_factory=dict)
    evaluations: Dict[ModelKind, EvalReport] = field(default_factory=dict)
    latencies: Dict[ModelKind, Tuple[float, float]] = field(default_factory=dict)
    importances: Dict[ModelKind, pd.DataFrame] = field(default_factory=dict)
    profiles: List[CandidateProfile] = field(default_factory=list)
    correlation: Optional[pd.DataFrame] = None
    baselines: Optional[pd.DataFrame] = None

    def evaluation_frame(self) -> pd.DataFrame:
        rows = []
        for kind, report in self.evaluations.items():
            train_time, pred_time = self.latencies.get(kind, (float("nan"), float("nan")))
            row = {"model": kind.value}
            row.update(report.as_dict())
            row.update(train_time=train_time, pred_time=pred_time)
            rows.append(row)
        return pd.DataFrame(rows)

    def rmse_comparison(self) -> pd.DataFrame:
        """Default against tuned mean CV RMSE per model"""
        rows = []
        for kind, grid in self.grids.items():
            default = self.default_cv.get(kind)
            tuned = grid.best_result
            rows.append({
                "model": kind.value,
                "default_rmse": default.mean if default else float("nan"),
                "tuned_rmse": tuned.mean,
                "tuned_params": grid.best.label(kind),
            })
        return pd.DataFrame(rows)


def training_rows(dataset: Dataset, config: RunConfig) -> Tuple[SplitResult, np.ndarray, np.ndarray,
                                                                 np.ndarray, np.ndarray]:
    """
    Chronological split of the dataset's feature rows, optionally
    rebalanced into 1:1 batches for training.

    Returns:
        tuple: (split, X_train, y_train, X_test, y_test)
    """
    split = chronological_split(dataset.rows, config.split, dataset.schedule)
    n_train = len(split.train)
    X_train, y_train = dataset.X[:n_train], dataset.y[:n_train]
    X_test, y_test = dataset.X[n_train:], dataset.y[n_train:]
    if config.split.balanced_batch_size:
        batches = batch_indices(y_train.astype(np.int64), config.split.balanced_batch_size, config.seeds[0])
        order = np.concatenate(batches)
        X_train, y_train = X_train[order], y_train[order]
        logger.info(f"Training on {len(batches)} balanced batches ({len(order)} rows)")
    return split, X_train, y_train, X_test, y_test


def static_baselines(profiles: Sequence[CandidateProfile], X: np.ndarray, y: np.ndarray,
                     config: RunConfig) -> pd.DataFrame:
    """
    Replay the held-out stream under the dynamic policy and with each
    candidate pinned, under the same degradation bursts.
    """
    stream = {profile.kind: predict(profile.model, X) for profile in profiles}
    selector = config.selector.model_copy(update={"policy": SelectorPolicy.DYNAMIC})
    pinned = selector.model_copy(update={"policy": SelectorPolicy.STATIC})

    runs = [("dynamic", initial_select(profiles, selector), selector)]
    runs += [(f"static:{profile.kind.value}", pinned_state(profiles, profile.kind, pinned), pinned)
             for profile in profiles]
    rows = []
    for policy, state, selector_config in runs:
        injector = DegradationInjector(config.degradation, config.seeds[0])
        result = replay(state, profiles, stream, y, selector_config, config.monitor.min_batch, injector)
        outputs = result.predictions
        rows.append({
            "policy": policy,
            "final_model": state.current.value,
            "accuracy": float(np.mean((outputs >= 0.5) == (y >= 0.5))),
            "rmse": rmse(outputs, y),
            "switches": len(state.switch_log),
        })
    return pd.DataFrame(rows)


def run_training(dataset: Dataset, config: RunConfig, progress: bool = False) -> TrainingOutcome:
    """
    Cross-validate the default candidates, grid-search each family, fit the
    tuned models on the training partition and score them on the test one.

    Raises:
        SplitError: the chronological split is unbalanced or cuts a session
        TrainingError: a partition cannot be fitted
    """
    split, X_train, y_train, X_test, y_test = training_rows(dataset, config)
    outcome = TrainingOutcome(split)
    k, seeds = config.cv_folds, config.seeds
    names = list(FEATURE_COLUMNS)

    outcome.correlation = correlation_report(feature_frame(X_train))
    for kind in ModelKind:
        outcome.default_cv[kind] = kfold_cv(kind, DEFAULT_PARAMS[kind], X_train, y_train, k, seeds, progress)
        grid = grid_search(kind, config.grid.combinations(kind), X_train, y_train, k, seeds, progress)
        outcome.grids[kind] = grid

        model = train(kind, grid.best, X_train, y_train, names, seed=seeds[0])
        outcome.models[kind] = model
        outcome.evaluations[kind] = evaluate(model, X_test, y_test)
        outcome.latencies[kind] = measure_latency(kind, grid.best, X_train, y_train, X_test,
                                                  config.latency_repetitions, seeds[0])
        train_time, pred_time = outcome.latencies[kind]
        outcome.profiles.append(CandidateProfile(kind, grid.best_result.mean, train_time, pred_time, model))
        logger.info(
            f"{kind.value}: CV RMSE {grid.best_result.mean:.6g}, "
            f"test accuracy {outcome.evaluations[kind].accuracy:.4f}"
        )

    for kind in IMPORTANCE_KINDS:
        outcome.importances[kind] = rank_features(gini_importance(outcome.models[kind]), names)
    outcome.baselines = static_baselines(outcome.profiles, X_test, y_test, config)
    return outcome
