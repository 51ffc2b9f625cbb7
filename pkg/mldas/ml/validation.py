"""
Chronological k-fold cross-validation, grid search and latency measurement.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..errors import ArgumentError
from .kinds import CLASSIFIER_CRITERIA, REGRESSOR_CRITERIA, Hyperparams, ModelKind
from .metrics import rmse
from .models import predict, train

logger = logging.getLogger(__name__)

Seeds = Union[int, Sequence[int]]


def _seed_list(seeds: Seeds) -> List[int]:
    if isinstance(seeds, (int, np.integer)):
        if seeds < 1:
            raise ArgumentError(f"Need at least one seed, got {seeds}")
        return list(range(1, int(seeds) + 1))
    seeds = [int(seed) for seed in seeds]
    if not seeds:
        raise ArgumentError("Need at least one seed")
    return seeds


def fold_bounds(n: int, k: int) -> List[Tuple[int, int]]:
    """[start, stop) of k contiguous folds; the first n % k folds hold one extra row"""
    if k < 2:
        raise ArgumentError(f"k-fold needs k >= 2, got {k}")
    if k > n:
        raise ArgumentError(f"Cannot make {k} folds from {n} rows")
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    stops = np.cumsum(sizes)
    return [(int(stop - size), int(stop)) for size, stop in zip(sizes, stops)]


@dataclass
class CVResult:
    kind: ModelKind
    params: Hyperparams
    seeds: List[int]
    scores: List[float] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores))

    @property
    def std(self) -> float:
        return float(np.std(self.scores))

    def fold_frame(self, k: int) -> pd.DataFrame:
        """One row per fold and seed"""
        return pd.DataFrame({
            "model": self.kind.value,
            "seed": np.repeat(self.seeds, k),
            "fold": np.tile(np.arange(1, k + 1), len(self.seeds)),
            "rmse": self.scores,
        })


def kfold_cv(kind: ModelKind, params: Hyperparams, X, y, k: int = 10, seeds: Seeds = 3,
             progress: bool = False) -> CVResult:
    """
    RMSE on each of k contiguous folds, repeated per seed.

    Seeds only reach the random forest; the deterministic kinds are fitted
    once per fold and their scores repeated for every seed.

    Returns:
        CVResult with k * len(seeds) scores, seed-major
    """
    kind = ModelKind.parse(kind)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    bounds = fold_bounds(len(y), k)
    seed_list = _seed_list(seeds)
    stochastic = kind is ModelKind.RF_CLASSIFIER
    result = CVResult(kind, params, seed_list)

    runs = seed_list if stochastic else seed_list[:1]
    per_seed: List[List[float]] = []
    steps = tqdm(total=len(runs) * k, desc=f"CV {kind.value}", ncols=100, leave=False, disable=not progress)
    for seed in runs:
        scores = []
        for start, stop in bounds:
            mask = np.ones(len(y), dtype=bool)
            mask[start:stop] = False
            model = train(kind, params, X[mask], y[mask], seed=seed)
            scores.append(rmse(predict(model, X[start:stop]), y[start:stop]))
            steps.update(1)
        per_seed.append(scores)
    steps.close()

    if not stochastic:
        per_seed = per_seed * len(seed_list)
    result.scores = [score for scores in per_seed for score in scores]
    logger.debug(f"CV {kind.value} ({params.label(kind)}): mean {result.mean:.6g}, std {result.std:.6g}")
    return result


def _parsimony_key(kind: ModelKind, params: Hyperparams, order: int):
    criteria = REGRESSOR_CRITERIA if kind is ModelKind.DT_REGRESSOR else CLASSIFIER_CRITERIA
    estimators = params.n_estimators if kind is ModelKind.RF_CLASSIFIER else 0
    depth = math.inf if params.max_depth is None else params.max_depth
    criterion = criteria.index(params.criterion) if params.criterion in criteria else len(criteria)
    return estimators, depth, criterion, order


@dataclass
class GridResult:
    kind: ModelKind
    best: Hyperparams
    results: List[CVResult]

    @property
    def best_result(self) -> CVResult:
        return next(result for result in self.results if result.params == self.best)

    def table(self) -> pd.DataFrame:
        """One row per grid point, in grid order"""
        rows = []
        for result in self.results:
            row = {"model": self.kind.value}
            row.update(result.params.relevant(self.kind))
            row.update(mean_rmse=result.mean, std_rmse=result.std, best=result.params == self.best)
            rows.append(row)
        return pd.DataFrame(rows)


def grid_search(kind: ModelKind, grid: Sequence[Hyperparams], X, y, k: int = 10, seeds: Seeds = 3,
                progress: bool = False) -> GridResult:
    """
    Cross-validate every grid point and keep the lowest mean RMSE.

    Means equal to 12 decimals are broken towards the simpler model: fewer
    estimators, then shallower depth, then the first-listed criterion, then
    grid order.
    """
    kind = ModelKind.parse(kind)
    if not grid:
        raise ArgumentError(f"Empty grid for {kind.value}")
    results = []
    for params in tqdm(grid, desc=f"Grid {kind.value}", ncols=100, disable=not progress):
        results.append(kfold_cv(kind, params, X, y, k, seeds))

    ranked = sorted(
        range(len(results)),
        key=lambda i: (round(results[i].mean, 12),) + _parsimony_key(kind, results[i].params, i),
    )
    best = results[ranked[0]].params
    logger.info(f"Grid search {kind.value}: best ({best.label(kind)}) mean RMSE {results[ranked[0]].mean:.6g}")
    return GridResult(kind, best, results)


def measure_latency(kind: ModelKind, params: Hyperparams, X_train, y_train, X_eval,
                    repetitions: int = 5, seed: int = 0) -> Tuple[float, float]:
    """
    Median wall-clock seconds to train on X_train and to predict X_eval.

    Returns:
        tuple: (train_time, pred_time)
    """
    if repetitions < 1:
        raise ArgumentError("repetitions must be >= 1")
    X_eval = np.asarray(X_eval, dtype=np.float64)
    if len(X_eval) == 0:
        raise ArgumentError("measure_latency needs a nonempty evaluation set")
    train_times, pred_times = [], []
    model = None
    for _ in range(repetitions):
        started = time.perf_counter()
        model = train(kind, params, X_train, y_train, seed=seed)
        train_times.append(time.perf_counter() - started)
    for _ in range(repetitions):
        started = time.perf_counter()
        predict(model, X_eval)
        pred_times.append(time.perf_counter() - started)
    return float(np.median(train_times)), float(np.median(pred_times))
