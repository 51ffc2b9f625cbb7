"""
The four candidate models behind one train / predict / classify / evaluate
interface.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ArgumentError, TrainingError
from .forest import Forest, fit_forest
from .kinds import Hyperparams, ModelKind
from .linear import LinearModel, fit_linear
from .metrics import EvalReport, rmse
from .tree import Tree, fit_tree

logger = logging.getLogger(__name__)

CLASS_THRESHOLD = 0.5

Structure = Union[Tree, Forest, LinearModel]


@dataclass(frozen=True)
class TrainedModel:
    """A fitted candidate. Immutable once trained, safe to share."""
    kind: ModelKind
    params: Hyperparams
    structure: Structure
    feature_names: Tuple[str, ...]
    seed: int = 0
    threshold: float = CLASS_THRESHOLD

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def name(self) -> str:
        return self.kind.value

    def __repr__(self) -> str:
        return f"TrainedModel({self.kind.value}, {self.params.label(self.kind)})"


def _check_matrix(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or len(X) == 0:
        raise TrainingError(f"Training needs a nonempty (n, p) matrix, got shape {X.shape}")
    if len(X) != len(y):
        raise TrainingError(f"Got {len(X)} rows but {len(y)} labels")
    if len(X) < 2:
        raise TrainingError("Training needs at least 2 rows")
    if np.all(np.ptp(X, axis=0) == 0):
        raise TrainingError("Every feature column is constant")
    if not np.all(np.isfinite(X)):
        raise TrainingError("Feature matrix holds NaN or infinite values")


def train(kind: ModelKind, params: Hyperparams, X, y, feature_names: Optional[Sequence[str]] = None,
          seed: int = 0) -> TrainedModel:
    """
    Fit one candidate.

    Args:
        kind: model family
        params: hyperparameters; only the fields relevant to kind are read
        X: (n, p) features
        y: 0/1 labels
        feature_names: column names, defaults to f0..f{p-1}
        seed: forest seed, ignored by the deterministic kinds

    Raises:
        TrainingError: degenerate matrix, or a classifier given one class
    """
    kind = ModelKind.parse(kind)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    _check_matrix(X, y)
    names = tuple(feature_names) if feature_names is not None else tuple(f"f{i}" for i in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise TrainingError(f"{len(names)} feature names for {X.shape[1]} columns")

    if kind.is_classifier and len(np.unique(y)) < 2:
        raise TrainingError(f"{kind.value} needs both classes in the training labels")

    if kind is ModelKind.DT_CLASSIFIER:
        structure = fit_tree(X, y, params.criterion or "gini", params.min_samples_split, params.max_depth)
    elif kind is ModelKind.DT_REGRESSOR:
        structure = fit_tree(X, y, params.criterion or "mse", params.min_samples_split, params.max_depth)
    elif kind is ModelKind.RF_CLASSIFIER:
        structure = fit_forest(X, y, params.criterion or "gini", params.n_estimators,
                               params.min_samples_split, params.max_depth, seed)
    else:
        structure = fit_linear(X, y, params.fit_intercept, params.normalize)
    logger.debug(f"Trained {kind.value} ({params.label(kind)}) on {len(y)} rows")
    return TrainedModel(kind, params, structure, names, seed)


def predict(model: TrainedModel, X) -> np.ndarray:
    """
    Raw model output: {0, 1} for the classifiers, continuous values for the
    regressor and the linear model.

    Raises:
        ArgumentError: feature count differs from training
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.n_features:
        raise ArgumentError(f"Model expects {model.n_features} features, got {X.shape[1]}")
    structure = model.structure
    if isinstance(structure, Forest):
        return structure.predict(X)
    if isinstance(structure, Tree):
        if model.kind.is_classifier:
            return structure.predict_class(X)
        return structure.predict_value(X)
    return structure.predict(X)


def classify(model: TrainedModel, X) -> np.ndarray:
    """0/1 classes; outputs at or above the 0.5 cutoff are attacks"""
    return (predict(model, X) >= model.threshold).astype(np.int64)


def evaluate(model: TrainedModel, X, y) -> EvalReport:
    """
    Detection metrics on a held-out set. RMSE is measured on the raw
    outputs, so regressors are scored before the cutoff.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(y) == 0:
        raise ArgumentError("evaluate needs a nonempty test set")
    raw = predict(model, X)
    classes = (raw >= model.threshold).astype(np.int64)
    return EvalReport.from_predictions(classes, y.astype(np.int64), rmse(raw, y))
