"""
Candidate models, metrics and the validation harness.
"""

from .importance import gini_importance, rank_features
from .kinds import DEFAULT_PARAMS, SHORT_NAMES, Hyperparams, ModelKind
from .metrics import EvalReport, rmse
from .models import TrainedModel, classify, evaluate, predict, train
from .serialization import load_model, model_from_dict, model_to_dict, save_model
from .validation import CVResult, GridResult, fold_bounds, grid_search, kfold_cv, measure_latency

__all__ = [
    "CVResult",
    "DEFAULT_PARAMS",
    "EvalReport",
    "GridResult",
    "Hyperparams",
    "ModelKind",
    "SHORT_NAMES",
    "TrainedModel",
    "classify",
    "evaluate",
    "fold_bounds",
    "gini_importance",
    "grid_search",
    "kfold_cv",
    "load_model",
    "measure_latency",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "rank_features",
    "rmse",
    "save_model",
    "train",
]
