"""
Versioned JSON form of trained models.

Layout (format_version 1):
    {"format_version": 1, "kind": <ModelKind value>, "params": {...},
     "feature_names": [...], "seed": int, "threshold": float,
     "structure": {"type": "tree" | "forest" | "linear", ...}}

Trees store their node arrays as lists. Floats go through Python's
shortest round-trip repr, so a model loads back bit-identical.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from ..errors import SchemaError
from .forest import Forest
from .kinds import Hyperparams, ModelKind
from .linear import LinearModel
from .models import TrainedModel
from .tree import Tree

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

_TREE_ARRAYS = {
    "feature": np.int64,
    "threshold": np.float64,
    "left": np.int64,
    "right": np.int64,
    "value": np.float64,
    "samples": np.int64,
    "impurity": np.float64,
}


def _tree_to_dict(tree: Tree) -> Dict[str, Any]:
    data = {name: getattr(tree, name).tolist() for name in _TREE_ARRAYS}
    data.update(n_features=tree.n_features, criterion=tree.criterion)
    return data


def _tree_from_dict(data: Dict[str, Any]) -> Tree:
    arrays = {name: np.asarray(data[name], dtype=dtype) for name, dtype in _TREE_ARRAYS.items()}
    return Tree(**arrays, n_features=int(data["n_features"]), criterion=data["criterion"])


def _structure_to_dict(structure) -> Dict[str, Any]:
    if isinstance(structure, Forest):
        return {"type": "forest", "n_features": structure.n_features,
                "trees": [_tree_to_dict(tree) for tree in structure.trees]}
    if isinstance(structure, Tree):
        return {"type": "tree", **_tree_to_dict(structure)}
    return {
        "type": "linear",
        "coef": structure.coef.tolist(),
        "intercept": structure.intercept,
        "mean": structure.mean.tolist(),
        "scale": structure.scale.tolist(),
        "fit_intercept": structure.fit_intercept,
        "normalize": structure.normalize,
    }


def _structure_from_dict(data: Dict[str, Any]):
    kind = data.get("type")
    if kind == "forest":
        return Forest([_tree_from_dict(tree) for tree in data["trees"]], int(data["n_features"]))
    if kind == "tree":
        return _tree_from_dict(data)
    if kind == "linear":
        return LinearModel(
            coef=np.asarray(data["coef"], dtype=np.float64),
            intercept=float(data["intercept"]),
            mean=np.asarray(data["mean"], dtype=np.float64),
            scale=np.asarray(data["scale"], dtype=np.float64),
            fit_intercept=bool(data["fit_intercept"]),
            normalize=bool(data["normalize"]),
        )
    raise SchemaError(f"Unknown model structure type: {kind}")


def model_to_dict(model: TrainedModel) -> Dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.kind.value,
        "params": model.params.model_dump(),
        "feature_names": list(model.feature_names),
        "seed": model.seed,
        "threshold": model.threshold,
        "structure": _structure_to_dict(model.structure),
    }


def model_from_dict(data: Dict[str, Any]) -> TrainedModel:
    """
    Raises:
        SchemaError: unknown format version or malformed document
    """
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise SchemaError(f"Unsupported model format version {version} (expected {FORMAT_VERSION})")
    try:
        return TrainedModel(
            kind=ModelKind(data["kind"]),
            params=Hyperparams(**data["params"]),
            structure=_structure_from_dict(data["structure"]),
            feature_names=tuple(data["feature_names"]),
            seed=int(data["seed"]),
            threshold=float(data["threshold"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"Malformed model document: {e}")


def save_model(model: TrainedModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model)), encoding="utf-8")
    logger.debug(f"Saved {model.kind.value} to {path}")
    return path


def load_model(path: Union[str, Path]) -> TrainedModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {e}")
    return model_from_dict(data)
