"""
Mean decrease in impurity for the tree-based candidates.
"""

from typing import Sequence

import numpy as np
import pandas as pd

from ..errors import ArgumentError
from .forest import Forest
from .models import TrainedModel
from .tree import Tree


def _normalized(values: np.ndarray) -> np.ndarray:
    total = values.sum()
    return values / total if total > 0 else values


def gini_importance(model: TrainedModel) -> np.ndarray:
    """
    Weighted impurity decrease per feature, normalized within each tree,
    averaged over the trees and normalized to sum to one. A tree that never
    splits contributes zeros.

    Raises:
        ArgumentError: the model is not tree based
    """
    structure = model.structure
    if isinstance(structure, Forest):
        trees = structure.trees
    elif isinstance(structure, Tree):
        trees = [structure]
    else:
        raise ArgumentError(f"{model.kind.value} has no impurity-based importance")
    per_tree = np.vstack([_normalized(tree.impurity_decrease()) for tree in trees])
    return _normalized(per_tree.mean(axis=0))


def rank_features(importances: Sequence[float], names: Sequence[str]) -> pd.DataFrame:
    """Features by decreasing importance; equal scores keep column order"""
    importances = np.asarray(importances, dtype=np.float64)
    if len(importances) != len(names):
        raise ArgumentError(f"{len(importances)} importances for {len(names)} features")
    order = np.argsort(-importances, kind="stable")
    return pd.DataFrame({
        "rank": np.arange(1, len(order) + 1),
        "feature": [names[i] for i in order],
        "importance": importances[order],
    })
