"""
Random forest of CART classifiers: bootstrap rows, ceil(sqrt(p)) features
per split, majority vote.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .tree import Tree, fit_tree, stack_predictions

logger = logging.getLogger(__name__)


@dataclass
class Forest:
    trees: List[Tree] = field(default_factory=list)
    n_features: int = 0

    def __len__(self) -> int:
        return len(self.trees)

    def vote_share(self, X: np.ndarray) -> np.ndarray:
        """Fraction of trees voting attack"""
        return stack_predictions(self.trees, X).mean(axis=0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        # even splits of the vote go to the attack class
        return (self.vote_share(X) >= 0.5).astype(np.float64)


def fit_forest(X, y, criterion: str = "gini", n_estimators: int = 2, min_samples_split: int = 2,
               max_depth: Optional[int] = None, seed: int = 0) -> Forest:
    """
    Each tree draws its bootstrap sample and split features from its own
    generator seeded by (seed, tree index), so a forest is reproducible
    tree by tree.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = X.shape
    max_features = max(1, math.ceil(math.sqrt(p)))
    trees = []
    for index in range(n_estimators):
        rng = np.random.default_rng([seed, index])
        rows = rng.integers(0, n, n)
        trees.append(fit_tree(X[rows], y[rows], criterion, min_samples_split, max_depth, max_features, rng))
    logger.debug(f"Fitted forest of {n_estimators} {criterion} trees ({max_features} features per split)")
    return Forest(trees, p)
