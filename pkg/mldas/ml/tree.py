"""
CART decision trees grown greedily with numpy.

Every candidate threshold of a node is scored in one vectorized pass: rows
are sorted per feature and the criterion is evaluated on cumulative sums at
each boundary between distinct values. Trees are stored as flat arrays.

Criteria, as totals over a node of n rows with label sum s:
    gini      2 s (n - s) / n                   (binary labels)
    entropy   n * H(s / n), H in bits           (binary labels)
    mse       sum(y^2) - s^2 / n
    poisson   sum(y log y) - s log(s / n), 0 when s = 0
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import ArgumentError

logger = logging.getLogger(__name__)

LEAF = -1
TIE_EPS = 1e-12


def _xlog(x: np.ndarray, base_log=np.log) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x * base_log(np.where(x > 0, x, 1.0)), 0.0)


def node_totals(criterion: str, n, s, sq, ylogy):
    """Total impurity of nodes with n rows, label sum s and square sum sq"""
    if criterion == "gini":
        return 2.0 * s * (n - s) / n
    if criterion == "entropy":
        p = s / n
        return -n * (_xlog(p, np.log2) + _xlog(1.0 - p, np.log2))
    if criterion == "mse":
        return np.maximum(sq - s * s / n, 0.0)
    if criterion == "poisson":
        return np.maximum(ylogy - _xlog(s) + s * np.log(n), 0.0)
    raise ArgumentError(f"Unknown split criterion '{criterion}'")


@dataclass
class Tree:
    """Fitted tree as parallel node arrays; children are node ids, leaves have feature -1"""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    samples: np.ndarray
    impurity: np.ndarray
    n_features: int
    criterion: str

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def leaf_count(self) -> int:
        return int(np.sum(self.feature == LEAF))

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max()) if self.node_count else 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf id reached by every row"""
        X = np.asarray(X, dtype=np.float64)
        nodes = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[nodes] != LEAF
        while np.any(active):
            r, n = rows[active], nodes[active]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            nodes[r] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[nodes] != LEAF
        return nodes

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_value(X) >= 0.5).astype(np.float64)

    def impurity_decrease(self) -> np.ndarray:
        """Weighted impurity decrease per feature, unnormalized"""
        decrease = np.zeros(self.n_features)
        root = self.samples[0] if self.node_count else 1
        for node in np.flatnonzero(self.feature != LEAF):
            left, right = self.left[node], self.right[node]
            drop = (self.samples[node] * self.impurity[node]
                    - self.samples[left] * self.impurity[left]
                    - self.samples[right] * self.impurity[right])
            decrease[self.feature[node]] += max(drop, 0.0) / root
        return decrease


class _Grower:
    def __init__(self, X: np.ndarray, y: np.ndarray, criterion: str, min_samples_split: int,
                 max_depth: Optional[int], max_features: Optional[int], rng: Optional[np.random.Generator]):
        self.X = X
        self.y = y
        self.sq = y * y
        self.ylogy = _xlog(y)
        self.criterion = criterion
        self.min_samples_split = min_samples_split
        self.max_depth = max_depth
        self.max_features = max_features
        self.rng = rng
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []
        self.samples: List[int] = []
        self.impurity: List[float] = []

    def _add(self, idx: np.ndarray) -> int:
        n = len(idx)
        s = float(self.y[idx].sum())
        total = float(node_totals(self.criterion, float(n), s, float(self.sq[idx].sum()),
                                  float(self.ylogy[idx].sum())))
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(s / n)
        self.samples.append(n)
        self.impurity.append(total / n)
        return len(self.feature) - 1

    def _scan(self, idx: np.ndarray, features: np.ndarray):
        """Best (gain, feature, threshold) over the given features, or None"""
        n = len(idx)
        Xn = self.X[np.ix_(idx, features)]
        order = np.argsort(Xn, axis=0, kind="stable")
        xs = np.take_along_axis(Xn, order, axis=0)
        ys, sqs, yls = self.y[idx][order], self.sq[idx][order], self.ylogy[idx][order]

        cs, csq, cyl = (np.cumsum(a, axis=0)[:-1] for a in (ys, sqs, yls))
        s, sq, yl = ys[:, 0].sum(), sqs[:, 0].sum(), yls[:, 0].sum()
        nl = np.arange(1, n, dtype=np.float64)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            parent = node_totals(self.criterion, float(n), s, sq, yl)
            gains = (parent
                     - node_totals(self.criterion, nl, cs, csq, cyl)
                     - node_totals(self.criterion, n - nl, s - cs, sq - csq, yl - cyl))
        gains = np.where(xs[1:] > xs[:-1], gains, -np.inf)

        best = None
        for column, feature in enumerate(features):
            column_gains = gains[:, column]
            top = column_gains.max()
            if not np.isfinite(top) or (best is not None and top <= best[0] + TIE_EPS):
                continue
            position = int(np.argmax(column_gains >= top - TIE_EPS))
            low, high = xs[position, column], xs[position + 1, column]
            threshold = (low + high) / 2.0
            if threshold >= high:
                threshold = low
            best = (float(top), int(feature), float(threshold))
        return best

    def _candidates(self) -> np.ndarray:
        p = self.X.shape[1]
        if self.max_features is None or self.max_features >= p:
            return np.arange(p)
        return np.sort(self.rng.choice(p, self.max_features, replace=False))

    def grow(self) -> Tree:
        root_idx = np.arange(len(self.y))
        stack = [(self._add(root_idx), root_idx, 0)]
        while stack:
            node, idx, depth = stack.pop()
            if (len(idx) < self.min_samples_split
                    or (self.max_depth is not None and depth >= self.max_depth)
                    or self.impurity[node] <= TIE_EPS):
                continue
            features = self._candidates()
            best = self._scan(idx, features)
            if best is None and len(features) < self.X.shape[1]:
                # sampled features are constant here, fall back to the rest
                best = self._scan(idx, np.setdiff1d(np.arange(self.X.shape[1]), features))
            if best is None:
                continue
            _, feature, threshold = best
            mask = self.X[idx, feature] <= threshold
            left_idx, right_idx = idx[mask], idx[~mask]
            self.feature[node] = feature
            self.threshold[node] = threshold
            self.left[node] = self._add(left_idx)
            self.right[node] = self._add(right_idx)
            stack.append((self.right[node], right_idx, depth + 1))
            stack.append((self.left[node], left_idx, depth + 1))

        return Tree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            value=np.array(self.value, dtype=np.float64),
            samples=np.array(self.samples, dtype=np.int64),
            impurity=np.array(self.impurity, dtype=np.float64),
            n_features=self.X.shape[1],
            criterion=self.criterion,
        )


def fit_tree(X, y, criterion: str = "gini", min_samples_split: int = 2, max_depth: Optional[int] = None,
             max_features: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> Tree:
    """
    Grow a CART tree.

    Nodes split until pure, smaller than min_samples_split, at max_depth or
    constant in every feature. Ties in gain (within 1e-12) go to the lowest
    feature index, then the lowest threshold.

    Args:
        X: (n, p) feature matrix
        y: labels; 0/1 for gini and entropy, nonnegative for poisson
        max_features: features drawn per split (None for all)
        rng: generator for the feature draw
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ArgumentError(f"fit_tree needs an (n, p) matrix and n labels, got {X.shape} and {y.shape}")
    if criterion == "poisson" and np.any(y < 0):
        raise ArgumentError("poisson criterion needs nonnegative labels")
    if max_features is not None and rng is None:
        rng = np.random.default_rng(0)
    tree = _Grower(X, y, criterion, min_samples_split, max_depth, max_features, rng).grow()
    logger.debug(f"Grew {criterion} tree: {tree.node_count} nodes, depth {tree.depth}")
    return tree


def stack_predictions(trees: Sequence[Tree], X: np.ndarray) -> np.ndarray:
    """(n_trees, n) matrix of hard class votes"""
    return np.vstack([tree.predict_class(X) for tree in trees])
