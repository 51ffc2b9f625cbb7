"""
Prediction error and detection metrics.
"""

from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np

from ..errors import ArgumentError


def rmse(predictions, labels) -> float:
    """
    Root mean square error sqrt(mean((h - y)^2)).

    Raises:
        ArgumentError: the vectors differ in length or are empty
    """
    h = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if h.shape != y.shape:
        raise ArgumentError(f"rmse needs equal lengths, got {len(h)} and {len(y)}")
    if len(h) == 0:
        raise ArgumentError("rmse needs at least one value")
    return float(np.sqrt(np.mean((h - y) ** 2)))


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


@dataclass(frozen=True)
class EvalReport:
    """Confusion counts and the metrics derived from them. Attack is the positive class."""
    tp: int
    fp: int
    tn: int
    fn: int
    rmse: float

    @classmethod
    def from_predictions(cls, classes, labels, error: float) -> "EvalReport":
        classes = np.asarray(classes, dtype=np.int64).ravel()
        labels = np.asarray(labels, dtype=np.int64).ravel()
        if classes.shape != labels.shape:
            raise ArgumentError(f"Got {len(classes)} predictions for {len(labels)} labels")
        return cls(
            tp=int(np.sum((classes == 1) & (labels == 1))),
            fp=int(np.sum((classes == 1) & (labels == 0))),
            tn=int(np.sum((classes == 0) & (labels == 0))),
            fn=int(np.sum((classes == 0) & (labels == 1))),
            rmse=error,
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return _ratio(self.tp + self.tn, self.total)

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return _ratio(2 * p * r, p + r)

    @property
    def fpr(self) -> float:
        return _ratio(self.fp, self.fp + self.tn)

    @property
    def fnr(self) -> float:
        return _ratio(self.fn, self.fn + self.tp)

    def as_dict(self) -> Dict[str, float]:
        row = asdict(self)
        row.update(
            accuracy=self.accuracy, precision=self.precision, recall=self.recall,
            f1=self.f1, fpr=self.fpr, fnr=self.fnr,
        )
        return row
