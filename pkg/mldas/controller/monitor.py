"""
Flow polling and batch verdicts.
"""

import bisect
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..config.schema import MonitorConfig
from ..errors import ContractError
from ..flows.model import FlowRecord
from ..ml.models import TrainedModel, predict

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    LEGITIMATE = "Legitimate"
    ATTACK = "Attack"


class RecordFeed:
    """
    The switches' flow statistics as the controller sees them: each poll
    returns the records exported since the previous poll.
    """

    def __init__(self, records: Sequence[FlowRecord]):
        self.records = sorted(records, key=lambda r: (r.timestamp, r.flow_id))
        self._timestamps = [record.timestamp for record in self.records]
        self.last_poll_ns = -1
        self._cursor = 0

    def __len__(self) -> int:
        return len(self.records)

    @property
    def exhausted(self) -> bool:
        return self._cursor >= len(self.records)

    @property
    def last_timestamp(self) -> float:
        return self._timestamps[-1] / 1e9 if self._timestamps else 0.0

    def poll(self, now: float) -> List[FlowRecord]:
        """Records with timestamps in (last poll, now]"""
        now_ns = int(round(now * 1e9))
        stop = bisect.bisect_right(self._timestamps, now_ns, lo=self._cursor)
        batch = self.records[self._cursor:stop]
        self._cursor = max(self._cursor, stop)
        self.last_poll_ns = max(self.last_poll_ns, now_ns)
        return batch


def poll(clock, feed: RecordFeed) -> List[FlowRecord]:
    """Poll the feed at the clock's current time"""
    return feed.poll(clock.seconds())


def verdict_of(classes, threshold: float) -> Tuple[Verdict, float]:
    """
    Score is the share of records classified legitimate; a score strictly
    below the threshold is an attack.
    """
    classes = np.asarray(classes, dtype=np.int64)
    score = float(np.mean(classes == 0)) if len(classes) else 1.0
    return (Verdict.ATTACK if score < threshold else Verdict.LEGITIMATE), score


@dataclass
class BatchVerdict:
    verdict: Verdict
    score: float
    classes: np.ndarray
    outputs: np.ndarray

    @property
    def attack_count(self) -> int:
        return int(np.sum(self.classes == 1))


def classify_batch(features, model: TrainedModel, config: MonitorConfig,
                   transform: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> BatchVerdict:
    """
    Classify one batch of feature rows with the active model.

    Args:
        features: (n, p) feature rows, n >= min_batch
        model: active candidate
        config: verdict threshold and batch size
        transform: optional hook applied to the raw outputs before the cutoff

    Raises:
        ContractError: fewer rows than min_batch
    """
    features = np.asarray(features, dtype=np.float64)
    if len(features) < config.min_batch:
        raise ContractError(f"classify_batch needs >= {config.min_batch} records, got {len(features)}")
    outputs = predict(model, features)
    if transform is not None:
        outputs = transform(outputs)
    classes = (outputs >= model.threshold).astype(np.int64)
    verdict, score = verdict_of(classes, config.verdict_threshold)
    return BatchVerdict(verdict, score, classes, outputs)
