"""
Chronological train/test split and 1:1 class-balanced batching.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..config.schema import SplitSpec
from ..errors import BalanceError, ConfigError, OrderingError, SplitError
from ..flows.model import NSEC_PER_SEC
from ..traffic.schedule import AttackSchedule

logger = logging.getLogger(__name__)

Rows = Union[pd.DataFrame, Sequence]


@dataclass
class SplitResult:
    """The two partitions and the legitimate share of each"""
    train: Rows
    test: Rows
    train_legit_fraction: float
    test_legit_fraction: float
    global_legit_fraction: float

    @property
    def sizes(self):
        return len(self.train), len(self.test)


def labels_of(rows: Rows) -> np.ndarray:
    if isinstance(rows, pd.DataFrame):
        return rows["label"].to_numpy(dtype=np.int64)
    return np.array([row.label for row in rows], dtype=np.int64)


def timestamps_of(rows: Rows) -> np.ndarray:
    """
    Row times in nanoseconds. Prepared rows carry no timestamp, so their
    times are the running sum of inner_time_flow.
    """
    if isinstance(rows, pd.DataFrame):
        if "timestamp" in rows.columns:
            return rows["timestamp"].to_numpy(dtype=np.int64)
        gaps = rows["inner_time_flow"].to_numpy(dtype=np.float64)
    elif rows and hasattr(rows[0], "timestamp"):
        return np.array([row.timestamp for row in rows], dtype=np.int64)
    else:
        gaps = np.array([row.inner_time_flow for row in rows], dtype=np.float64)
    return np.round(np.cumsum(gaps) * NSEC_PER_SEC).astype(np.int64)


def _take(rows: Rows, start: int, stop: int) -> Rows:
    if isinstance(rows, pd.DataFrame):
        return rows.iloc[start:stop]
    return list(rows[start:stop])


def _legit_fraction(labels: np.ndarray) -> float:
    return float(np.mean(labels == 0)) if len(labels) else 0.0


def chronological_split(rows: Rows, spec: SplitSpec = None,
                        schedule: Optional[AttackSchedule] = None) -> SplitResult:
    """
    First floor(train_fraction * n) rows train, the rest test. Rows keep
    their order.

    Args:
        rows: timestamp-sorted records, prepared rows or a dataset frame
        spec: split settings
        schedule: attack schedule for the session check; skipped when None

    Returns:
        SplitResult

    Raises:
        OrderingError: rows are not in time order
        SplitError: a partition's class ratio drifts beyond the tolerance or
            an attack session has rows on both sides
    """
    spec = spec or SplitSpec()
    n = len(rows)
    timestamps = timestamps_of(rows)
    if n > 1 and np.any(np.diff(timestamps) < 0):
        raise OrderingError("chronological_split needs timestamp-sorted rows")

    n_train = int(np.floor(spec.train_fraction * n))
    labels = labels_of(rows)
    overall = _legit_fraction(labels)
    train_fraction = _legit_fraction(labels[:n_train])
    test_fraction = _legit_fraction(labels[n_train:])

    tolerance = spec.tolerance_pp / 100.0
    for name, fraction, size in (("train", train_fraction, n_train), ("test", test_fraction, n - n_train)):
        if size and abs(fraction - overall) > tolerance:
            raise SplitError(
                f"{name} partition legitimate fraction {fraction:.4f} differs from the overall "
                f"{overall:.4f} by more than {spec.tolerance_pp} pp"
            )

    if spec.check_sessions and schedule is not None and 0 < n_train < n:
        last_train, first_test = int(timestamps[n_train - 1]), int(timestamps[n_train])
        for entry in schedule:
            if entry.start_ns <= last_train and entry.end_ns >= first_test:
                raise SplitError(
                    f"Attack session {entry.session} straddles the train/test boundary",
                    session=entry.session,
                )

    logger.info(
        f"Split {n} rows into {n_train} train / {n - n_train} test "
        f"(legitimate {train_fraction:.3f} / {test_fraction:.3f}, overall {overall:.3f})"
    )
    return SplitResult(_take(rows, 0, n_train), _take(rows, n_train, n), train_fraction, test_fraction, overall)


def batch_indices(labels: Sequence[int], batch_size: int, seed: int = 0) -> List[np.ndarray]:
    """
    Index batches holding batch_size / 2 rows of each class.

    The majority class is drawn without replacement, so the number of
    batches is its size // (batch_size / 2). The minority pool is
    reshuffled and reused whenever it runs out.

    Raises:
        ConfigError: batch_size is not a positive even number
        BalanceError: a class is absent
    """
    if batch_size < 2 or batch_size % 2:
        raise ConfigError(f"batch_size must be a positive even number, got {batch_size}")
    labels = np.asarray(labels)
    pools = [np.flatnonzero(labels == cls) for cls in (0, 1)]
    for cls, pool in enumerate(pools):
        if not len(pool):
            raise BalanceError(f"No rows of class {cls} to balance against")

    rng = np.random.default_rng(seed)
    half = batch_size // 2
    major, minor = sorted(pools, key=len, reverse=True)
    major = rng.permutation(major)
    n_batches = len(major) // half

    needed = n_batches * half
    cycles = [rng.permutation(minor) for _ in range(-(-needed // len(minor)))]
    minor_stream = np.concatenate(cycles) if cycles else np.empty(0, dtype=np.int64)

    batches = []
    for b in range(n_batches):
        chosen = np.concatenate((major[b * half:(b + 1) * half], minor_stream[b * half:(b + 1) * half]))
        batches.append(np.sort(chosen))
    logger.debug(f"{n_batches} balanced batches of {batch_size}")
    return batches


def balanced_batches(rows: Rows, batch_size: int, seed: int = 0) -> List[Rows]:
    """Row batches with a 1:1 class ratio (see batch_indices)"""
    batches = batch_indices(labels_of(rows), batch_size, seed)
    if isinstance(rows, pd.DataFrame):
        return [rows.iloc[indices] for indices in batches]
    return [[rows[i] for i in indices] for indices in batches]
