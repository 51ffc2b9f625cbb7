"""
Drive the selector over a labelled stream of per-candidate predictions.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..config.schema import SelectorConfig
from ..errors import ContractError
from ..ml.kinds import ModelKind
from .degradation import DegradationInjector
from .mldas import step
from .state import CandidateProfile, SelectorState

logger = logging.getLogger(__name__)


class LabelQueue:
    """
    Holds classified flows until their ground truth is released, `lag`
    flows after they were classified.
    """

    def __init__(self, lag: int = 0):
        self.lag = lag
        self._pending: Deque[Tuple[Dict[ModelKind, float], int]] = deque()

    def __len__(self) -> int:
        return len(self._pending)

    def push(self, predictions: Dict[ModelKind, np.ndarray], labels: Sequence[int]) -> None:
        kinds = list(predictions)
        for index, label in enumerate(labels):
            self._pending.append(({kind: float(predictions[kind][index]) for kind in kinds}, int(label)))

    def release(self) -> Optional[Tuple[Dict[ModelKind, np.ndarray], np.ndarray]]:
        """Flows whose labels are due, as (predictions per kind, labels), or None"""
        ready = len(self._pending) - self.lag
        if ready <= 0:
            return None
        items = [self._pending.popleft() for _ in range(ready)]
        kinds = list(items[0][0])
        predictions = {kind: np.array([item[0][kind] for item in items]) for kind in kinds}
        return predictions, np.array([item[1] for item in items], dtype=np.int64)


@dataclass
class ReplayResult:
    state: SelectorState
    active: List[ModelKind] = field(default_factory=list)
    outputs: List[np.ndarray] = field(default_factory=list)

    @property
    def predictions(self) -> np.ndarray:
        """Raw outputs of whichever model was active for each batch"""
        return np.concatenate(self.outputs) if self.outputs else np.empty(0)

    def switch_spacing(self) -> List[int]:
        counters = [event.flow_counter for event in self.state.switch_log]
        return [b - a for a, b in zip(counters, counters[1:])]


def replay(state: SelectorState, profiles: Sequence[CandidateProfile], stream: Dict[ModelKind, np.ndarray],
           labels, config: SelectorConfig, batch_size: int = 100,
           degradation: Optional[DegradationInjector] = None, progress: bool = False) -> ReplayResult:
    """
    Feed the stream in batches: the active model's output is taken for the
    batch, then all candidates' outputs and the labels go to the selector
    (after label_lag flows).

    Args:
        state: starting state, mutated in place
        profiles: candidate profiles for re-scoring
        stream: every candidate's raw predictions, equal lengths
        labels: ground truth for the stream
        degradation: optional injector applied before anything sees the predictions
    """
    labels = np.asarray(labels, dtype=np.int64).ravel()
    kinds = [profile.kind for profile in profiles]
    for kind in kinds:
        if kind not in stream or len(stream[kind]) != len(labels):
            raise ContractError(f"Stream lacks a full prediction vector for {kind.value}")

    queue = LabelQueue(config.label_lag)
    result = ReplayResult(state)
    for start in tqdm(range(0, len(labels), batch_size), desc="Replay", ncols=100, disable=not progress):
        stop = min(start + batch_size, len(labels))
        batch = {kind: np.asarray(stream[kind][start:stop], dtype=np.float64) for kind in kinds}
        if degradation is not None:
            batch = {kind: degradation.apply(kind, start, values) for kind, values in batch.items()}
        result.active.append(state.current)
        result.outputs.append(batch[state.current])

        queue.push(batch, labels[start:stop])
        released = queue.release()
        if released is not None:
            step(state, profiles, released[0], released[1], config)
    logger.info(
        f"Replayed {len(labels)} flows: {len(state.switch_log)} switches, final model {state.current.value}"
    )
    return result
