"""
Injected prediction degradation.

Bursts of `duration` flows every `period` flows, starting at a seeded
offset. Inside a burst, predictions of the listed kinds flip (p -> 1 - p)
with probability `error_rate`.
"""

import logging

import numpy as np

from ..config.schema import DegradationConfig
from ..ml.kinds import ModelKind

logger = logging.getLogger(__name__)


class DegradationInjector:

    def __init__(self, config: DegradationConfig, seed: int = 0):
        self.config = config
        self.rng = np.random.default_rng([seed, 0xDE6])
        self.offset = int(self.rng.integers(0, config.period - config.duration + 1))
        self._draws = {kind: np.random.default_rng([seed, kind.order]) for kind in ModelKind}
        logger.debug(f"Degradation bursts every {config.period} flows from offset {self.offset}")

    def in_burst(self, flow_index) -> np.ndarray:
        index = np.asarray(flow_index, dtype=np.int64)
        return (index >= self.offset) & ((index - self.offset) % self.config.period < self.config.duration)

    def apply(self, kind: ModelKind, first_flow: int, predictions) -> np.ndarray:
        """
        Possibly degraded copy of a batch of predictions whose first flow
        has index first_flow.
        """
        predictions = np.asarray(predictions, dtype=np.float64).copy()
        # draw for every flow so the stream does not depend on burst timing
        draws = self._draws[kind].random(len(predictions))
        if not self.config.enabled or kind not in self.config.kinds:
            return predictions
        flip = self.in_burst(np.arange(first_flow, first_flow + len(predictions))) & (draws < self.config.error_rate)
        predictions[flip] = 1.0 - predictions[flip]
        return predictions
