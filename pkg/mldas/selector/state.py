"""
Selector data: candidate profiles, the mutable selector state with its
rolling (prediction, label) buffers, and the switch log.
"""

import json
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Deque, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from ..errors import ArgumentError, MissingModelsError, SchemaError
from ..ml.kinds import ModelKind
from ..ml.models import TrainedModel
from ..ml.serialization import FORMAT_VERSION, model_from_dict, model_to_dict

logger = logging.getLogger(__name__)

CANDIDATES_FILE = "models.json"


@dataclass(frozen=True)
class CandidateProfile:
    """What the selector knows about one candidate: error and cost"""
    kind: ModelKind
    rmse: float
    train_time: float
    pred_time: float
    model: Optional[TrainedModel] = None

    def __post_init__(self):
        if self.rmse < 0:
            raise ArgumentError(f"{self.kind.value}: rmse must be >= 0, got {self.rmse}")
        if self.train_time <= 0 or self.pred_time <= 0:
            raise ArgumentError(f"{self.kind.value}: train_time and pred_time must be > 0")

    def selection_key(self) -> Tuple[float, float, int]:
        return self.pred_time, self.train_time, self.kind.order

    def to_dict(self) -> dict:
        data = {
            "kind": self.kind.value,
            "rmse": self.rmse,
            "train_time": self.train_time,
            "pred_time": self.pred_time,
        }
        if self.model is not None:
            data["model"] = model_to_dict(self.model)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "CandidateProfile":
        model = model_from_dict(data["model"]) if "model" in data else None
        return cls(ModelKind(data["kind"]), float(data["rmse"]), float(data["train_time"]),
                   float(data["pred_time"]), model)


@dataclass(frozen=True)
class SwitchEvent:
    flow_counter: int
    from_kind: ModelKind
    to_kind: ModelKind
    reason: str
    rmse_roll: float
    acc_roll: float

    def as_row(self) -> dict:
        row = asdict(self)
        row["from_kind"] = self.from_kind.value
        row["to_kind"] = self.to_kind.value
        return row


def rolling_rmse(pairs: Iterable[Tuple[float, int]]) -> float:
    pairs = list(pairs)
    if not pairs:
        return 0.0
    values = np.asarray(pairs, dtype=np.float64)
    return float(np.sqrt(np.mean((values[:, 0] - values[:, 1]) ** 2)))


def rolling_accuracy(pairs: Iterable[Tuple[float, int]]) -> float:
    pairs = list(pairs)
    if not pairs:
        return 1.0
    values = np.asarray(pairs, dtype=np.float64)
    return float(np.mean((values[:, 0] >= 0.5) == (values[:, 1] >= 0.5)))


@dataclass
class SelectorState:
    """
    State of the selection loop. Every candidate keeps its own rolling
    buffer of (raw prediction, label) pairs; the active buffer is the
    current model's.
    """
    current: ModelKind
    window_w: int
    s_min: float
    rmse_current: float = 0.0
    last_switch: int = 0
    flows_processed: int = 0
    periodic_due: bool = False
    reevaluations: int = 0
    buffers: Dict[ModelKind, Deque[Tuple[float, int]]] = field(default_factory=dict)
    switch_log: List[SwitchEvent] = field(default_factory=list)

    def buffer_of(self, kind: ModelKind) -> Deque[Tuple[float, int]]:
        if kind not in self.buffers:
            self.buffers[kind] = deque(maxlen=self.window_w)
        return self.buffers[kind]

    @property
    def buffer(self) -> Deque[Tuple[float, int]]:
        return self.buffer_of(self.current)

    @property
    def rmse_roll(self) -> float:
        return rolling_rmse(self.buffer)

    @property
    def acc_roll(self) -> float:
        return rolling_accuracy(self.buffer)

    def rmse_of(self, kind: ModelKind) -> float:
        return rolling_rmse(self.buffer_of(kind))

    def snapshot(self) -> dict:
        return {
            "current": self.current.value,
            "flows_processed": self.flows_processed,
            "last_switch": self.last_switch,
            "rmse_current": self.rmse_current,
            "rmse_roll": self.rmse_roll,
            "acc_roll": self.acc_roll,
            "switches": len(self.switch_log),
            "reevaluations": self.reevaluations,
        }


def save_candidates(profiles: Iterable[CandidateProfile], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        "format_version": FORMAT_VERSION,
        "candidates": [profile.to_dict() for profile in profiles],
    }
    path.write_text(json.dumps(document), encoding="utf-8")
    logger.info(f"Saved {len(document['candidates'])} candidates to {path}")
    return path


def load_candidates(path: Union[str, Path]) -> List[CandidateProfile]:
    """
    Raises:
        MissingModelsError: nothing trained at path
        SchemaError: the file is not a candidates document
    """
    path = Path(path)
    if path.is_dir():
        path = path / CANDIDATES_FILE
    if not path.exists():
        raise MissingModelsError(f"No trained models at {path}; run 'mldas train' first")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {e}")
    if document.get("format_version") != FORMAT_VERSION:
        raise SchemaError(f"Unsupported candidates format version {document.get('format_version')}")
    profiles = [CandidateProfile.from_dict(item) for item in document.get("candidates", [])]
    if not profiles:
        raise MissingModelsError(f"{path} holds no candidates; run 'mldas train' first")
    return profiles
